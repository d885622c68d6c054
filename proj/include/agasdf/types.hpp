#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace agasdf {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Index = Eigen::Index;

/// Bad input, bad configuration, or a violated precondition. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite value. The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TrackClass : int { NoDegradation = 0, Intermediate = 1, Severe = 2 };
inline constexpr int kNumClasses = 3;

inline std::string to_string(TrackClass c) {
  switch (c) {
    case TrackClass::NoDegradation: return "no_degradation";
    case TrackClass::Intermediate: return "intermediate";
    case TrackClass::Severe: return "severe";
  }
  return "unknown";
}

inline TrackClass track_class_from_string(const std::string& s) {
  if (s == "no_degradation") return TrackClass::NoDegradation;
  if (s == "intermediate") return TrackClass::Intermediate;
  if (s == "severe") return TrackClass::Severe;
  throw ValidationError("unknown class label '" + s + "'");
}

inline bool is_valid_speed(int kmh) { return kmh == 20 || kmh == 40 || kmh == 60 || kmh == 80; }

}  // namespace agasdf
