#pragma once

#include "agasdf/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace agasdf {

enum class SourceKind { Acoustic, Acceleration, Synthetic };

/// Uniformly sampled real time series. Non-empty, finite, positive sample rate.
class Signal {
 public:
  Signal(Eigen::VectorXd samples, double sample_rate_hz, SourceKind kind = SourceKind::Synthetic);

  const Eigen::VectorXd& samples() const { return samples_; }
  double sample_rate_hz() const { return sample_rate_hz_; }
  SourceKind kind() const { return kind_; }
  Index size() const { return samples_.size(); }

 private:
  Eigen::VectorXd samples_;
  double sample_rate_hz_;
  SourceKind kind_;
};

/// Truncates both channels to the shorter length. Rejects differing sample rates.
std::pair<Signal, Signal> pair_align(const Signal& acoustic, const Signal& acceleration);

/// Population z-score. Inputs with std below 1e-12 map to all zeros.
Signal zscore_normalize(const Signal& s);

/// Contiguous equal-width bands; the first (size mod n) bands get one extra sample.
std::vector<Signal> split_into_bands(const Signal& s, int n_bands);

struct PaddedSignal {
  Eigen::VectorXd samples;
  Index valid_length;
};

/// Appends zeros up to `target`, remembering the original length.
PaddedSignal pad_to_length(const Eigen::VectorXd& s, Index target);

/// 20 log10(max(x, 1e-12)).
double to_decibels(double x);

inline constexpr double kDecibelFloor = 1e-12;

}  // namespace agasdf
