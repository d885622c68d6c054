#pragma once

#include "agasdf/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace agasdf {

inline constexpr double kDefaultSharpness = 10.0;
inline constexpr double kDefaultBias = 0.5;
/// exp() arguments are clamped to +/- this value.
inline constexpr double kExpSaturation = 40.0;

template <typename Scalar>
Scalar saturated_sigmoid(Scalar z) {
  const Scalar c = std::clamp(z, Scalar(-kExpSaturation), Scalar(kExpSaturation));
  return Scalar(1) / (Scalar(1) + std::exp(-c));
}

template <typename Scalar>
struct HardThresholdDerivatives {
  Scalar value;
  Scalar d_x;
  Scalar d_b_plus;
  Scalar d_b_minus;
};

namespace detail {

// Evaluates the gate for x >= 0; negative inputs are handled by odd reflection so that
// HT(-x) == -HT(x) holds bit-for-bit when b_plus == b_minus.
template <typename Scalar>
HardThresholdDerivatives<Scalar> hard_threshold_nonneg(Scalar x, Scalar b_plus, Scalar b_minus, Scalar alpha) {
  const Scalar p = alpha * (x + b_minus);
  const Scalar q = alpha * (x - b_plus);
  const Scalar u = saturated_sigmoid(-p);
  const Scalar v = saturated_sigmoid(q);
  // sigma(-p) + sigma(p) == 1; keep it exact so zero biases give the identity.
  const Scalar gate = (p == q) ? Scalar(1) : u + v;
  const Scalar du = u * (Scalar(1) - u);
  const Scalar dv = v * (Scalar(1) - v);
  return {x * gate, gate + x * alpha * (dv - du), -x * alpha * dv, -x * alpha * du};
}

}  // namespace detail

/// HT(x) = x [ 1/(1+exp(alpha(x+b_minus))) + 1/(1+exp(-alpha(x-b_plus))) ] with partials.
template <typename Scalar>
HardThresholdDerivatives<Scalar> hard_threshold_derivatives(Scalar x, Scalar b_plus, Scalar b_minus,
                                                            Scalar alpha = Scalar(kDefaultSharpness)) {
  if (x >= Scalar(0)) return detail::hard_threshold_nonneg(x, b_plus, b_minus, alpha);
  // HT(x; b+, b-) = -HT(-x; b-, b+)
  const auto r = detail::hard_threshold_nonneg(-x, b_minus, b_plus, alpha);
  return {-r.value, r.d_x, -r.d_b_minus, -r.d_b_plus};
}

template <typename Scalar>
Scalar hard_threshold(Scalar x, Scalar b_plus, Scalar b_minus, Scalar alpha = Scalar(kDefaultSharpness)) {
  return hard_threshold_derivatives(x, b_plus, b_minus, alpha).value;
}

struct ThresholdParams {
  double b_plus = kDefaultBias;
  double b_minus = kDefaultBias;
};

/// Amplitude statistics of the training signals before per-signal z-scoring.
struct NormalizationStats {
  std::string scheme = "per_signal_zscore";
  double mean_of_means = 0.0;
  double mean_of_stds = 1.0;
  long long count = 0;
};

/// Learnable cascade: one kernel per layer (low-pass; the high-pass is its QMF) and one
/// (b+, b-) pair per detail layer plus one for the final approximation.
struct DespawnModel {
  std::vector<Kernel<double>> kernels;
  std::vector<ThresholdParams> thresholds;
  double alpha = kDefaultSharpness;
  NormalizationStats normalization;

  int depth() const { return static_cast<int>(kernels.size()); }

  /// db4 kernels at every layer and every bias set to `bias`.
  static DespawnModel initialized(int depth, double bias = kDefaultBias);

  void validate() const;

  Index parameter_count() const;
  /// Kernel taps layer by layer, then (b_plus, b_minus) per band.
  Eigen::VectorXd pack() const;
  void unpack(const Eigen::VectorXd& params);
  std::string parameter_name(Index i) const;
};

/// Learnable FDWT followed by hard thresholding of every d^l and of a^L.
/// Intermediate approximations feed the next layer unthresholded.
CoefficientPyramid<double> encode(const Eigen::VectorXd& s, const DespawnModel& m, Index valid_length = -1);

/// Synthesis cascade tied to the model kernels; no activations.
Eigen::VectorXd decode(const CoefficientPyramid<double>& p, const DespawnModel& m);

}  // namespace agasdf
