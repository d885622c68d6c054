#pragma once

#include "agasdf/despawn.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace agasdf {

enum class LossKind { Despawn, Agasdf };

LossKind loss_kind_from_string(const std::string& s);
std::string to_string(LossKind k);

/// Weight of the reconstruction term and of the regularizer (sparsity or guidance).
struct LossWeights {
  double w_recon = 1.0;
  double w_guide = 1.0;

  void validate() const;
  /// Parses "R:G", e.g. "1:0.5".
  static LossWeights parse(const std::string& ratio);
  std::string to_string() const;
};

struct LossConfig {
  LossKind kind = LossKind::Agasdf;
  LossWeights weights;
  /// Replace every l1 sum by a mean over its valid entries. Off by default.
  bool mean_normalized = false;
};

struct BandFeatures {
  double max_abs = 0.0;
  double mean_abs = 0.0;
};

/// (max|c|, mean|c|) over the first `valid_length` entries.
BandFeatures guidance_features(const Eigen::VectorXd& c, Index valid_length);

/// Per-band (max, mean) of |coefficients| of the acceleration signal's fixed db4 FDWT:
/// one entry per detail layer, then one for a^L.
struct GuidanceTarget {
  std::vector<BandFeatures> bands;

  int depth() const { return static_cast<int>(bands.size()) - 1; }
};

GuidanceTarget guidance_target(const Eigen::VectorXd& acceleration, int depth, Index valid_length = -1);
GuidanceTarget guidance_target(const CoefficientPyramid<double>& acceleration_pyramid);

/// sum|s - s_hat| + gamma (sum_l sum|d^l| + sum|a^L|), all sums over valid entries.
double loss_despawn(const Eigen::VectorXd& s, const Eigen::VectorXd& s_hat, const CoefficientPyramid<double>& p,
                    double gamma, bool mean_normalized = false);

/// w_recon sum|s - s_hat| + w_guide sum over bands and (max, mean) of |fea_acoustic - fea_target|.
double loss_agasdf(const Eigen::VectorXd& s, const Eigen::VectorXd& s_hat, const CoefficientPyramid<double>& p,
                   const GuidanceTarget& target, const LossWeights& w, bool mean_normalized = false);

struct LossBreakdown {
  double total = 0.0;
  double reconstruction = 0.0;  // unweighted
  double regularizer = 0.0;     // unweighted sparsity or guidance term
};

/// One training unit: a (padded) acoustic sample and, for guided training, its target.
struct TrainingSample {
  Eigen::VectorXd signal;
  Index valid_length = -1;
  std::optional<GuidanceTarget> target;

  Index valid() const { return valid_length < 0 ? signal.size() : valid_length; }
};

/// Forward pass through encode/decode and the public loss functions.
LossBreakdown evaluate_loss(const DespawnModel& m, const TrainingSample& sample, const LossConfig& cfg);

struct GradientResult {
  Eigen::VectorXd gradient;  // packed like DespawnModel::pack()
  LossBreakdown loss;
};

/// Reverse-mode gradient of the configured loss with respect to every kernel tap and bias.
/// Throws NumericalError naming the first parameter whose gradient is non-finite.
GradientResult backward(const DespawnModel& m, const TrainingSample& sample, const LossConfig& cfg);

struct AdamState {
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  long long step_count = 0;
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState zeros(Index n, double learning_rate = 1e-4);
};

/// Bias-corrected Adam update, in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& st);

struct TrainConfig {
  LossConfig loss;
  int epochs = 500;
  std::uint64_t seed = 0;
  double learning_rate = 1e-4;
  double init_bias = kDefaultBias;
  bool early_stop = true;
  int patience = 20;
  double min_relative_improvement = 1e-6;
};

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_reconstruction = 0.0;
  double mean_regularizer = 0.0;
};

struct TrainResult {
  DespawnModel model;
  std::vector<EpochStats> trace;
};

/// Stochastic training, one Adam step per sample, samples visited in a seeded shuffled order
/// each epoch. Starts from db4 kernels and `init_bias` thresholds.
TrainResult train(const std::vector<TrainingSample>& samples, int depth, const TrainConfig& cfg,
                  const NormalizationStats& normalization = {});

struct GradientCheckReport {
  double worst_relative_error = 0.0;
  Index worst_index = -1;
  std::string worst_parameter;
  bool passed = false;
  int kink_retries = 0;
  Eigen::VectorXd analytic;
  Eigen::VectorXd numeric;
};

/// Smallest distance of the sample to a non-differentiable point of the loss
/// (zero residual, zero coefficient, tied maxima, exact feature match).
double kink_margin(const DespawnModel& m, const TrainingSample& sample, const LossConfig& cfg);

/// Compares an analytic gradient with central differences. Relative error per parameter is
/// |a - n| / max(1, |a|, |n|). When the sample sits within `kink_tolerance` of a kink, its
/// signal is perturbed by 1e-3 Gaussian noise (seeded) and the check retried.
GradientCheckReport gradient_check(const DespawnModel& m, const TrainingSample& sample, const LossConfig& cfg,
                                   double tolerance, double step = 1e-5, std::uint64_t seed = 0,
                                   double kink_tolerance = 1e-4);

struct GradientCheckCase {
  DespawnModel model;
  TrainingSample sample;  // carries an acceleration target, so it serves both losses
};

/// Gaussian acoustic and acceleration signals of length n; db4 kernels jittered by 0.05 and
/// 0.5 biases jittered by 0.1 (Gaussian), so no weight sits at a symmetric special point.
GradientCheckCase random_gradient_check_case(std::uint64_t seed, Index n = 64, int depth = 3);

/// Same as above, but against a caller-supplied analytic gradient (no kink handling).
GradientCheckReport gradient_check_against(const DespawnModel& m, const TrainingSample& sample,
                                           const LossConfig& cfg, const Eigen::VectorXd& analytic,
                                           double tolerance, double step = 1e-5);

}  // namespace agasdf
