#pragma once

#include "agasdf/despawn.hpp"

#include <string>
#include <vector>

namespace agasdf {

enum class Method { AgAsdf, Despawn, Fdwt, Wpt, Stft };

std::string to_string(Method m);
Method method_from_string(const std::string& s);
bool is_learnable(Method m);

/// Fixed-length classification features of one band sample, with its metadata.
struct FeatureVector {
  Eigen::VectorXd values;
  Method method = Method::Fdwt;
  TrackClass label = TrackClass::NoDegradation;
  int speed_kmh = 0;
  std::string ride_id;
};

enum class ResidualUnits { Linear, Decibels };

/// Per layer and for a^L: (dB max|c|, dB mean|c|) over the valid region.
Eigen::VectorXd extract_features(const CoefficientPyramid<double>& p);

/// As above, then (max|s - s_hat|, mean|s - s_hat|) over the first `valid_length` samples.
Eigen::VectorXd extract_features(const CoefficientPyramid<double>& p, const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& s_hat, Index valid_length = -1,
                                 ResidualUnits units = ResidualUnits::Linear);

/// Fixed db4 cascade features of a (padded) sample.
Eigen::VectorXd fdwt_features(const Eigen::VectorXd& s, int depth, Index valid_length = -1);

/// Encode/decode through a learned model, then coefficient and residual features.
Eigen::VectorXd learned_features(const Eigen::VectorXd& s, const DespawnModel& m, Index valid_length = -1);

/// 16 leaf bands of a depth-4 db4 packet tree.
Eigen::VectorXd wpt_band_features(const Eigen::VectorXd& s, Index valid_length = -1, int depth = 4);

inline constexpr Index kStftWindow = 1024;
inline constexpr Index kStftHop = 512;
inline constexpr int kStftBands = 16;

/// |STFT| with a periodic Hann window (1024 samples, hop 512).
/// Rows are frequency bins 0..window/2, columns are frames.
Eigen::MatrixXd stft_magnitude(const Eigen::VectorXd& s, Index window = kStftWindow, Index hop = kStftHop);

/// Bin range [first, last) of band b when `bins` bins are cut into `bands` equal-width bands.
std::pair<Index, Index> stft_band_bins(int band, Index bins = kStftWindow / 2 + 1, int bands = kStftBands);

/// (dB max, dB mean) of |STFT| per equal-width frequency band over all frames.
Eigen::VectorXd stft_band_features(const Eigen::VectorXd& s);

}  // namespace agasdf
