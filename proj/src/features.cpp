#include "agasdf/features.hpp"

#include "agasdf/signal.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>

namespace agasdf {

std::string to_string(Method m) {
  switch (m) {
    case Method::AgAsdf: return "AG_ASDF";
    case Method::Despawn: return "DESPAWN";
    case Method::Fdwt: return "FDWT";
    case Method::Wpt: return "WPT";
    case Method::Stft: return "STFT";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  std::string u;
  for (char c : s) u += (c == '-') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (u == "AG_ASDF" || u == "AGASDF") return Method::AgAsdf;
  if (u == "DESPAWN") return Method::Despawn;
  if (u == "FDWT") return Method::Fdwt;
  if (u == "WPT") return Method::Wpt;
  if (u == "STFT") return Method::Stft;
  throw ValidationError("unknown method '" + s + "' (expected agasdf, despawn, fdwt, wpt or stft)");
}

bool is_learnable(Method m) { return m == Method::AgAsdf || m == Method::Despawn; }

namespace {

void push_band(std::vector<double>& out, const auto& abs_values) {
  out.push_back(to_decibels(abs_values.maxCoeff()));
  out.push_back(to_decibels(abs_values.mean()));
}

}  // namespace

Eigen::VectorXd extract_features(const CoefficientPyramid<double>& p) {
  std::vector<double> f;
  f.reserve(2 * static_cast<std::size_t>(p.depth() + 1) + 2);
  for (int l = 0; l < p.depth(); ++l) {
    const auto& d = p.details[static_cast<std::size_t>(l)];
    push_band(f, d.head(p.valid_lengths[static_cast<std::size_t>(l)]).cwiseAbs());
  }
  push_band(f, p.approximation.head(p.approximation_valid_length()).cwiseAbs());
  return Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Index>(f.size()));
}

Eigen::VectorXd extract_features(const CoefficientPyramid<double>& p, const Eigen::VectorXd& s,
                                 const Eigen::VectorXd& s_hat, Index valid_length, ResidualUnits units) {
  const Index v = valid_length < 0 ? s.size() : valid_length;
  if (s.size() != s_hat.size() || v < 1 || v > s.size()) throw ValidationError("extract_features: bad residual input");
  const Eigen::VectorXd base = extract_features(p);
  const Eigen::ArrayXd r = (s.head(v) - s_hat.head(v)).cwiseAbs().array();
  Eigen::VectorXd out(base.size() + 2);
  out.head(base.size()) = base;
  out[base.size()] = r.maxCoeff();
  out[base.size() + 1] = r.mean();
  if (units == ResidualUnits::Decibels) {
    out[base.size()] = to_decibels(out[base.size()]);
    out[base.size() + 1] = to_decibels(out[base.size() + 1]);
  }
  return out;
}

Eigen::VectorXd fdwt_features(const Eigen::VectorXd& s, int depth, Index valid_length) {
  return extract_features(fdwt_forward<double>(s, db4_kernel<double>(), depth, valid_length));
}

Eigen::VectorXd learned_features(const Eigen::VectorXd& s, const DespawnModel& m, Index valid_length) {
  const auto p = encode(s, m, valid_length);
  return extract_features(p, s, decode(p, m), valid_length);
}

Eigen::VectorXd wpt_band_features(const Eigen::VectorXd& s, Index valid_length, int depth) {
  std::vector<Index> valid;
  const auto leaves = wpt_bands<double>(s, db4_kernel<double>(), depth, &valid, valid_length);
  std::vector<double> f;
  for (std::size_t b = 0; b < leaves.size(); ++b) push_band(f, leaves[b].head(valid[b]).cwiseAbs());
  return Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Index>(f.size()));
}

Eigen::MatrixXd stft_magnitude(const Eigen::VectorXd& s, Index window, Index hop) {
  if (s.size() < window) {
    throw ValidationError("stft: signal of " + std::to_string(s.size()) + " samples is shorter than one window");
  }
  const Index frames = 1 + (s.size() - window) / hop;
  const Index bins = window / 2 + 1;
  std::vector<double> hann(static_cast<std::size_t>(window));
  for (Index i = 0; i < window; ++i) {
    hann[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / window);
  }
  Eigen::FFT<double> fft;
  std::vector<double> frame(static_cast<std::size_t>(window));
  std::vector<std::complex<double>> spec;
  Eigen::MatrixXd mag(bins, frames);
  for (Index f = 0; f < frames; ++f) {
    for (Index i = 0; i < window; ++i) {
      frame[static_cast<std::size_t>(i)] = s[f * hop + i] * hann[static_cast<std::size_t>(i)];
    }
    fft.fwd(spec, frame);
    for (Index b = 0; b < bins; ++b) mag(b, f) = std::abs(spec[static_cast<std::size_t>(b)]);
  }
  return mag;
}

std::pair<Index, Index> stft_band_bins(int band, Index bins, int bands) {
  return {band * bins / bands, (band + 1) * bins / bands};
}

Eigen::VectorXd stft_band_features(const Eigen::VectorXd& s) {
  const Eigen::MatrixXd mag = stft_magnitude(s);
  Eigen::VectorXd f(2 * kStftBands);
  for (int b = 0; b < kStftBands; ++b) {
    const auto [lo, hi] = stft_band_bins(b, mag.rows());
    const auto block = mag.middleRows(lo, hi - lo);
    f[2 * b] = to_decibels(block.maxCoeff());
    f[2 * b + 1] = to_decibels(block.mean());
  }
  return f;
}

}  // namespace agasdf
