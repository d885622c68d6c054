#include "agasdf/signal.hpp"

#include <algorithm>
#include <cmath>

namespace agasdf {

Signal::Signal(Eigen::VectorXd samples, double sample_rate_hz, SourceKind kind)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz), kind_(kind) {
  if (samples_.size() == 0) throw ValidationError("signal has no samples");
  if (!samples_.allFinite()) throw ValidationError("signal contains non-finite samples");
  if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_)) {
    throw ValidationError("sample rate must be positive");
  }
}

std::pair<Signal, Signal> pair_align(const Signal& acoustic, const Signal& acceleration) {
  if (acoustic.sample_rate_hz() != acceleration.sample_rate_hz()) {
    throw ValidationError("pair_align: sample rate mismatch (acoustic " + std::to_string(acoustic.sample_rate_hz()) +
                          " Hz, acceleration " + std::to_string(acceleration.sample_rate_hz()) + " Hz)");
  }
  const Index n = std::min(acoustic.size(), acceleration.size());
  return {Signal(acoustic.samples().head(n), acoustic.sample_rate_hz(), acoustic.kind()),
          Signal(acceleration.samples().head(n), acceleration.sample_rate_hz(), acceleration.kind())};
}

Signal zscore_normalize(const Signal& s) {
  const Eigen::VectorXd& x = s.samples();
  const double mean = x.mean();
  const double stddev = std::sqrt((x.array() - mean).square().mean());
  if (stddev < 1e-12) return Signal(Eigen::VectorXd::Zero(x.size()), s.sample_rate_hz(), s.kind());
  return Signal(((x.array() - mean) / stddev).matrix(), s.sample_rate_hz(), s.kind());
}

std::vector<Signal> split_into_bands(const Signal& s, int n_bands) {
  if (n_bands < 1) throw ValidationError("split_into_bands: n_bands must be >= 1");
  if (s.size() < n_bands) throw ValidationError("split_into_bands: signal shorter than band count");
  const Index base = s.size() / n_bands;
  const Index extra = s.size() % n_bands;
  std::vector<Signal> bands;
  bands.reserve(static_cast<std::size_t>(n_bands));
  Index start = 0;
  for (int b = 0; b < n_bands; ++b) {
    const Index len = base + (b < extra ? 1 : 0);
    bands.emplace_back(s.samples().segment(start, len), s.sample_rate_hz(), s.kind());
    start += len;
  }
  return bands;
}

PaddedSignal pad_to_length(const Eigen::VectorXd& s, Index target) {
  if (s.size() > target) {
    throw ValidationError("pad_to_length: signal length " + std::to_string(s.size()) + " exceeds target " +
                          std::to_string(target));
  }
  PaddedSignal out{Eigen::VectorXd::Zero(target), s.size()};
  out.samples.head(s.size()) = s;
  return out;
}

double to_decibels(double x) { return 20.0 * std::log10(std::max(x, kDecibelFloor)); }

}  // namespace agasdf
