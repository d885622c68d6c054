#include "agasdf/despawn.hpp"

#include <span>

namespace agasdf {

DespawnModel DespawnModel::initialized(int depth, double bias) {
  if (depth < 1) throw ValidationError("model depth must be >= 1");
  DespawnModel m;
  m.kernels.assign(static_cast<std::size_t>(depth), db4_kernel<double>());
  m.thresholds.assign(static_cast<std::size_t>(depth) + 1, ThresholdParams{bias, bias});
  return m;
}

void DespawnModel::validate() const {
  if (kernels.empty()) throw ValidationError("model has no layers");
  if (thresholds.size() != kernels.size() + 1) {
    throw ValidationError("model needs depth + 1 threshold pairs (has " + std::to_string(thresholds.size()) +
                          " for depth " + std::to_string(kernels.size()) + ")");
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ValidationError("model sharpness must be positive");
  for (const auto& k : kernels) {
    if (k.size() == 0 || k.size() % 2 != 0) throw ValidationError("model kernels must have even length");
    if (!k.allFinite()) throw ValidationError("model kernel has non-finite taps");
  }
  for (const auto& t : thresholds) {
    if (!std::isfinite(t.b_plus) || !std::isfinite(t.b_minus)) throw ValidationError("model bias is non-finite");
  }
}

Index DespawnModel::parameter_count() const {
  Index n = 0;
  for (const auto& k : kernels) n += k.size();
  return n + 2 * static_cast<Index>(thresholds.size());
}

Eigen::VectorXd DespawnModel::pack() const {
  Eigen::VectorXd p(parameter_count());
  Index i = 0;
  for (const auto& k : kernels) {
    p.segment(i, k.size()) = k;
    i += k.size();
  }
  for (const auto& t : thresholds) {
    p[i++] = t.b_plus;
    p[i++] = t.b_minus;
  }
  return p;
}

void DespawnModel::unpack(const Eigen::VectorXd& params) {
  if (params.size() != parameter_count()) throw ValidationError("parameter vector has the wrong size");
  Index i = 0;
  for (auto& k : kernels) {
    k = params.segment(i, k.size());
    i += k.size();
  }
  for (auto& t : thresholds) {
    t.b_plus = params[i++];
    t.b_minus = params[i++];
  }
}

std::string DespawnModel::parameter_name(Index i) const {
  for (std::size_t l = 0; l < kernels.size(); ++l) {
    if (i < kernels[l].size()) return "kernel[" + std::to_string(l + 1) + "][" + std::to_string(i) + "]";
    i -= kernels[l].size();
  }
  const Index band = i / 2;
  const std::string which = (i % 2 == 0) ? "b_plus" : "b_minus";
  const std::string where =
      band < static_cast<Index>(kernels.size()) ? "d" + std::to_string(band + 1) : std::string("a");
  return which + "[" + where + "]";
}

CoefficientPyramid<double> encode(const Eigen::VectorXd& s, const DespawnModel& m, Index valid_length) {
  m.validate();
  auto p = fdwt_forward<double>(s, std::span<const Kernel<double>>(m.kernels), valid_length);
  auto gate = [&](Eigen::VectorXd& c, const ThresholdParams& t) {
    for (Index k = 0; k < c.size(); ++k) c[k] = hard_threshold(c[k], t.b_plus, t.b_minus, m.alpha);
  };
  for (std::size_t l = 0; l < p.details.size(); ++l) gate(p.details[l], m.thresholds[l]);
  gate(p.approximation, m.thresholds.back());
  return p;
}

Eigen::VectorXd decode(const CoefficientPyramid<double>& p, const DespawnModel& m) {
  if (p.depth() != m.depth()) {
    throw ValidationError("decode: pyramid depth " + std::to_string(p.depth()) + " does not match model depth " +
                          std::to_string(m.depth()));
  }
  return fdwt_inverse<double>(p, std::span<const Kernel<double>>(m.kernels));
}

}  // namespace agasdf
