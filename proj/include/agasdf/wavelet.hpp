#pragma once

// Two-channel orthogonal filter banks with periodic boundaries.
//
// Analysis convention, for a layer input a of (pre-pad) length n:
//   n' = n rounded up to even (one trailing zero when n is odd)
//   lo[k] = sum_t h[t] * a[(2k + t) mod n'],   hi[k] = sum_t g[t] * a[(2k + t) mod n']
// with g the alternating flip of h. Synthesis is the exact adjoint, so the pair is an
// orthogonal transform whenever h is an orthonormal low-pass.

#include "agasdf/types.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace agasdf {

template <typename Scalar>
using Kernel = Vec<Scalar>;

/// Detail layers d^1..d^L plus the last approximation a^L.
template <typename Scalar>
struct CoefficientPyramid {
  std::vector<Vec<Scalar>> details;
  Vec<Scalar> approximation;
  /// Pre-pad input length of every layer (input_lengths[0] is the signal length).
  std::vector<Index> input_lengths;
  /// Coefficients that cover real (non-padded) signal: one entry per detail layer, then a^L.
  std::vector<Index> valid_lengths;

  int depth() const { return static_cast<int>(details.size()); }
  Index approximation_valid_length() const { return valid_lengths.back(); }
};

/// Orthonormal 8-tap Daubechies low-pass (4 vanishing moments).
template <typename Scalar = double>
Kernel<Scalar> db4_kernel() {
  Kernel<Scalar> h(8);
  h << Scalar(0.2303778133088965), Scalar(0.7148465705529157), Scalar(0.6308807679298589),
      Scalar(-0.027983769416859854), Scalar(-0.18703481171909309), Scalar(0.030841381835560764),
      Scalar(0.0328830116668852), Scalar(-0.010597401785069032);
  return h;
}

/// g[n] = (-1)^n h[K-1-n]
template <typename Derived>
Kernel<typename Derived::Scalar> qmf_highpass(const Eigen::MatrixBase<Derived>& h) {
  using Scalar = typename Derived::Scalar;
  const Index k = h.size();
  if (k % 2 != 0) throw ValidationError("qmf_highpass: kernel length must be even");
  Kernel<Scalar> g(k);
  for (Index n = 0; n < k; ++n) g[n] = (n % 2 == 0 ? Scalar(1) : Scalar(-1)) * h[k - 1 - n];
  return g;
}

/// Folds a gradient with respect to g = qmf_highpass(h) back onto h.
template <typename Derived>
Kernel<typename Derived::Scalar> qmf_highpass_adjoint(const Eigen::MatrixBase<Derived>& grad_g) {
  using Scalar = typename Derived::Scalar;
  const Index k = grad_g.size();
  Kernel<Scalar> grad_h(k);
  for (Index n = 0; n < k; ++n) grad_h[k - 1 - n] = (n % 2 == 0 ? Scalar(1) : Scalar(-1)) * grad_g[n];
  return grad_h;
}

inline Index padded_even(Index n) { return n + (n & 1); }

/// Strided periodic correlation: out[k] = sum_t f[t] * x[(2k + t) mod n'], x zero-padded to n'.
template <typename Scalar>
Vec<Scalar> analysis_filter(const Vec<Scalar>& x, const Kernel<Scalar>& f) {
  const Index n = x.size();
  const Index np = padded_even(n);
  const Index m = np / 2;
  const Index taps = f.size();
  Vec<Scalar> out = Vec<Scalar>::Zero(m);
  for (Index k = 0; k < m; ++k) {
    Scalar acc(0);
    Index idx = (2 * k) % np;
    for (Index t = 0; t < taps; ++t) {
      if (idx < n) acc += f[t] * x[idx];
      if (++idx == np) idx = 0;
    }
    out[k] = acc;
  }
  return out;
}

/// Adjoint of analysis_filter: scatters c[k] * f[t] into position (2k + t) mod 2m.
/// Accumulates into `out`, which must have length 2 * c.size().
template <typename Scalar>
void synthesis_accumulate(const Vec<Scalar>& c, const Kernel<Scalar>& f, Vec<Scalar>& out) {
  const Index np = out.size();
  const Index taps = f.size();
  for (Index k = 0; k < c.size(); ++k) {
    const Scalar ck = c[k];
    if (ck == Scalar(0)) continue;
    Index idx = (2 * k) % np;
    for (Index t = 0; t < taps; ++t) {
      out[idx] += ck * f[t];
      if (++idx == np) idx = 0;
    }
  }
}

/// Gradient of analysis_filter's output with respect to the taps:
/// grad_f[t] += sum_k upstream[k] * x[(2k + t) mod n'].
template <typename Scalar>
void analysis_filter_tap_gradient(const Vec<Scalar>& x, const Vec<Scalar>& upstream, Kernel<Scalar>& grad_f) {
  const Index n = x.size();
  const Index np = padded_even(n);
  const Index taps = grad_f.size();
  for (Index k = 0; k < upstream.size(); ++k) {
    const Scalar u = upstream[k];
    if (u == Scalar(0)) continue;
    Index idx = (2 * k) % np;
    for (Index t = 0; t < taps; ++t) {
      if (idx < n) grad_f[t] += u * x[idx];
      if (++idx == np) idx = 0;
    }
  }
}

/// One synthesis layer: upsample, filter with the time-reversed bank, sum, drop the pad slot.
template <typename Scalar>
Vec<Scalar> synthesis_step(const Vec<Scalar>& approx, const Vec<Scalar>& detail, const Kernel<Scalar>& lo,
                           const Kernel<Scalar>& hi, Index out_length) {
  if (approx.size() != detail.size()) throw ValidationError("synthesis_step: approximation/detail size mismatch");
  const Index np = 2 * approx.size();
  if (out_length != np && out_length != np - 1) throw ValidationError("synthesis_step: incompatible output length");
  Vec<Scalar> full = Vec<Scalar>::Zero(np);
  synthesis_accumulate(approx, lo, full);
  synthesis_accumulate(detail, hi, full);
  return full.head(out_length);
}

namespace detail {

inline std::vector<Index> chain_valid_lengths(Index valid0, const std::vector<Index>& coefficient_lengths) {
  std::vector<Index> valid;
  valid.reserve(coefficient_lengths.size() + 1);
  Index v = valid0;
  for (Index m : coefficient_lengths) {
    v = std::min<Index>((v + 1) / 2, m);
    valid.push_back(std::max<Index>(v, 1));
  }
  valid.push_back(valid.back());
  return valid;
}

}  // namespace detail

/// Cascade FDWT with one kernel per layer. `valid_length` is the count of real samples at the
/// start of `s` (defaults to all of it); it only drives valid_lengths bookkeeping.
template <typename Scalar>
CoefficientPyramid<Scalar> fdwt_forward(const Vec<Scalar>& s, std::span<const Kernel<Scalar>> kernels,
                                        Index valid_length = -1) {
  if (kernels.empty()) throw ValidationError("fdwt_forward: depth must be >= 1");
  if (s.size() == 0) throw ValidationError("fdwt_forward: empty input");
  CoefficientPyramid<Scalar> p;
  Vec<Scalar> a = s;
  std::vector<Index> coeff_lengths;
  for (const auto& h : kernels) {
    const Kernel<Scalar> g = qmf_highpass(h);
    p.input_lengths.push_back(a.size());
    p.details.push_back(analysis_filter(a, g));
    a = analysis_filter(a, h);
    coeff_lengths.push_back(a.size());
  }
  p.approximation = std::move(a);
  p.valid_lengths = detail::chain_valid_lengths(valid_length < 0 ? s.size() : valid_length, coeff_lengths);
  return p;
}

/// Cascade FDWT sharing one kernel across `depth` layers.
template <typename Scalar>
CoefficientPyramid<Scalar> fdwt_forward(const Vec<Scalar>& s, const Kernel<Scalar>& h, int depth,
                                        Index valid_length = -1) {
  if (depth < 1) throw ValidationError("fdwt_forward: depth must be >= 1");
  const std::vector<Kernel<Scalar>> kernels(static_cast<std::size_t>(depth), h);
  return fdwt_forward<Scalar>(s, std::span<const Kernel<Scalar>>(kernels), valid_length);
}

/// Inverse cascade; exact inverse of fdwt_forward for orthonormal kernels.
template <typename Scalar>
Vec<Scalar> fdwt_inverse(const CoefficientPyramid<Scalar>& p, std::span<const Kernel<Scalar>> kernels) {
  const int depth = p.depth();
  if (depth < 1 || static_cast<int>(kernels.size()) != depth ||
      static_cast<int>(p.input_lengths.size()) != depth) {
    throw ValidationError("fdwt_inverse: pyramid depth does not match kernel count");
  }
  Vec<Scalar> a = p.approximation;
  for (int l = depth - 1; l >= 0; --l) {
    const auto& h = kernels[static_cast<std::size_t>(l)];
    a = synthesis_step<Scalar>(a, p.details[static_cast<std::size_t>(l)], h, qmf_highpass(h),
                               p.input_lengths[static_cast<std::size_t>(l)]);
  }
  return a;
}

template <typename Scalar>
Vec<Scalar> fdwt_inverse(const CoefficientPyramid<Scalar>& p, const Kernel<Scalar>& h) {
  const std::vector<Kernel<Scalar>> kernels(static_cast<std::size_t>(p.depth()), h);
  return fdwt_inverse<Scalar>(p, std::span<const Kernel<Scalar>>(kernels));
}

/// Leaf bands of a full wavelet packet tree of the given depth, ordered by increasing
/// frequency. `valid_lengths` (optional) receives the per-leaf count of non-padding coefficients.
template <typename Scalar>
std::vector<Vec<Scalar>> wpt_bands(const Vec<Scalar>& s, const Kernel<Scalar>& h, int depth,
                                   std::vector<Index>* valid_lengths = nullptr, Index valid_length = -1) {
  if (depth < 1) throw ValidationError("wpt_bands: depth must be >= 1");
  if (s.size() == 0) throw ValidationError("wpt_bands: empty input");
  const Kernel<Scalar> g = qmf_highpass(h);
  // Paley (natural tree) order: child 2p is the low branch of node p, 2p + 1 the high branch.
  std::vector<Vec<Scalar>> level{s};
  Index valid = valid_length < 0 ? s.size() : valid_length;
  for (int j = 0; j < depth; ++j) {
    std::vector<Vec<Scalar>> next;
    next.reserve(level.size() * 2);
    for (const auto& node : level) {
      next.push_back(analysis_filter(node, h));
      next.push_back(analysis_filter(node, g));
    }
    valid = std::min<Index>((valid + 1) / 2, next.front().size());
    level = std::move(next);
  }
  // High-pass branches mirror the spectrum, so frequency position f lives at Paley index gray(f).
  const std::size_t leaves = level.size();
  std::vector<Vec<Scalar>> ordered(leaves);
  for (std::size_t f = 0; f < leaves; ++f) ordered[f] = std::move(level[f ^ (f >> 1)]);
  if (valid_lengths) valid_lengths->assign(leaves, std::max<Index>(valid, 1));
  return ordered;
}

}  // namespace agasdf
