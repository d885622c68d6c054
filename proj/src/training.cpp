#include "agasdf/training.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>

namespace agasdf {

namespace {

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

double l1_head(const Eigen::VectorXd& v, Index n, bool mean) {
  const double s = v.head(n).cwiseAbs().sum();
  return mean ? s / static_cast<double>(n) : s;
}

}  // namespace

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "despawn") return LossKind::Despawn;
  if (s == "agasdf") return LossKind::Agasdf;
  throw ValidationError("unknown loss kind '" + s + "' (expected despawn or agasdf)");
}

std::string to_string(LossKind k) { return k == LossKind::Despawn ? "despawn" : "agasdf"; }

void LossWeights::validate() const {
  if (!(w_recon >= 0.0) || !(w_guide >= 0.0) || !std::isfinite(w_recon) || !std::isfinite(w_guide)) {
    throw ValidationError("loss weights must be finite and non-negative");
  }
  if (w_recon == 0.0 && w_guide == 0.0) throw ValidationError("loss weights must not both be zero");
}

LossWeights LossWeights::parse(const std::string& ratio) {
  const auto colon = ratio.find(':');
  if (colon == std::string::npos) throw ValidationError("weights must look like R:G, got '" + ratio + "'");
  LossWeights w;
  try {
    std::size_t used = 0;
    const std::string r = ratio.substr(0, colon);
    const std::string g = ratio.substr(colon + 1);
    w.w_recon = std::stod(r, &used);
    if (used != r.size()) throw std::invalid_argument(r);
    w.w_guide = std::stod(g, &used);
    if (used != g.size()) throw std::invalid_argument(g);
  } catch (const std::logic_error&) {
    throw ValidationError("weights must look like R:G, got '" + ratio + "'");
  }
  w.validate();
  return w;
}

std::string LossWeights::to_string() const {
  std::ostringstream os;
  os << w_recon << ":" << w_guide;
  return os.str();
}

BandFeatures guidance_features(const Eigen::VectorXd& c, Index valid_length) {
  if (valid_length < 1 || valid_length > c.size()) throw ValidationError("guidance_features: empty valid region");
  const auto a = c.head(valid_length).cwiseAbs();
  return {a.maxCoeff(), a.mean()};
}

GuidanceTarget guidance_target(const CoefficientPyramid<double>& p) {
  GuidanceTarget t;
  for (int l = 0; l < p.depth(); ++l) {
    t.bands.push_back(guidance_features(p.details[static_cast<std::size_t>(l)], p.valid_lengths[static_cast<std::size_t>(l)]));
  }
  t.bands.push_back(guidance_features(p.approximation, p.approximation_valid_length()));
  return t;
}

GuidanceTarget guidance_target(const Eigen::VectorXd& acceleration, int depth, Index valid_length) {
  return guidance_target(fdwt_forward<double>(acceleration, db4_kernel<double>(), depth, valid_length));
}

namespace {

double reconstruction_l1(const Eigen::VectorXd& s, const Eigen::VectorXd& s_hat, Index valid, bool mean) {
  if (s.size() != s_hat.size()) throw ValidationError("reconstruction and input lengths differ");
  return l1_head(s - s_hat, valid, mean);
}

Index total_valid(const std::vector<Index>& valid_lengths) {
  Index n = 0;
  for (Index v : valid_lengths) n += v;
  return n;
}

// The pyramid is one coefficient vector, so the normalized variant averages over all of it.
double sparsity_l1(const CoefficientPyramid<double>& p, bool mean) {
  double total = 0.0;
  for (int l = 0; l < p.depth(); ++l) {
    total += l1_head(p.details[static_cast<std::size_t>(l)], p.valid_lengths[static_cast<std::size_t>(l)], false);
  }
  total += l1_head(p.approximation, p.approximation_valid_length(), false);
  return mean ? total / static_cast<double>(total_valid(p.valid_lengths)) : total;
}

double guidance_l1(const CoefficientPyramid<double>& p, const GuidanceTarget& t) {
  if (t.depth() != p.depth()) {
    throw ValidationError("guidance target depth " + std::to_string(t.depth()) + " does not match pyramid depth " +
                          std::to_string(p.depth()));
  }
  double total = 0.0;
  for (int j = 0; j <= p.depth(); ++j) {
    const bool approx = j == p.depth();
    const auto& c = approx ? p.approximation : p.details[static_cast<std::size_t>(j)];
    const auto f = guidance_features(c, p.valid_lengths[static_cast<std::size_t>(j)]);
    const auto& g = t.bands[static_cast<std::size_t>(j)];
    total += std::abs(f.max_abs - g.max_abs) + std::abs(f.mean_abs - g.mean_abs);
  }
  return total;
}

}  // namespace

double loss_despawn(const Eigen::VectorXd& s, const Eigen::VectorXd& s_hat, const CoefficientPyramid<double>& p,
                    double gamma, bool mean_normalized) {
  return reconstruction_l1(s, s_hat, s.size(), mean_normalized) + gamma * sparsity_l1(p, mean_normalized);
}

double loss_agasdf(const Eigen::VectorXd& s, const Eigen::VectorXd& s_hat, const CoefficientPyramid<double>& p,
                   const GuidanceTarget& target, const LossWeights& w, bool mean_normalized) {
  return w.w_recon * reconstruction_l1(s, s_hat, s.size(), mean_normalized) + w.w_guide * guidance_l1(p, target);
}

LossBreakdown evaluate_loss(const DespawnModel& m, const TrainingSample& sample, const LossConfig& cfg) {
  const auto p = encode(sample.signal, m, sample.valid());
  const Eigen::VectorXd s_hat = decode(p, m);
  const Index v = sample.valid();
  LossBreakdown out;
  // Reconstruction error is only charged on the real (unpadded) samples.
  const Eigen::VectorXd s_valid = sample.signal.head(v);
  const Eigen::VectorXd r_valid = s_hat.head(v);
  out.reconstruction = reconstruction_l1(s_valid, r_valid, v, cfg.mean_normalized);
  if (cfg.kind == LossKind::Despawn) {
    out.regularizer = sparsity_l1(p, cfg.mean_normalized);
  } else {
    if (!sample.target) throw ValidationError("guided loss needs a guidance target");
    out.regularizer = guidance_l1(p, *sample.target);
  }
  out.total = cfg.weights.w_recon * out.reconstruction + cfg.weights.w_guide * out.regularizer;
  return out;
}

namespace {

struct ForwardTrace {
  std::vector<Eigen::VectorXd> layer_inputs;   // a^{l-1}
  std::vector<Eigen::VectorXd> raw_details;    // before HT
  Eigen::VectorXd raw_approximation;
  std::vector<Eigen::VectorXd> details;        // after HT
  Eigen::VectorXd approximation;
  std::vector<Eigen::VectorXd> ht_dx_details;
  std::vector<Eigen::VectorXd> ht_dbp_details;
  std::vector<Eigen::VectorXd> ht_dbm_details;
  Eigen::VectorXd ht_dx_approx, ht_dbp_approx, ht_dbm_approx;
  std::vector<Eigen::VectorXd> decoder_approx_inputs;  // approximation entering synthesis of layer l
  std::vector<Index> valid_lengths;
  Eigen::VectorXd reconstruction;
};

void apply_threshold(const Eigen::VectorXd& raw, const ThresholdParams& t, double alpha, Eigen::VectorXd& out,
                     Eigen::VectorXd& dx, Eigen::VectorXd& dbp, Eigen::VectorXd& dbm) {
  const Index n = raw.size();
  out.resize(n);
  dx.resize(n);
  dbp.resize(n);
  dbm.resize(n);
  for (Index k = 0; k < n; ++k) {
    const auto d = hard_threshold_derivatives(raw[k], t.b_plus, t.b_minus, alpha);
    out[k] = d.value;
    dx[k] = d.d_x;
    dbp[k] = d.d_b_plus;
    dbm[k] = d.d_b_minus;
  }
}

ForwardTrace forward(const DespawnModel& m, const TrainingSample& sample) {
  const int depth = m.depth();
  const auto L = static_cast<std::size_t>(depth);
  ForwardTrace tr;
  tr.layer_inputs.resize(L);
  tr.raw_details.resize(L);
  tr.details.resize(L);
  tr.ht_dx_details.resize(L);
  tr.ht_dbp_details.resize(L);
  tr.ht_dbm_details.resize(L);
  tr.decoder_approx_inputs.resize(L);

  Eigen::VectorXd a = sample.signal;
  std::vector<Index> coeff_lengths;
  for (std::size_t l = 0; l < L; ++l) {
    const auto& h = m.kernels[l];
    tr.layer_inputs[l] = a;
    tr.raw_details[l] = analysis_filter<double>(a, qmf_highpass(h));
    a = analysis_filter<double>(a, h);
    coeff_lengths.push_back(a.size());
  }
  tr.raw_approximation = std::move(a);
  tr.valid_lengths = detail::chain_valid_lengths(sample.valid(), coeff_lengths);

  for (std::size_t l = 0; l < L; ++l) {
    apply_threshold(tr.raw_details[l], m.thresholds[l], m.alpha, tr.details[l], tr.ht_dx_details[l],
                    tr.ht_dbp_details[l], tr.ht_dbm_details[l]);
  }
  apply_threshold(tr.raw_approximation, m.thresholds[L], m.alpha, tr.approximation, tr.ht_dx_approx,
                  tr.ht_dbp_approx, tr.ht_dbm_approx);

  Eigen::VectorXd cur = tr.approximation;
  for (std::size_t l = L; l-- > 0;) {
    tr.decoder_approx_inputs[l] = cur;
    const auto& h = m.kernels[l];
    cur = synthesis_step<double>(cur, tr.details[l], h, qmf_highpass(h), tr.layer_inputs[l].size());
  }
  tr.reconstruction = std::move(cur);
  return tr;
}

// Loss gradient with respect to the thresholded coefficients of one band.
void regularizer_gradient(const Eigen::VectorXd& z, Index valid, Index pyramid_valid, const LossConfig& cfg,
                          const BandFeatures* target, Eigen::VectorXd& grad, double& value) {
  const double w = cfg.weights.w_guide;
  if (cfg.kind == LossKind::Despawn) {
    const double scale = cfg.mean_normalized ? 1.0 / static_cast<double>(pyramid_valid) : 1.0;
    value += scale * l1_head(z, valid, false);
    for (Index k = 0; k < valid; ++k) grad[k] += w * scale * sign(z[k]);
    return;
  }
  // max|z| routes to the first index attaining it; mean|z| spreads uniformly.
  Index arg = 0;
  double mx = -1.0, sum = 0.0;
  for (Index k = 0; k < valid; ++k) {
    const double a = std::abs(z[k]);
    sum += a;
    if (a > mx) {
      mx = a;
      arg = k;
    }
  }
  const double mean = sum / static_cast<double>(valid);
  const double dmax = mx - target->max_abs;
  const double dmean = mean - target->mean_abs;
  value += std::abs(dmax) + std::abs(dmean);
  grad[arg] += w * sign(dmax) * sign(z[arg]);
  const double c = w * sign(dmean) / static_cast<double>(valid);
  if (c != 0.0) {
    for (Index k = 0; k < valid; ++k) grad[k] += c * sign(z[k]);
  }
}

}  // namespace

GradientResult backward(const DespawnModel& m, const TrainingSample& sample, const LossConfig& cfg) {
  m.validate();
  cfg.weights.validate();
  const int depth = m.depth();
  const auto L = static_cast<std::size_t>(depth);
  if (cfg.kind == LossKind::Agasdf) {
    if (!sample.target) throw ValidationError("guided loss needs a guidance target");
    if (sample.target->depth() != depth) throw ValidationError("guidance target depth does not match model depth");
  }
  const ForwardTrace tr = forward(m, sample);
  const Index valid0 = sample.valid();

  GradientResult out;
  // Reconstruction term.
  Eigen::VectorXd g = Eigen::VectorXd::Zero(tr.reconstruction.size());
  {
    const double scale = cfg.mean_normalized ? 1.0 / static_cast<double>(valid0) : 1.0;
    double recon = 0.0;
    for (Index i = 0; i < valid0; ++i) {
      const double r = sample.signal[i] - tr.reconstruction[i];
      recon += std::abs(r);
      g[i] = -cfg.weights.w_recon * scale * sign(r);
    }
    out.loss.reconstruction = recon * scale;
  }

  std::vector<Eigen::VectorXd> grad_lo(L), grad_hi(L);
  for (std::size_t l = 0; l < L; ++l) {
    grad_lo[l] = Eigen::VectorXd::Zero(m.kernels[l].size());
    grad_hi[l] = Eigen::VectorXd::Zero(m.kernels[l].size());
  }

  // Decoder, layer 1 upward. The adjoint of a synthesis step is the analysis step.
  std::vector<Eigen::VectorXd> grad_z(L);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& h = m.kernels[l];
    const Kernel<double> hi = qmf_highpass(h);
    analysis_filter_tap_gradient<double>(g, tr.decoder_approx_inputs[l], grad_lo[l]);
    analysis_filter_tap_gradient<double>(g, tr.details[l], grad_hi[l]);
    grad_z[l] = analysis_filter<double>(g, hi);
    g = analysis_filter<double>(g, h);
  }
  Eigen::VectorXd grad_za = std::move(g);

  // Regularizer on thresholded coefficients.
  const Index pyramid_valid = total_valid(tr.valid_lengths);
  double reg = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const BandFeatures* t = cfg.kind == LossKind::Agasdf ? &sample.target->bands[l] : nullptr;
    regularizer_gradient(tr.details[l], tr.valid_lengths[l], pyramid_valid, cfg, t, grad_z[l], reg);
  }
  {
    const BandFeatures* t = cfg.kind == LossKind::Agasdf ? &sample.target->bands[L] : nullptr;
    regularizer_gradient(tr.approximation, tr.valid_lengths[L], pyramid_valid, cfg, t, grad_za, reg);
  }
  out.loss.regularizer = reg;
  out.loss.total = cfg.weights.w_recon * out.loss.reconstruction + cfg.weights.w_guide * reg;

  // Hard-threshold layer.
  std::vector<double> grad_bp(L + 1), grad_bm(L + 1);
  std::vector<Eigen::VectorXd> grad_raw_d(L);
  for (std::size_t l = 0; l < L; ++l) {
    grad_bp[l] = grad_z[l].dot(tr.ht_dbp_details[l]);
    grad_bm[l] = grad_z[l].dot(tr.ht_dbm_details[l]);
    grad_raw_d[l] = grad_z[l].cwiseProduct(tr.ht_dx_details[l]);
  }
  grad_bp[L] = grad_za.dot(tr.ht_dbp_approx);
  grad_bm[L] = grad_za.dot(tr.ht_dbm_approx);
  Eigen::VectorXd ga = grad_za.cwiseProduct(tr.ht_dx_approx);

  // Encoder, layer L downward. The adjoint of an analysis step is the synthesis step.
  for (std::size_t l = L; l-- > 0;) {
    const auto& h = m.kernels[l];
    const Kernel<double> hi = qmf_highpass(h);
    const auto& x = tr.layer_inputs[l];
    analysis_filter_tap_gradient<double>(x, ga, grad_lo[l]);
    analysis_filter_tap_gradient<double>(x, grad_raw_d[l], grad_hi[l]);
    if (l > 0) {
      Eigen::VectorXd full = Eigen::VectorXd::Zero(2 * ga.size());
      synthesis_accumulate<double>(ga, h, full);
      synthesis_accumulate<double>(grad_raw_d[l], hi, full);
      ga = full.head(x.size());
    }
  }

  out.gradient.resize(m.parameter_count());
  Index i = 0;
  for (std::size_t l = 0; l < L; ++l) {
    const Eigen::VectorXd gk = grad_lo[l] + qmf_highpass_adjoint(grad_hi[l]);
    out.gradient.segment(i, gk.size()) = gk;
    i += gk.size();
  }
  for (std::size_t j = 0; j <= L; ++j) {
    out.gradient[i++] = grad_bp[j];
    out.gradient[i++] = grad_bm[j];
  }
  for (Index k = 0; k < out.gradient.size(); ++k) {
    if (!std::isfinite(out.gradient[k])) {
      throw NumericalError("non-finite gradient for parameter " + m.parameter_name(k));
    }
  }
  if (!std::isfinite(out.loss.total)) throw NumericalError("non-finite loss");
  return out;
}

AdamState AdamState::zeros(Index n, double learning_rate) {
  AdamState st;
  st.first_moment = Eigen::VectorXd::Zero(n);
  st.second_moment = Eigen::VectorXd::Zero(n);
  st.learning_rate = learning_rate;
  return st;
}

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& st) {
  if (params.size() != grads.size() || st.first_moment.size() != params.size() ||
      st.second_moment.size() != params.size()) {
    throw ValidationError("adam_step: parameter, gradient and moment shapes differ");
  }
  ++st.step_count;
  st.first_moment = st.beta1 * st.first_moment + (1.0 - st.beta1) * grads;
  st.second_moment = st.beta2 * st.second_moment + (1.0 - st.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
  params.array() -= st.learning_rate * (st.first_moment.array() / c1) /
                    ((st.second_moment.array() / c2).sqrt() + st.epsilon);
}

TrainResult train(const std::vector<TrainingSample>& samples, int depth, const TrainConfig& cfg,
                  const NormalizationStats& normalization) {
  if (samples.empty()) throw ValidationError("train: empty dataset");
  if (cfg.epochs < 0) throw ValidationError("train: epochs must be >= 0");
  cfg.loss.weights.validate();
  if (cfg.loss.kind == LossKind::Agasdf) {
    for (const auto& s : samples) {
      if (!s.target) throw ValidationError("train: guided loss needs an acceleration target for every sample");
    }
  }
  TrainResult res;
  res.model = DespawnModel::initialized(depth, cfg.init_bias);
  res.model.normalization = normalization;
  Eigen::VectorXd params = res.model.pack();
  AdamState adam = AdamState::zeros(params.size(), cfg.learning_rate);

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);

  double best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats st;
    st.epoch = epoch;
    for (const std::size_t idx : order) {
      const auto gr = backward(res.model, samples[idx], cfg.loss);
      st.mean_loss += gr.loss.total;
      st.mean_reconstruction += gr.loss.reconstruction;
      st.mean_regularizer += gr.loss.regularizer;
      adam_step(params, gr.gradient, adam);
      res.model.unpack(params);
    }
    const auto n = static_cast<double>(samples.size());
    st.mean_loss /= n;
    st.mean_reconstruction /= n;
    st.mean_regularizer /= n;
    if (!std::isfinite(st.mean_loss)) throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch));
    res.trace.push_back(st);

    if (cfg.early_stop) {
      if (st.mean_loss < best * (1.0 - cfg.min_relative_improvement)) {
        best = st.mean_loss;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        break;
      }
    }
  }
  return res;
}

double kink_margin(const DespawnModel& m, const TrainingSample& sample, const LossConfig& cfg) {
  const ForwardTrace tr = forward(m, sample);
  double margin = std::numeric_limits<double>::infinity();
  if (cfg.weights.w_recon > 0.0) {
    for (Index i = 0; i < sample.valid(); ++i) {
      margin = std::min(margin, std::abs(sample.signal[i] - tr.reconstruction[i]));
    }
  }
  if (cfg.weights.w_guide > 0.0) {
    const auto L = static_cast<std::size_t>(m.depth());
    for (std::size_t j = 0; j <= L; ++j) {
      const Eigen::VectorXd& z = j == L ? tr.approximation : tr.details[j];
      const Eigen::VectorXd& raw = j == L ? tr.raw_approximation : tr.raw_details[j];
      const Index v = tr.valid_lengths[j];
      const auto a = z.head(v).cwiseAbs();
      // The gate is strictly positive, so |z| has its kink where the raw coefficient crosses zero.
      margin = std::min(margin, raw.head(v).cwiseAbs().minCoeff());
      if (cfg.kind == LossKind::Agasdf) {
        double first = -1.0, second = -1.0;
        for (Index k = 0; k < v; ++k) {
          if (a[k] > first) {
            second = first;
            first = a[k];
          } else if (a[k] > second) {
            second = a[k];
          }
        }
        if (v > 1) margin = std::min(margin, first - second);
        const auto& t = sample.target->bands[j];
        margin = std::min(margin, std::abs(first - t.max_abs));
        margin = std::min(margin, std::abs(a.mean() - t.mean_abs));
      }
    }
  }
  return margin;
}

GradientCheckReport gradient_check_against(const DespawnModel& m, const TrainingSample& sample,
                                           const LossConfig& cfg, const Eigen::VectorXd& analytic,
                                           double tolerance, double step) {
  GradientCheckReport rep;
  rep.analytic = analytic;
  const Eigen::VectorXd base = m.pack();
  rep.numeric.resize(base.size());
  DespawnModel probe = m;
  for (Index i = 0; i < base.size(); ++i) {
    Eigen::VectorXd p = base;
    p[i] = base[i] + step;
    probe.unpack(p);
    const double up = evaluate_loss(probe, sample, cfg).total;
    p[i] = base[i] - step;
    probe.unpack(p);
    const double down = evaluate_loss(probe, sample, cfg).total;
    rep.numeric[i] = (up - down) / (2.0 * step);
    const double a = analytic[i], n = rep.numeric[i];
    const double rel = std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
    if (rep.worst_index < 0 || rel > rep.worst_relative_error) {
      rep.worst_relative_error = rel;
      rep.worst_index = i;
    }
  }
  rep.worst_parameter = rep.worst_index >= 0 ? m.parameter_name(rep.worst_index) : std::string();
  rep.passed = rep.worst_relative_error < tolerance || std::isinf(tolerance);
  return rep;
}

GradientCheckReport gradient_check(const DespawnModel& m, const TrainingSample& sample, const LossConfig& cfg,
                                   double tolerance, double step, std::uint64_t seed, double kink_tolerance) {
  TrainingSample s = sample;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1e-3);
  int retries = 0;
  while (kink_margin(m, s, cfg) < kink_tolerance && retries < 50) {
    for (Index i = 0; i < s.valid(); ++i) s.signal[i] += noise(rng);
    ++retries;
  }
  auto rep = gradient_check_against(m, s, cfg, backward(m, s, cfg).gradient, tolerance, step);
  rep.kink_retries = retries;
  return rep;
}

GradientCheckCase random_gradient_check_case(std::uint64_t seed, Index n, int depth) {
  if (n < 2 || depth < 1) throw ValidationError("gradient check case needs n >= 2 and depth >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  GradientCheckCase c;
  c.sample.signal.resize(n);
  for (auto& x : c.sample.signal) x = nd(rng);
  Eigen::VectorXd acc(n);
  for (auto& x : acc) x = nd(rng);
  c.sample.target = guidance_target(acc, depth);
  c.model = DespawnModel::initialized(depth);
  for (auto& k : c.model.kernels) {
    for (auto& t : k) t += 0.05 * nd(rng);
  }
  for (auto& t : c.model.thresholds) {
    t.b_plus += 0.1 * nd(rng);
    t.b_minus += 0.1 * nd(rng);
  }
  return c;
}

}  // namespace agasdf
