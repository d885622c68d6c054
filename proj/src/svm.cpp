#include "agasdf/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>

namespace agasdf {

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
  if (rows.rows() == 0) throw ValidationError("standardize: empty training set");
  Standardizer s;
  s.mean = rows.colwise().mean();
  s.scale.resize(rows.cols());
  for (Index j = 0; j < rows.cols(); ++j) {
    const double sd = std::sqrt((rows.col(j).array() - s.mean[j]).square().mean());
    s.scale[j] = sd < 1e-12 ? 0.0 : 1.0 / sd;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != mean.size()) throw ValidationError("standardize: feature width mismatch");
  return (rows.rowwise() - mean).array().rowwise() * scale.array();
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& row) const {
  if (row.size() != mean.size()) throw ValidationError("standardize: feature width mismatch");
  return ((row.transpose() - mean).array() * scale.array()).transpose();
}

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
                  double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& rows, double gamma) {
  const Index n = rows.rows();
  const Eigen::VectorXd sq = rows.rowwise().squaredNorm();
  Eigen::MatrixXd g = rows * rows.transpose();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) g(i, j) = std::exp(-gamma * std::max(0.0, sq[i] + sq[j] - 2.0 * g(i, j)));
    g(i, i) = 1.0;
  }
  return g;
}

double dual_objective(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, const Eigen::VectorXd& alpha) {
  const Eigen::VectorXd ay = alpha.cwiseProduct(y);
  return 0.5 * ay.dot(gram * ay) - alpha.sum();
}

SmoResult smo_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y, double C, double tolerance,
                    long long max_iterations) {
  const Index n = gram.rows();
  if (n == 0 || gram.cols() != n || y.size() != n) throw ValidationError("smo: shape mismatch");
  if (!(C > 0.0)) throw ValidationError("smo: C must be positive");
  constexpr double kTau = 1e-12;
  if (max_iterations < 0) max_iterations = std::max<long long>(10'000'000, 100LL * n);

  SmoResult r;
  r.alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = -Eigen::VectorXd::Ones(n);  // Q alpha - e
  auto Q = [&](Index i, Index j) { return y[i] * y[j] * gram(i, j); };
  auto in_up = [&](Index t) { return (y[t] > 0 && r.alpha[t] < C) || (y[t] < 0 && r.alpha[t] > 0); };
  auto in_low = [&](Index t) { return (y[t] > 0 && r.alpha[t] > 0) || (y[t] < 0 && r.alpha[t] < C); };

  while (r.iterations < max_iterations) {
    Index i = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    for (Index t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] > gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    Index j = -1;
    double gmin = std::numeric_limits<double>::infinity();
    double best = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double v = -y[t] * grad[t];
      gmin = std::min(gmin, v);
      if (i >= 0 && v < gmax) {
        const double b = gmax - v;
        double a = gram(i, i) + gram(t, t) - 2.0 * gram(i, t);
        if (a <= 0) a = kTau;
        if (-(b * b) / a < best) {
          best = -(b * b) / a;
          j = t;
        }
      }
    }
    if (i < 0 || j < 0 || gmax - gmin < tolerance) {
      r.converged = true;
      break;
    }
    ++r.iterations;

    const double ai_old = r.alpha[i], aj_old = r.alpha[j];
    double a = gram(i, i) + gram(j, j) - 2.0 * gram(i, j);
    if (a <= 0) a = kTau;
    // Move along y_i d_i = -y_j d_j, the direction that keeps sum(alpha y) fixed.
    const double step = (-y[i] * grad[i] + y[j] * grad[j]) / a;
    double ai = ai_old + y[i] * step;
    double aj = aj_old - y[j] * step;
    const double sum = y[i] * ai_old + y[j] * aj_old;
    ai = std::clamp(ai, 0.0, C);
    aj = y[j] * (sum - y[i] * ai);
    aj = std::clamp(aj, 0.0, C);
    ai = y[i] * (sum - y[j] * aj);
    ai = std::clamp(ai, 0.0, C);

    const double di = ai - ai_old, dj = aj - aj_old;
    r.alpha[i] = ai;
    r.alpha[j] = aj;
    for (Index t = 0; t < n; ++t) grad[t] += Q(t, i) * di + Q(t, j) * dj;
  }

  // rho from free vectors, or the midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Index t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (r.alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (r.alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  r.bias = -rho;
  r.objective = dual_objective(gram, y, r.alpha);
  return r;
}

double BinarySvm::decision(const Eigen::VectorXd& x, double gamma) const {
  double f = bias;
  for (Index i = 0; i < support_vectors.rows(); ++i) {
    f += coefficients[i] * rbf_kernel(support_vectors.row(i).transpose(), x, gamma);
  }
  return f;
}

int SvmModel::predict(const Eigen::VectorXd& raw_features) const {
  const Eigen::VectorXd x = scaler.apply(raw_features);
  std::map<int, int> votes;
  for (const auto& m : machines) ++votes[m.decision(x, gamma) > 0.0 ? m.positive_class : m.negative_class];
  int best = classes.front(), best_votes = -1;
  for (int c : classes) {
    const int v = votes.count(c) ? votes.at(c) : 0;
    if (v > best_votes) {
      best = c;
      best_votes = v;
    }
  }
  return best;
}

std::vector<int> SvmModel::predict(const Eigen::MatrixXd& raw_rows) const {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(raw_rows.rows()));
  for (Index i = 0; i < raw_rows.rows(); ++i) out.push_back(predict(Eigen::VectorXd(raw_rows.row(i).transpose())));
  return out;
}

SvmModel svm_train(const Eigen::MatrixXd& rows, const std::vector<int>& labels, double C, double gamma,
                   std::uint64_t /*seed: SMO with deterministic working-set selection needs none*/) {
  if (rows.rows() != static_cast<Index>(labels.size())) throw ValidationError("svm_train: row/label count mismatch");
  const std::set<int> distinct(labels.begin(), labels.end());
  if (distinct.size() < 2) throw ValidationError("svm_train: need at least two classes");
  SvmModel model;
  model.C = C;
  model.gamma = gamma;
  model.classes.assign(distinct.begin(), distinct.end());
  model.scaler = Standardizer::fit(rows);
  const Eigen::MatrixXd x = model.scaler.apply(rows);
  const Eigen::MatrixXd gram = rbf_gram(x, gamma);

  for (std::size_t a = 0; a < model.classes.size(); ++a) {
    for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
      std::vector<Index> idx;
      for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == model.classes[a] || labels[i] == model.classes[b]) idx.push_back(static_cast<Index>(i));
      }
      const Index n = static_cast<Index>(idx.size());
      Eigen::MatrixXd sub(n, n);
      Eigen::VectorXd y(n);
      for (Index i = 0; i < n; ++i) {
        y[i] = labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] == model.classes[a] ? 1.0 : -1.0;
        for (Index j = 0; j < n; ++j) sub(i, j) = gram(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      }
      const SmoResult r = smo_solve(sub, y, C);
      BinarySvm m;
      m.positive_class = model.classes[a];
      m.negative_class = model.classes[b];
      m.bias = r.bias;
      std::vector<Index> sv;
      for (Index i = 0; i < n; ++i) {
        if (r.alpha[i] > 0.0) sv.push_back(i);
      }
      m.support_vectors.resize(static_cast<Index>(sv.size()), x.cols());
      m.coefficients.resize(static_cast<Index>(sv.size()));
      for (std::size_t s = 0; s < sv.size(); ++s) {
        m.support_vectors.row(static_cast<Index>(s)) = x.row(idx[static_cast<std::size_t>(sv[s])]);
        m.coefficients[static_cast<Index>(s)] = r.alpha[sv[s]] * y[sv[s]];
      }
      model.machines.push_back(std::move(m));
    }
  }
  return model;
}

std::vector<int> grouped_stratified_folds(const std::vector<int>& labels, const std::vector<std::string>& groups,
                                          int k, std::uint64_t seed) {
  if (labels.size() != groups.size()) throw ValidationError("folds: label/group count mismatch");
  if (k < 2) throw ValidationError("folds: need at least 2 folds");
  std::map<std::string, int> group_label;
  for (std::size_t i = 0; i < labels.size(); ++i) group_label.emplace(groups[i], labels[i]);
  if (static_cast<int>(group_label.size()) < k) {
    throw ValidationError("cross-validation needs at least " + std::to_string(k) + " rides, got " +
                          std::to_string(group_label.size()));
  }
  std::map<int, std::vector<std::string>> by_class;
  for (const auto& [g, l] : group_label) by_class[l].push_back(g);
  std::mt19937_64 rng(seed);
  std::map<std::string, int> group_fold;
  int next = 0;
  for (auto& [label, gs] : by_class) {
    std::shuffle(gs.begin(), gs.end(), rng);
    for (const auto& g : gs) {
      group_fold[g] = next;
      next = (next + 1) % k;
    }
  }
  std::vector<int> folds(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) folds[i] = group_fold.at(groups[i]);
  return folds;
}

namespace {

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& rows, const std::vector<Index>& idx) {
  Eigen::MatrixXd out(static_cast<Index>(idx.size()), rows.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Index>(i)) = rows.row(idx[i]);
  return out;
}

}  // namespace

CrossValidationResult cross_validate(const Eigen::MatrixXd& rows, const std::vector<int>& labels,
                                     const std::vector<std::string>& groups, const SvmGrid& grid, int k,
                                     std::uint64_t seed) {
  if (grid.C.empty() || grid.gamma.empty()) throw ValidationError("cross_validate: empty grid");
  if (static_cast<int>(labels.size()) < k) throw ValidationError("cross_validate: fewer samples than folds");
  const auto folds = grouped_stratified_folds(labels, groups, k, seed);
  CrossValidationResult res;
  res.mean_accuracy = Eigen::MatrixXd::Zero(static_cast<Index>(grid.C.size()), static_cast<Index>(grid.gamma.size()));

  for (int f = 0; f < k; ++f) {
    std::vector<Index> tr, va;
    std::vector<int> ytr, yva;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (folds[i] == f) {
        va.push_back(static_cast<Index>(i));
        yva.push_back(labels[i]);
      } else {
        tr.push_back(static_cast<Index>(i));
        ytr.push_back(labels[i]);
      }
    }
    const Eigen::MatrixXd xtr = take_rows(rows, tr), xva = take_rows(rows, va);
    for (std::size_t ci = 0; ci < grid.C.size(); ++ci) {
      for (std::size_t gi = 0; gi < grid.gamma.size(); ++gi) {
        double acc = 0.0;
        if (std::set<int>(ytr.begin(), ytr.end()).size() >= 2) {
          acc = evaluate(svm_train(xtr, ytr, grid.C[ci], grid.gamma[gi], seed), xva, yva).overall;
        }
        res.mean_accuracy(static_cast<Index>(ci), static_cast<Index>(gi)) += acc / k;
      }
    }
  }
  // Strict improvement keeps the earliest (smallest C, then smallest gamma) on ties, given sorted grids.
  std::vector<std::size_t> corder(grid.C.size()), gorder(grid.gamma.size());
  for (std::size_t i = 0; i < corder.size(); ++i) corder[i] = i;
  for (std::size_t i = 0; i < gorder.size(); ++i) gorder[i] = i;
  std::sort(corder.begin(), corder.end(), [&](auto a, auto b) { return grid.C[a] < grid.C[b]; });
  std::sort(gorder.begin(), gorder.end(), [&](auto a, auto b) { return grid.gamma[a] < grid.gamma[b]; });
  res.accuracy = -1.0;
  for (auto ci : corder) {
    for (auto gi : gorder) {
      const double a = res.mean_accuracy(static_cast<Index>(ci), static_cast<Index>(gi));
      if (a > res.accuracy + 1e-12) {
        res.accuracy = a;
        res.C = grid.C[ci];
        res.gamma = grid.gamma[gi];
      }
    }
  }
  return res;
}

EvaluationReport evaluate(const std::vector<int>& truth, const std::vector<int>& predicted) {
  if (truth.size() != predicted.size()) throw ValidationError("evaluate: size mismatch");
  EvaluationReport rep;
  std::array<int, kNumClasses> total{}, hit{};
  int correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= kNumClasses) throw ValidationError("evaluate: label out of range");
    ++total[static_cast<std::size_t>(truth[i])];
    if (truth[i] == predicted[i]) {
      ++hit[static_cast<std::size_t>(truth[i])];
      ++correct;
    }
  }
  double sum = 0.0;
  int present = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (total[c] == 0) continue;
    rep.per_class[c] = 100.0 * hit[c] / total[c];
    sum += *rep.per_class[c];
    ++present;
  }
  rep.average = present ? sum / present : 0.0;
  rep.overall = truth.empty() ? 0.0 : 100.0 * correct / static_cast<double>(truth.size());
  return rep;
}

EvaluationReport evaluate(const SvmModel& model, const Eigen::MatrixXd& rows, const std::vector<int>& labels) {
  return evaluate(labels, model.predict(rows));
}

}  // namespace agasdf
