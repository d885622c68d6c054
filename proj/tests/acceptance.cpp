// Acceptance run: one PASS/FAIL line per criterion. Criteria 7-9 train several hundred
// models and take about half an hour on one core.
#include "agasdf/despawn.hpp"
#include "agasdf/experiments.hpp"
#include "agasdf/svm.hpp"
#include "agasdf/synthgen.hpp"
#include "agasdf/training.hpp"
#include "agasdf/wavelet.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>

#ifndef AGASDF_CLI_PATH
#error "AGASDF_CLI_PATH must name the CLI binary"
#endif

using namespace agasdf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Eigen::VectorXd gaussian(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd x(n);
  for (Index i = 0; i < n; ++i) x[i] = nd(rng);
  return x;
}

Outcome perfect_reconstruction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto m = DespawnModel::initialized(8, 0.0);
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd s = gaussian(1024, rng);
    worst = std::max(worst, (decode(encode(s, m), m) - s).cwiseAbs().maxCoeff());
  }
  const double t = seconds_since(t0);
  return {worst < 1e-8 && t < 5.0, "max error " + fmt("%.3g", worst) + ", " + fmt("%.2f", t) + " s"};
}

Outcome parseval() {
  const auto m = DespawnModel::initialized(8, 0.0);
  std::mt19937_64 rng(2025);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::VectorXd s = gaussian(1024, rng);
    const auto p = encode(s, m);
    double energy = p.approximation.squaredNorm();
    for (const auto& d : p.details) energy += d.squaredNorm();
    worst = std::max(worst, std::abs(energy - s.squaredNorm()) / s.squaredNorm());
  }
  return {worst < 1e-10, "worst relative energy gap " + fmt("%.3g", worst)};
}

// Two opposite sigmoids evaluated directly in long double.
long double ht_direct(long double x, long double bp, long double bm, long double a) {
  return x * (1.0L / (1.0L + std::exp(-a * (x - bp))) + 1.0L / (1.0L + std::exp(a * (x + bm))));
}

Outcome hard_threshold_analytics() {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  bool identity = true;
  for (int k = 0; k < 100000; ++k) {
    const double x = k < 2001 ? -10.0 + 0.01 * k : u(rng);
    identity &= hard_threshold(x, 0.0, 0.0) == x;
  }
  const double at2 = hard_threshold(2.0, 0.5, 0.5, 10.0);
  const bool in_range = at2 >= 1.99999 && at2 <= 2.0;
  const bool matches = std::abs(static_cast<long double>(at2) - ht_direct(2.0L, 0.5L, 0.5L, 10.0L)) < 1e-15L;
  bool zero = true;
  for (double b : {0.0, 0.1, 0.5, 3.0}) zero &= hard_threshold(0.0, b, b) == 0.0;
  return {identity && in_range && matches && zero,
          std::string("identity ") + (identity ? "exact" : "broken") + ", HT(2;0.5,0.5)=" + fmt("%.9f", at2) +
              (matches ? "" : " (disagrees with direct evaluation)") + ", HT(0)=0 " + (zero ? "yes" : "no")};
}

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  int checks = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto c = random_gradient_check_case(seed, 64, 3);
    for (LossKind kind : {LossKind::Agasdf, LossKind::Despawn}) {
      for (bool mean : {false, true}) {
        LossConfig cfg;
        cfg.kind = kind;
        cfg.mean_normalized = mean;
        const auto r = gradient_check(c.model, c.sample, cfg, 1e-4, 1e-5, seed);
        worst = std::max(worst, r.worst_relative_error);
        ++checks;
      }
    }
  }
  const double t = seconds_since(t0);
  return {worst < 1e-4 && t < 60.0,
          std::to_string(checks) + " checks, worst relative error " + fmt("%.3g", worst) + ", " + fmt("%.1f", t) + " s"};
}

Outcome training_progress() {
  SynthOptions opt;
  const auto records = generate_records(opt);
  const auto ds = make_band_dataset({records.front()}, 6);
  std::vector<TrainingSample> samples;
  for (const auto& b : ds.samples) {
    samples.push_back({b.acoustic, b.valid_length, guidance_target(b.acceleration, ds.depth, b.valid_length)});
  }
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.early_stop = false;
  cfg.seed = 1;
  cfg.loss.weights = {1.0, 1.0};
  cfg.loss.mean_normalized = true;
  const auto r = train(samples, ds.depth, cfg, ds.acoustic_normalization);
  const auto& first = r.trace.front();
  const auto& last = r.trace.back();
  const double loss_ratio = last.mean_loss / first.mean_loss;
  const double guide_ratio = last.mean_regularizer / first.mean_regularizer;
  return {r.trace.size() == 500 && loss_ratio <= 0.5 && guide_ratio <= 0.5,
          "final/initial loss " + fmt("%.3f", loss_ratio) + ", guidance " + fmt("%.3f", guide_ratio)};
}

// Best feasible point over every (0, free, C) active-set pattern of the dual.
double brute_force_dual(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double C) {
  const Index n = y.size();
  const Eigen::MatrixXd Q = (y * y.transpose()).cwiseProduct(K);
  int patterns = 1;
  for (Index i = 0; i < n; ++i) patterns *= 3;
  double best = std::numeric_limits<double>::infinity();
  for (int code = 0; code < patterns; ++code) {
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    std::vector<Index> F;
    for (Index i = 0, c = code; i < n; ++i, c /= 3) {
      if (c % 3 == 1) F.push_back(i);
      if (c % 3 == 2) alpha[i] = C;
    }
    const Index f = static_cast<Index>(F.size());
    if (f > 0) {
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(f + 1, f + 1);
      Eigen::VectorXd rhs(f + 1);
      for (Index a = 0; a < f; ++a) {
        for (Index b = 0; b < f; ++b) A(a, b) = Q(F[a], F[b]);
        A(a, f) = A(f, a) = y[F[a]];
        rhs[a] = 1.0 - Q.row(F[a]).dot(alpha);
      }
      rhs[f] = -y.dot(alpha);
      const Eigen::VectorXd sol = A.fullPivLu().solve(rhs);
      if (!((A * sol - rhs).cwiseAbs().maxCoeff() < 1e-9)) continue;
      for (Index a = 0; a < f; ++a) alpha[F[a]] = sol[a];
    }
    if (std::abs(y.dot(alpha)) > 1e-9 || (alpha.array() < -1e-12).any() || (alpha.array() > C + 1e-12).any()) continue;
    best = std::min(best, 0.5 * alpha.dot(Q * alpha) - alpha.sum());
  }
  return best;
}

Outcome smo_oracle() {
  Eigen::MatrixXd x(6, 2);
  x << 0.0, 0.0, 1.0, 0.2, 0.3, 1.1, 1.2, 1.0, 0.6, 0.5, 2.0, 1.6;
  Eigen::VectorXd y(6);
  y << 1, 1, 1, -1, -1, -1;
  const double C = 1.0;
  const Eigen::MatrixXd K = rbf_gram(x, 0.5);
  const double gap = std::abs(smo_solve(K, y, C).objective - brute_force_dual(K, y, C));

  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd(0.0, 0.4);
  Eigen::MatrixXd pts(60, 2);
  std::vector<int> labels;
  for (int i = 0; i < 60; ++i) {
    const int c = i / 20;
    pts(i, 0) = 5.0 * c + nd(rng);
    pts(i, 1) = (c == 1 ? 4.0 : 0.0) + nd(rng);
    labels.push_back(c);
  }
  const double acc = evaluate(svm_train(pts, labels, 1.0, 1.0), pts, labels).overall;
  return {gap < 1e-6 && acc == 100.0, "objective gap " + fmt("%.3g", gap) + ", clusters " + fmt("%.1f", acc) + "%"};
}

Outcome task1_trend(const BandDataset& ds) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentPlan plan;
  plan.tasks = {Task::Task1};
  plan.methods = {Method::AgAsdf, Method::Despawn, Method::Fdwt};
  const auto r = run_plan(ds, plan);
  const double t = seconds_since(t0);
  const double ag = r.find(Task::Task1, Method::AgAsdf).average.mean;
  const double de = r.find(Task::Task1, Method::Despawn).average.mean;
  const double fd = r.find(Task::Task1, Method::Fdwt).average.mean;
  return {ag >= de && de >= fd && ag >= 90.0 && ag - fd >= 3.0 && t < 1800.0,
          "AG-ASDF " + format_mean_std(r.find(Task::Task1, Method::AgAsdf).average) + ", DeSpaWN " +
              format_mean_std(r.find(Task::Task1, Method::Despawn).average) + ", FDWT " + fmt("%.1f", fd) + ", " +
              fmt("%.0f", t) + " s"};
}

Outcome weight_sweep(const ExperimentReport& r, const ExperimentPlan& plan) {
  const auto avg = sweep_column_averages(r, plan);
  std::string detail;
  bool lowest = true;
  for (std::size_t i = 0; i < avg.size(); ++i) {
    detail += (i ? ", " : "") + plan.weight_ratios[i].to_string() + " " + fmt("%.2f", avg[i]);
    if (i > 0) lowest &= avg[0] < avg[i];
  }
  const double gap = std::abs(avg[3] - avg[6]);
  return {lowest && gap < 3.0, detail};
}

Outcome extrapolation(const ExperimentReport& r) {
  const LossWeights w{1.0, 1.0};
  const double c1 = r.find(Task::C1, w).average.mean;
  const double c2 = r.find(Task::C2, w).average.mean;
  const double c3 = r.find(Task::C3, w).average.mean;
  return {c1 < c2 && c1 < c3, "C1 " + fmt("%.1f", c1) + ", C2 " + fmt("%.1f", c2) + ", C3 " + fmt("%.1f", c3)};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    files[fs::relative(e.path(), dir).string()] = std::string(std::istreambuf_iterator<char>(in), {});
  }
  return files;
}

Outcome cli_determinism() {
  std::random_device rd;
  const fs::path root = fs::temp_directory_path() / ("agasdf_accept_" + std::to_string(rd()));
  const std::string cli = AGASDF_CLI_PATH;
  // Passes of 0.4 s leave 1333 samples per band, enough for one STFT window.
  auto run = [&](const fs::path& out) {
    const std::string q = "\"";
    const std::string ds = q + (out / "data").string() + q;
    const std::string manifest = q + (out / "data" / "manifest.json").string() + q;
    const std::string cmds[] = {
        q + cli + q + " --seed 5 --out " + ds + " synth --desk-duration 0.4",
        q + cli + q + " --seed 5 --out " + q + (out / "train").string() + q + " train --dataset " + manifest +
            " --epochs 2",
        q + cli + q + " --seed 5 --out " + q + (out / "exp").string() + q + " experiment --plan c1 --dataset " +
            manifest + " --epochs 2 --repetitions 1",
    };
    for (const auto& c : cmds) {
      if (std::system((c + " > /dev/null 2>&1").c_str()) != 0) return false;
    }
    return true;
  };
  const bool ran = run(root / "a") && run(root / "b");
  bool same = false;
  std::size_t n = 0;
  if (ran) {
    const auto a = snapshot(root / "a");
    n = a.size();
    same = n > 0 && a == snapshot(root / "b");
  }
  std::error_code ec;
  fs::remove_all(root, ec);
  if (!ran) return {false, "a CLI run failed"};
  return {same, std::to_string(n) + " artifacts " + (same ? "bit-identical" : "differ")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("[%2d] %s %s: %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  };
  report(1, "perfect reconstruction", perfect_reconstruction());
  report(2, "Parseval", parseval());
  report(3, "hard threshold analytics", hard_threshold_analytics());
  report(4, "gradient correctness", gradient_correctness());
  report(5, "training progress", training_progress());
  report(6, "SMO oracle", smo_oracle());

  SynthOptions opt;  // seed 1, SNR 0 dB, 2 s desk passes
  const BandDataset ds = make_band_dataset(generate_records(opt), 6);
  report(7, "mixed-speed trend", task1_trend(ds));

  // One repetition per sweep cell keeps the sweep near half an hour; C1-C3 reuse its 1:1 column.
  ExperimentPlan sweep;
  sweep.tasks.assign(std::begin(kAllTasks), std::end(kAllTasks));
  sweep.weight_ratios = sweep_ratios();
  sweep.repetitions = 1;
  const auto sr = run_weight_sweep(ds, sweep);
  report(8, "weight sweep trend", weight_sweep(sr, sweep));
  report(9, "extrapolation hardness", extrapolation(sr));
  report(10, "CLI determinism", cli_determinism());

  std::printf("%d of 10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
