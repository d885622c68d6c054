#include "agasdf/experiments.hpp"

#include "agasdf/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace agasdf {

std::string to_string(Task t) {
  switch (t) {
    case Task::Task1: return "task1";
    case Task::Loso80: return "loso80";
    case Task::C1: return "c1";
    case Task::C2: return "c2";
    case Task::C3: return "c3";
  }
  return "?";
}

Task task_from_string(const std::string& s) {
  for (Task t : kAllTasks) {
    if (to_string(t) == s) return t;
  }
  throw ValidationError("unknown task '" + s + "' (expected task1, loso80, c1, c2 or c3)");
}

int held_out_speed(Task t) {
  switch (t) {
    case Task::Task1: return 0;
    case Task::Loso80: return 80;
    case Task::C1: return 20;
    case Task::C2: return 40;
    case Task::C3: return 60;
  }
  return 0;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t cell_seed(std::uint64_t seed, Task t, Method m, int rep) {
  return mix(mix(mix(seed) ^ static_cast<std::uint64_t>(t)) ^ (static_cast<std::uint64_t>(m) << 8)) ^
         static_cast<std::uint64_t>(rep);
}

}  // namespace

std::vector<RideMeta> rides_of(const BandDataset& ds) {
  std::map<std::string, RideMeta> rides;
  for (const auto& s : ds.samples) rides.emplace(s.ride_id, RideMeta{s.ride_id, s.label, s.speed_kmh});
  std::vector<RideMeta> out;
  for (auto& kv : rides) out.push_back(kv.second);
  return out;
}

Split make_split(const BandDataset& ds, Task t, std::uint64_t seed) { return make_split(rides_of(ds), t, seed); }

Split make_split(const std::vector<RideMeta>& ride_list, Task t, std::uint64_t seed) {
  std::map<std::string, RideMeta> rides;
  for (const auto& r : ride_list) {
    const auto [it, fresh] = rides.emplace(r.ride_id, r);
    if (!fresh && (it->second.label != r.label || it->second.speed_kmh != r.speed_kmh)) {
      throw ValidationError("ride " + r.ride_id + " appears with different labels or speeds");
    }
  }
  Split sp;
  const int hold = held_out_speed(t);
  if (hold != 0) {
    for (const auto& [id, info] : rides) (info.speed_kmh == hold ? sp.test_rides : sp.train_rides).push_back(id);
    if (sp.test_rides.empty()) {
      throw ValidationError("plan " + to_string(t) + " tests on " + std::to_string(hold) +
                            " km/h but the dataset has no rides at that speed");
    }
    if (sp.train_rides.empty()) throw ValidationError("plan " + to_string(t) + " leaves no training rides");
    return sp;
  }
  std::map<std::pair<int, int>, std::vector<std::string>> cells;
  for (const auto& [id, info] : rides) cells[{static_cast<int>(info.label), info.speed_kmh}].push_back(id);
  std::mt19937_64 rng(mix(seed));
  // Fractional training quota 3/4 per cell; leftover quarters go to seeded cells.
  std::vector<std::pair<int, int>> keys;
  for (const auto& kv : cells) keys.push_back(kv.first);
  std::vector<std::size_t> extra_order(keys.size());
  for (std::size_t i = 0; i < keys.size(); ++i) extra_order[i] = i;
  std::shuffle(extra_order.begin(), extra_order.end(), rng);
  std::size_t total = rides.size();
  std::size_t target_train = (3 * total) / 4;
  std::vector<std::size_t> quota(keys.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    quota[i] = (3 * cells[keys[i]].size()) / 4;
    assigned += quota[i];
  }
  for (std::size_t j = 0; assigned < target_train && j < extra_order.size(); ++j) {
    const auto i = extra_order[j];
    if (quota[i] < cells[keys[i]].size()) {
      ++quota[i];
      ++assigned;
    }
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    auto ids = cells[keys[i]];
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t k = 0; k < ids.size(); ++k) (k < quota[i] ? sp.train_rides : sp.test_rides).push_back(ids[k]);
  }
  std::sort(sp.train_rides.begin(), sp.train_rides.end());
  std::sort(sp.test_rides.begin(), sp.test_rides.end());
  if (sp.test_rides.empty() || sp.train_rides.empty()) throw ValidationError("mixed-speed split needs at least 2 rides");
  return sp;
}

std::vector<LossWeights> sweep_ratios() {
  return {{1, 0}, {1, 0.1}, {1, 0.5}, {1, 1}, {1, 2}, {1, 10}, {0, 1}};
}

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd r;
  r.count = static_cast<int>(xs.size());
  if (xs.empty()) return r;
  for (double x : xs) r.mean += x;
  r.mean /= static_cast<double>(xs.size());
  for (double x : xs) r.std += (x - r.mean) * (x - r.mean);
  r.std = std::sqrt(r.std / static_cast<double>(xs.size()));
  return r;
}

std::string format_mean_std(const MeanStd& v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, v.mean, decimals, v.std);
  return buf;
}

namespace {

bool same_weights(const LossWeights& a, const LossWeights& b) {
  return a.w_recon == b.w_recon && a.w_guide == b.w_guide;
}

Eigen::VectorXd fixed_features(const BandSample& s, Method m, int depth) {
  switch (m) {
    case Method::Fdwt: return fdwt_features(s.acoustic, depth, s.valid_length);
    case Method::Wpt: return wpt_band_features(s.acoustic, s.valid_length);
    case Method::Stft: return stft_band_features(s.acoustic.head(s.valid_length));
    default: break;
  }
  throw ValidationError("fixed_features: " + to_string(m) + " is learnable");
}

struct Job {
  Task task;
  Method method;
  LossWeights weights;
  int repetition;
};

template <typename F>
void parallel_for(std::size_t n, int threads, F&& body) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

Eigen::MatrixXd stack(const std::vector<Eigen::VectorXd>& rows, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd x(static_cast<Index>(idx.size()), rows.at(idx.front()).size());
  for (std::size_t i = 0; i < idx.size(); ++i) x.row(static_cast<Index>(i)) = rows[idx[i]].transpose();
  return x;
}

CellResult run_cell(const BandDataset& ds, const ExperimentPlan& plan, const Job& job,
                    const std::map<Method, std::vector<Eigen::VectorXd>>& cached) {
  const Split sp = make_split(ds, job.task, plan.seed);
  const std::set<std::string> train_rides(sp.train_rides.begin(), sp.train_rides.end());
  std::vector<std::size_t> tr, te;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) (train_rides.count(ds.samples[i].ride_id) ? tr : te).push_back(i);

  CellResult cell{job.task, job.method, job.weights, job.repetition, {}, 0, 0, {}};
  const std::uint64_t seed = cell_seed(plan.seed, job.task, job.method, job.repetition);

  std::vector<Eigen::VectorXd> feats;
  if (is_learnable(job.method)) {
    std::vector<TrainingSample> samples;
    samples.reserve(tr.size());
    for (auto i : tr) {
      const auto& b = ds.samples[i];
      TrainingSample t{b.acoustic, b.valid_length, std::nullopt};
      if (job.method == Method::AgAsdf) t.target = guidance_target(b.acceleration, ds.depth, b.valid_length);
      samples.push_back(std::move(t));
    }
    TrainConfig cfg;
    cfg.loss.kind = job.method == Method::AgAsdf ? LossKind::Agasdf : LossKind::Despawn;
    cfg.loss.weights = job.weights;
    cfg.loss.mean_normalized = plan.mean_normalized;
    cfg.epochs = plan.epochs;
    cfg.learning_rate = plan.learning_rate;
    cfg.seed = seed;
    auto res = train(samples, ds.depth, cfg, ds.acoustic_normalization);
    if (plan.keep_traces) cell.trace = std::move(res.trace);
    feats.reserve(ds.samples.size());
    for (const auto& s : ds.samples) feats.push_back(learned_features(s.acoustic, res.model, s.valid_length));
  }
  const auto& rows = is_learnable(job.method) ? feats : cached.at(job.method);

  std::vector<int> ytr, yte;
  std::vector<std::string> groups;
  for (auto i : tr) {
    ytr.push_back(static_cast<int>(ds.samples[i].label));
    groups.push_back(ds.samples[i].ride_id);
  }
  for (auto i : te) yte.push_back(static_cast<int>(ds.samples[i].label));
  const Eigen::MatrixXd xtr = stack(rows, tr), xte = stack(rows, te);
  const auto cv = cross_validate(xtr, ytr, groups, plan.grid, plan.cv_folds, seed);
  const SvmModel model = svm_train(xtr, ytr, cv.C, cv.gamma, seed);
  cell.C = cv.C;
  cell.gamma = cv.gamma;
  cell.report = evaluate(model, xte, yte);
  return cell;
}

void summarize(ExperimentReport& r) {
  for (const auto& c : r.cells) {
    const bool seen = std::any_of(r.summaries.begin(), r.summaries.end(), [&](const CellSummary& s) {
      return s.task == c.task && s.method == c.method && same_weights(s.weights, c.weights);
    });
    if (seen) continue;
    CellSummary s{c.task, c.method, c.weights, {}, {}};
    std::vector<double> avg;
    std::array<std::vector<double>, kNumClasses> per;
    for (const auto& o : r.cells) {
      if (o.task != c.task || o.method != c.method || !same_weights(o.weights, c.weights)) continue;
      avg.push_back(o.report.average);
      for (std::size_t k = 0; k < kNumClasses; ++k) {
        if (o.report.per_class[k]) per[k].push_back(*o.report.per_class[k]);
      }
    }
    s.average = mean_std(avg);
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      if (!per[k].empty()) s.per_class[k] = mean_std(per[k]);
    }
    r.summaries.push_back(s);
  }
}

std::string ratio_label(const LossWeights& w) {
  std::ostringstream o;
  o << w.w_recon << ":" << w.w_guide;
  return o.str();
}

}  // namespace

const CellSummary& ExperimentReport::find(Task t, Method m) const {
  for (const auto& s : summaries) {
    if (s.task == t && s.method == m) return s;
  }
  throw ValidationError("report has no cell for " + to_string(t) + "/" + to_string(m));
}

const CellSummary& ExperimentReport::find(Task t, const LossWeights& w) const {
  for (const auto& s : summaries) {
    if (s.task == t && s.method == Method::AgAsdf && same_weights(s.weights, w)) return s;
  }
  throw ValidationError("report has no AG_ASDF cell for " + to_string(t) + " at " + ratio_label(w));
}

ExperimentReport run_plan(const BandDataset& ds, const ExperimentPlan& plan) {
  if (plan.tasks.empty() || plan.methods.empty()) throw ValidationError("plan has no tasks or no methods");
  if (plan.repetitions < 1 || plan.deterministic_repetitions < 1) throw ValidationError("repetitions must be >= 1");
  for (const auto& w : plan.weight_ratios) w.validate();

  std::vector<Job> jobs;
  for (Task t : plan.tasks) {
    for (Method m : plan.methods) {
      if (m == Method::AgAsdf) {
        for (const auto& w : plan.weight_ratios) {
          for (int r = 0; r < plan.repetitions; ++r) jobs.push_back({t, m, w, r});
        }
      } else {
        const int reps = is_learnable(m) ? plan.repetitions : plan.deterministic_repetitions;
        for (int r = 0; r < reps; ++r) jobs.push_back({t, m, LossWeights{1, 1}, r});
      }
    }
  }

  std::map<Method, std::vector<Eigen::VectorXd>> cached;
  for (Method m : plan.methods) {
    if (is_learnable(m)) continue;
    auto& rows = cached[m];
    rows.resize(ds.samples.size());
    parallel_for(ds.samples.size(), plan.threads,
                 [&](std::size_t i) { rows[i] = fixed_features(ds.samples[i], m, ds.depth); });
  }

  ExperimentReport r;
  r.cells.resize(jobs.size());
  parallel_for(jobs.size(), plan.threads, [&](std::size_t i) { r.cells[i] = run_cell(ds, plan, jobs[i], cached); });
  summarize(r);
  return r;
}

ExperimentReport run_weight_sweep(const BandDataset& ds, ExperimentPlan plan) {
  plan.methods = {Method::AgAsdf};
  if (plan.weight_ratios.size() < 2) plan.weight_ratios = sweep_ratios();
  return run_plan(ds, plan);
}

std::vector<double> sweep_column_averages(const ExperimentReport& r, const ExperimentPlan& plan) {
  std::vector<double> avg;
  for (const auto& w : plan.weight_ratios) {
    double sum = 0.0;
    for (Task t : plan.tasks) sum += r.find(t, w).average.mean;
    avg.push_back(sum / static_cast<double>(plan.tasks.size()));
  }
  return avg;
}

namespace {

std::string pad(const std::string& s, std::size_t w) {
  // Width in code points, so the plus-minus sign counts once.
  std::size_t len = 0;
  for (unsigned char c : s) len += (c & 0xC0) != 0x80;
  return s + std::string(w > len ? w - len : 0, ' ');
}

std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      std::size_t len = 0;
      for (unsigned char c : row[j]) len += (c & 0xC0) != 0x80;
      if (j >= width.size()) width.push_back(0);
      width[j] = std::max(width[j], len);
    }
  }
  std::string out;
  for (const auto& row : rows) {
    std::string line;
    for (std::size_t j = 0; j < row.size(); ++j) line += pad(row[j], j + 1 < row.size() ? width[j] + 2 : 0);
    out += line + "\n";
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

void write_task_report(const ExperimentReport& r, const std::filesystem::path& out_dir, const std::string& stem) {
  std::filesystem::create_directories(out_dir);
  std::string csv = "task,method,weights,repetitions,class,mean,std\n";
  std::vector<std::vector<std::string>> table{{"task", "method", "weights", "no_degradation", "intermediate",
                                               "severe", "average"}};
  for (const auto& s : r.summaries) {
    std::vector<std::string> row{to_string(s.task), to_string(s.method),
                                 is_learnable(s.method) ? ratio_label(s.weights) : "-"};
    for (std::size_t k = 0; k < kNumClasses; ++k) {
      const std::string cls = to_string(static_cast<TrackClass>(k));
      if (s.per_class[k]) {
        csv += row[0] + "," + row[1] + "," + row[2] + "," + std::to_string(s.per_class[k]->count) + "," + cls + "," +
               fixed(s.per_class[k]->mean) + "," + fixed(s.per_class[k]->std) + "\n";
        row.push_back(format_mean_std(*s.per_class[k]));
      } else {
        csv += row[0] + "," + row[1] + "," + row[2] + ",0," + cls + ",N/A,N/A\n";
        row.push_back("N/A");
      }
    }
    csv += row[0] + "," + row[1] + "," + row[2] + "," + std::to_string(s.average.count) + ",average," +
           fixed(s.average.mean) + "," + fixed(s.average.std) + "\n";
    row.push_back(format_mean_std(s.average));
    table.push_back(row);
  }
  write_text(out_dir / (stem + ".csv"), csv);
  write_text(out_dir / (stem + ".txt"), aligned(table));
}

void write_sweep_report(const ExperimentReport& r, const ExperimentPlan& plan, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::vector<std::string>> table{{"task"}};
  std::string csv = "task";
  for (const auto& w : plan.weight_ratios) {
    table[0].push_back(ratio_label(w));
    csv += "," + ratio_label(w) + "_mean," + ratio_label(w) + "_std";
  }
  csv += "\n";
  for (Task t : plan.tasks) {
    std::vector<std::string> row{to_string(t)};
    csv += to_string(t);
    for (const auto& w : plan.weight_ratios) {
      const auto& s = r.find(t, w);
      row.push_back(format_mean_std(s.average));
      csv += "," + fixed(s.average.mean) + "," + fixed(s.average.std);
    }
    csv += "\n";
    table.push_back(row);
  }
  std::vector<std::string> avg_row{"average"};
  csv += "average";
  for (double a : sweep_column_averages(r, plan)) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", a);
    avg_row.push_back(buf);
    csv += "," + fixed(a) + ",";
  }
  csv += "\n";
  table.push_back(avg_row);
  write_text(out_dir / "sweep.csv", csv);
  write_text(out_dir / "sweep.txt", aligned(table));
}

void write_traces(const ExperimentReport& r, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& c : r.cells) {
    if (c.trace.empty()) continue;
    std::string csv = "epoch,mean_loss,mean_reconstruction,mean_regularizer\n";
    char buf[128];
    for (const auto& e : c.trace) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", e.epoch, e.mean_loss, e.mean_reconstruction,
                    e.mean_regularizer);
      csv += buf;
    }
    std::string name = "trace_" + to_string(c.task) + "_" + to_string(c.method) + "_" + ratio_label(c.weights) +
                       "_rep" + std::to_string(c.repetition) + ".csv";
    std::replace(name.begin(), name.end(), ':', '-');
    write_text(out_dir / name, csv);
  }
}

}  // namespace agasdf
