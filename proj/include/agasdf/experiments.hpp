#pragma once

#include "agasdf/dataset.hpp"
#include "agasdf/features.hpp"
#include "agasdf/svm.hpp"
#include "agasdf/training.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <filesystem>
#include <string>
#include <vector>

namespace agasdf {

enum class Task { Task1, Loso80, C1, C2, C3 };

inline constexpr Task kAllTasks[] = {Task::Task1, Task::Loso80, Task::C1, Task::C2, Task::C3};

std::string to_string(Task t);
Task task_from_string(const std::string& s);
/// Speed held out for testing, or 0 for the mixed-speed task.
int held_out_speed(Task t);

struct Split {
  std::vector<std::string> train_rides;
  std::vector<std::string> test_rides;
};

struct RideMeta {
  std::string ride_id;
  TrackClass label = TrackClass::NoDegradation;
  int speed_kmh = 0;
};

/// Distinct rides of a band dataset, sorted by id.
std::vector<RideMeta> rides_of(const BandDataset& ds);

/// Ride-level split. Mixed-speed task: 3:1 per (class, speed) cell, with the odd cells
/// (5 vs 4 training rides out of 6) picked by the seed. Speed tasks: hold out one speed.
Split make_split(const std::vector<RideMeta>& rides, Task t, std::uint64_t seed);
Split make_split(const BandDataset& ds, Task t, std::uint64_t seed);

/// The standard weight-ratio columns, reconstruction:guidance.
std::vector<LossWeights> sweep_ratios();

struct ExperimentPlan {
  std::vector<Task> tasks{Task::Task1};
  std::vector<Method> methods{Method::AgAsdf, Method::Despawn, Method::Fdwt, Method::Wpt, Method::Stft};
  std::vector<LossWeights> weight_ratios{LossWeights{1.0, 1.0}};
  int repetitions = 5;                // learnable methods
  int deterministic_repetitions = 1;  // fixed transforms
  std::uint64_t seed = 1;
  int epochs = 100;
  double learning_rate = 1e-4;
  bool mean_normalized = true;
  SvmGrid grid;
  int cv_folds = 5;
  int threads = 1;
  bool keep_traces = false;
};

struct CellResult {
  Task task = Task::Task1;
  Method method = Method::Fdwt;
  LossWeights weights;
  int repetition = 0;
  EvaluationReport report;
  double C = 0.0;
  double gamma = 0.0;
  std::vector<EpochStats> trace;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population std over repetitions
  int count = 0;
};

/// "95.4 ± 1.1"
std::string format_mean_std(const MeanStd& v, int decimals = 1);
MeanStd mean_std(const std::vector<double>& xs);

struct CellSummary {
  Task task = Task::Task1;
  Method method = Method::Fdwt;
  LossWeights weights;
  std::array<std::optional<MeanStd>, kNumClasses> per_class;
  MeanStd average;
};

struct ExperimentReport {
  std::vector<CellResult> cells;
  std::vector<CellSummary> summaries;

  const CellSummary& find(Task t, Method m) const;
  const CellSummary& find(Task t, const LossWeights& w) const;
};

/// Every task x method (x weight ratio for AG-ASDF) cell of the plan. Learnable models are
/// trained on the training split only.
ExperimentReport run_plan(const BandDataset& ds, const ExperimentPlan& plan);

/// AG-ASDF over every task and weight ratio of the plan.
ExperimentReport run_weight_sweep(const BandDataset& ds, ExperimentPlan plan);

/// Average accuracy of each ratio over the plan's tasks, in ratio order.
std::vector<double> sweep_column_averages(const ExperimentReport& r, const ExperimentPlan& plan);

void write_task_report(const ExperimentReport& r, const std::filesystem::path& out_dir, const std::string& stem);
void write_sweep_report(const ExperimentReport& r, const ExperimentPlan& plan, const std::filesystem::path& out_dir);
void write_traces(const ExperimentReport& r, const std::filesystem::path& out_dir);

}  // namespace agasdf
