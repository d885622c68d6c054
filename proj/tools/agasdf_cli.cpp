#include "agasdf/experiments.hpp"
#include "agasdf/io.hpp"
#include "agasdf/synthgen.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace agasdf;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out = ".";
};

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ValidationError(std::string("missing ") + what);
  if (!fs::is_regular_file(path)) throw ValidationError(std::string(what) + " not found: " + path);
}

BandDataset load_dataset(const std::string& manifest_path) {
  require_file(manifest_path, "dataset manifest");
  const auto m = read_manifest(manifest_path);
  return make_band_dataset(load_records(m, fs::path(manifest_path).parent_path()));
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string loss_csv(const std::vector<EpochStats>& trace) {
  std::string csv = "epoch,mean_loss,mean_reconstruction,mean_regularizer\n";
  for (const auto& e : trace) {
    csv += std::to_string(e.epoch) + "," + num(e.mean_loss) + "," + num(e.mean_reconstruction) + "," +
           num(e.mean_regularizer) + "\n";
  }
  return csv;
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  double snr_db = 0.0;
  std::string profile = "desk";
  double desk_duration = 2.0;
  int passes = 6;
};

void run_synth(const Globals& g, const SynthArgs& a) {
  SynthOptions opt;
  opt.seed = g.seed;
  opt.snr_db = a.snr_db;
  if (a.profile == "desk") {
    opt.profile = SynthProfile::Desk;
  } else if (a.profile == "full") {
    opt.profile = SynthProfile::Full;
  } else {
    throw ValidationError("--profile must be desk or full");
  }
  opt.desk_duration_s = a.desk_duration;
  opt.passes_per_speed = a.passes;
  const auto m = generate_dataset(opt, g.out);
  std::cout << "wrote " << m.records.size() << " records to " << (fs::path(g.out) / "manifest.json").string() << "\n";
}

// --- train -----------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::string loss = "agasdf";
  std::string weights = "1:1";
  int epochs = 500;
  double learning_rate = 1e-4;
  bool mean_normalized = false;
  bool no_early_stop = false;
};

void run_train(const Globals& g, const TrainArgs& a) {
  TrainConfig cfg;
  cfg.loss.kind = loss_kind_from_string(a.loss);
  cfg.loss.weights = LossWeights::parse(a.weights);
  cfg.loss.mean_normalized = a.mean_normalized;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.learning_rate;
  cfg.seed = g.seed;
  cfg.early_stop = !a.no_early_stop;
  const BandDataset ds = load_dataset(a.dataset);
  std::vector<TrainingSample> samples;
  for (const auto& b : ds.samples) {
    TrainingSample t{b.acoustic, b.valid_length, std::nullopt};
    if (cfg.loss.kind == LossKind::Agasdf) t.target = guidance_target(b.acceleration, ds.depth, b.valid_length);
    samples.push_back(std::move(t));
  }
  const auto res = train(samples, ds.depth, cfg, ds.acoustic_normalization);
  fs::create_directories(g.out);
  write_model(fs::path(g.out) / "model.json", res.model);
  write_text(fs::path(g.out) / "loss.csv", loss_csv(res.trace));
  if (!res.trace.empty()) {
    std::cout << "epochs " << res.trace.size() << ", loss " << res.trace.front().mean_loss << " -> "
              << res.trace.back().mean_loss << "\n";
  }
}

// --- transform / denoise ---------------------------------------------------

struct SignalArgs {
  std::string model;
  std::string input;
  int depth = 0;
  std::string output;
};

DespawnModel model_or_fixed(const SignalArgs& a) {
  if (!a.model.empty()) {
    require_file(a.model, "model");
    return read_model(a.model);
  }
  if (a.depth < 1) throw ValidationError("give --model or a --depth >= 1 for the fixed db4 transform");
  return DespawnModel::initialized(a.depth, 0.0);
}

void run_transform(const Globals& g, const SignalArgs& a) {
  require_file(a.input, "input signal");
  const DespawnModel m = model_or_fixed(a);
  const Signal s = zscore_normalize(Signal(read_f32(a.input), 1.0));
  const auto p = encode(s.samples(), m);
  fs::create_directories(g.out);
  auto dump = [&](const Eigen::VectorXd& c, Index valid, const std::string& name) {
    std::string csv = "index,value,valid\n";
    for (Index k = 0; k < c.size(); ++k) csv += std::to_string(k) + "," + num(c[k]) + "," + (k < valid ? "1" : "0") + "\n";
    write_text(fs::path(g.out) / name, csv);
  };
  for (int l = 0; l < p.depth(); ++l) {
    dump(p.details[static_cast<std::size_t>(l)], p.valid_lengths[static_cast<std::size_t>(l)], "d" + std::to_string(l + 1) + ".csv");
  }
  dump(p.approximation, p.approximation_valid_length(), "a" + std::to_string(p.depth()) + ".csv");
  std::cout << "wrote " << p.depth() + 1 << " layers to " << g.out << "\n";
}

void run_denoise(const Globals& g, const SignalArgs& a) {
  require_file(a.input, "input signal");
  const DespawnModel m = model_or_fixed(a);
  const Eigen::VectorXd raw = read_f32(a.input);
  if (raw.size() == 0) throw ValidationError("input signal is empty");
  const double mean = raw.mean();
  const double sd = std::sqrt((raw.array() - mean).square().mean());
  const Signal s = zscore_normalize(Signal(raw, 1.0));
  const Eigen::VectorXd rec = decode(encode(s.samples(), m), m);
  const Eigen::VectorXd out = (rec.array() * (sd < 1e-12 ? 0.0 : sd) + mean).matrix();
  const fs::path dest = a.output.empty() ? fs::path(g.out) / "denoised.f32" : fs::path(a.output);
  if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
  write_f32(dest, out);
  std::cout << "wrote " << dest.string() << "\n";
}

// --- features / classify ---------------------------------------------------

struct FeatureArgs {
  std::string dataset;
  std::string method = "fdwt";
  std::string model;
};

void run_features(const Globals& g, const FeatureArgs& a) {
  const Method method = method_from_string(a.method);
  const BandDataset ds = load_dataset(a.dataset);
  DespawnModel m;
  if (is_learnable(method)) {
    require_file(a.model, "model (needed for learnable methods)");
    m = read_model(a.model);
  }
  std::string csv;
  for (const auto& b : ds.samples) {
    Eigen::VectorXd f;
    switch (method) {
      case Method::Fdwt: f = fdwt_features(b.acoustic, ds.depth, b.valid_length); break;
      case Method::Wpt: f = wpt_band_features(b.acoustic, b.valid_length); break;
      case Method::Stft: f = stft_band_features(b.acoustic.head(b.valid_length)); break;
      default: f = learned_features(b.acoustic, m, b.valid_length); break;
    }
    if (csv.empty()) {
      csv = "method,ride_id,speed,label,band";
      for (Index k = 0; k < f.size(); ++k) csv += ",f" + std::to_string(k);
      csv += "\n";
    }
    csv += to_string(method) + "," + b.ride_id + "," + std::to_string(b.speed_kmh) + "," + to_string(b.label) + "," +
           std::to_string(b.band);
    for (Index k = 0; k < f.size(); ++k) csv += "," + num(f[k]);
    csv += "\n";
  }
  fs::create_directories(g.out);
  write_text(fs::path(g.out) / "features.csv", csv);
  std::cout << "wrote " << ds.samples.size() << " feature rows (" << to_string(method) << ")\n";
}

struct FeatureTable {
  std::optional<Method> method;  // from the method column, when present
  std::vector<std::string> rides;
  std::vector<int> labels;
  std::vector<int> speeds;
  std::vector<Eigen::VectorXd> rows;
};

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ls(line);
  for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
  return cells;
}

// Columns are located by header name; every "f<k>" column is a feature, in header order.
FeatureTable read_feature_csv(const std::string& path) {
  require_file(path, "feature CSV");
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("feature CSV is empty");
  const auto header = split_csv_line(line);
  auto column = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ValidationError("feature CSV lacks a '" + name + "' column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ride_col = column("ride_id"), speed_col = column("speed"), label_col = column("label");
  std::optional<std::size_t> method_col;
  if (std::find(header.begin(), header.end(), "method") != header.end()) method_col = column("method");
  std::vector<std::size_t> feature_cols;
  for (std::size_t k = 0; k < header.size(); ++k) {
    const auto& h = header[k];
    if (h.size() > 1 && h[0] == 'f' && std::all_of(h.begin() + 1, h.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      feature_cols.push_back(k);
    }
  }
  if (feature_cols.empty()) throw ValidationError("feature CSV has no f<k> columns");
  FeatureTable t;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw ValidationError("feature CSV line " + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                            " columns, got " + std::to_string(cells.size()));
    }
    try {
      if (method_col) {
        const Method m = method_from_string(cells[*method_col]);
        if (t.method && *t.method != m) throw ValidationError("feature CSV mixes methods");
        t.method = m;
      }
      t.rides.push_back(cells[ride_col]);
      t.labels.push_back(static_cast<int>(track_class_from_string(cells[label_col])));
      t.speeds.push_back(std::stoi(cells[speed_col]));
      Eigen::VectorXd f(static_cast<Index>(feature_cols.size()));
      for (std::size_t k = 0; k < feature_cols.size(); ++k) f[static_cast<Index>(k)] = std::stod(cells[feature_cols[k]]);
      t.rows.push_back(std::move(f));
    } catch (const std::logic_error& e) {
      throw ValidationError("feature CSV line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (t.rows.empty()) throw ValidationError("feature CSV has no rows");
  return t;
}

struct ClassifyArgs {
  std::string features;
  std::string plan = "task1";
};

void run_classify(const Globals& g, const ClassifyArgs& a) {
  const Task task = task_from_string(a.plan);
  const FeatureTable t = read_feature_csv(a.features);
  std::vector<RideMeta> rides;
  for (std::size_t i = 0; i < t.rows.size(); ++i) rides.push_back({t.rides[i], static_cast<TrackClass>(t.labels[i]), t.speeds[i]});
  const Split sp = make_split(rides, task, g.seed);
  const std::set<std::string> train_rides(sp.train_rides.begin(), sp.train_rides.end());
  std::vector<Eigen::VectorXd> xtr_rows, xte_rows;
  std::vector<int> ytr, yte;
  std::vector<std::string> groups;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    if (train_rides.count(t.rides[i])) {
      xtr_rows.push_back(t.rows[i]);
      ytr.push_back(t.labels[i]);
      groups.push_back(t.rides[i]);
    } else {
      xte_rows.push_back(t.rows[i]);
      yte.push_back(t.labels[i]);
    }
  }
  auto stack = [](const std::vector<Eigen::VectorXd>& rows) {
    Eigen::MatrixXd x(static_cast<Index>(rows.size()), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) x.row(static_cast<Index>(i)) = rows[i].transpose();
    return x;
  };
  const Eigen::MatrixXd xtr = stack(xtr_rows), xte = stack(xte_rows);
  const auto cv = cross_validate(xtr, ytr, groups, SvmGrid{}, 5, g.seed);
  const auto model = svm_train(xtr, ytr, cv.C, cv.gamma, g.seed);
  ExperimentReport r;
  CellResult cell;
  cell.task = task;
  cell.method = t.method.value_or(Method::Fdwt);
  cell.report = evaluate(model, xte, yte);
  cell.C = cv.C;
  cell.gamma = cv.gamma;
  r.cells.push_back(cell);
  CellSummary s;
  s.task = task;
  s.method = cell.method;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    if (cell.report.per_class[k]) s.per_class[k] = mean_std({*cell.report.per_class[k]});
  }
  s.average = mean_std({cell.report.average});
  r.summaries.push_back(s);
  write_task_report(r, g.out, "classify");
  std::cout << "C " << cv.C << ", gamma " << cv.gamma << ", cv accuracy " << cv.accuracy << "%, test average "
            << cell.report.average << "%\n";
}

// --- gradcheck -------------------------------------------------------------

struct GradcheckArgs {
  std::string loss = "agasdf";
  int n = 64;
  int depth = 3;
  double tolerance = 1e-4;
  bool mean_normalized = false;
};

bool run_gradcheck(const Globals& g, const GradcheckArgs& a) {
  const auto c = random_gradient_check_case(g.seed, a.n, a.depth);
  LossConfig cfg;
  cfg.kind = loss_kind_from_string(a.loss);
  cfg.mean_normalized = a.mean_normalized;
  const auto r = gradient_check(c.model, c.sample, cfg, a.tolerance, 1e-5, g.seed);
  std::printf("worst relative error %.3e at %s (%s loss, seed %llu, kink retries %d)\n", r.worst_relative_error,
              r.worst_parameter.c_str(), a.loss.c_str(), static_cast<unsigned long long>(g.seed), r.kink_retries);
  std::printf("%s (tolerance %g)\n", r.passed ? "PASS" : "FAIL", a.tolerance);
  return r.passed;
}

// --- experiment ------------------------------------------------------------

struct ExperimentArgs {
  std::string plan;
  std::string dataset;
  std::optional<double> snr_db;
  int epochs = ExperimentPlan{}.epochs;
  int repetitions = ExperimentPlan{}.repetitions;
  bool traces = false;
};

void run_experiment(const Globals& g, const ExperimentArgs& a) {
  BandDataset ds;
  if (!a.dataset.empty()) {
    if (a.snr_db) throw ValidationError("--snr-db only applies when no --dataset is given (data synthesized in memory)");
    ds = load_dataset(a.dataset);
  } else {
    SynthOptions opt;
    opt.seed = g.seed;
    opt.snr_db = a.snr_db.value_or(0.0);
    ds = make_band_dataset(generate_records(opt));
  }
  ExperimentPlan plan;
  plan.seed = g.seed;
  plan.threads = g.threads;
  plan.epochs = a.epochs;
  plan.repetitions = a.repetitions;
  plan.keep_traces = a.traces;
  ExperimentReport r;
  if (a.plan == "sweep") {
    plan.tasks.assign(std::begin(kAllTasks), std::end(kAllTasks));
    plan.weight_ratios = sweep_ratios();
    r = run_weight_sweep(ds, plan);
    write_sweep_report(r, plan, g.out);
    std::cout << read_text(fs::path(g.out) / "sweep.txt");
  } else {
    plan.tasks = {task_from_string(a.plan)};
    r = run_plan(ds, plan);
    write_task_report(r, g.out, a.plan);
    std::cout << read_text(fs::path(g.out) / (a.plan + ".txt"));
  }
  if (a.traces) write_traces(r, fs::path(g.out) / "traces");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceleration-guided acoustic signal denoising and track-condition classification"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for experiments")->check(CLI::Range(1, 256))->capture_default_str();
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Generate the synthetic paired dataset");
  c_synth->add_option("--snr-db", synth.snr_db, "Acoustic SNR at 80 km/h excitation")->capture_default_str();
  c_synth->add_option("--profile", synth.profile, "desk (2 s passes) or full (tabulated durations)")->capture_default_str();
  c_synth->add_option("--desk-duration", synth.desk_duration, "Pass length for the desk profile (s)")->capture_default_str();
  c_synth->add_option("--passes", synth.passes, "Passes per class and speed")->capture_default_str();

  TrainArgs tr;
  auto* c_train = app.add_subcommand("train", "Train a learnable wavelet model");
  c_train->add_option("--dataset", tr.dataset, "Manifest JSON")->required();
  c_train->add_option("--loss", tr.loss, "agasdf or despawn")->capture_default_str();
  c_train->add_option("--weights", tr.weights, "Reconstruction:regularizer ratio, e.g. 1:1")->capture_default_str();
  c_train->add_option("--epochs", tr.epochs)->capture_default_str();
  c_train->add_option("--lr", tr.learning_rate, "Adam learning rate")->capture_default_str();
  c_train->add_flag("--mean-normalized", tr.mean_normalized, "Average l1 terms instead of summing them");
  c_train->add_flag("--no-early-stop", tr.no_early_stop);

  SignalArgs tf;
  auto* c_transform = app.add_subcommand("transform", "Encode a signal and write one CSV per layer");
  c_transform->add_option("--model", tf.model, "Model JSON (omit for fixed db4)");
  c_transform->add_option("--depth", tf.depth, "Depth of the fixed db4 transform");
  c_transform->add_option("--input", tf.input, "Raw float32 signal")->required();

  SignalArgs dn;
  auto* c_denoise = app.add_subcommand("denoise", "Encode and decode a signal");
  c_denoise->add_option("--model", dn.model, "Model JSON (omit for fixed db4)");
  c_denoise->add_option("--depth", dn.depth, "Depth of the fixed db4 transform");
  c_denoise->add_option("--input", dn.input, "Raw float32 signal")->required();
  c_denoise->add_option("--output", dn.output, "Output float32 file (default <out>/denoised.f32)");

  FeatureArgs fa;
  auto* c_features = app.add_subcommand("features", "Write classification features as CSV");
  c_features->add_option("--dataset", fa.dataset, "Manifest JSON")->required();
  c_features->add_option("--method", fa.method, "agasdf, despawn, fdwt, wpt or stft")->capture_default_str();
  c_features->add_option("--model", fa.model, "Model JSON for learnable methods");

  ClassifyArgs ca;
  auto* c_classify = app.add_subcommand("classify", "Cross-validate an SVM on a feature CSV and evaluate");
  c_classify->add_option("--features", ca.features, "CSV written by the features subcommand")->required();
  c_classify->add_option("--plan", ca.plan, "task1, loso80, c1, c2 or c3")->capture_default_str();

  GradcheckArgs ga;
  auto* c_grad = app.add_subcommand("gradcheck", "Compare analytic gradients with central differences");
  c_grad->add_option("--loss", ga.loss, "agasdf or despawn")->capture_default_str();
  c_grad->add_option("--n", ga.n, "Signal length")->capture_default_str();
  c_grad->add_option("--depth", ga.depth)->capture_default_str();
  c_grad->add_option("--tolerance", ga.tolerance)->capture_default_str();
  c_grad->add_flag("--mean-normalized", ga.mean_normalized);

  ExperimentArgs ea;
  auto* c_exp = app.add_subcommand("experiment", "Run an evaluation protocol");
  c_exp->add_option("--plan", ea.plan, "task1, loso80, c1, c2, c3 or sweep")
      ->required()
      ->check(CLI::IsMember({"task1", "loso80", "c1", "c2", "c3", "sweep"}));
  c_exp->add_option("--dataset", ea.dataset, "Manifest JSON (omit to synthesize in memory)");
  c_exp->add_option("--snr-db", ea.snr_db, "Acoustic SNR of in-memory synthetic data");
  c_exp->add_option("--epochs", ea.epochs, "Training epochs per learnable model")->capture_default_str();
  c_exp->add_option("--repetitions", ea.repetitions, "Repetitions of learnable methods")->capture_default_str();
  c_exp->add_flag("--traces", ea.traces, "Write per-cell loss traces");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*c_synth) run_synth(g, synth);
    if (*c_train) run_train(g, tr);
    if (*c_transform) run_transform(g, tf);
    if (*c_denoise) run_denoise(g, dn);
    if (*c_features) run_features(g, fa);
    if (*c_classify) run_classify(g, ca);
    if (*c_grad && !run_gradcheck(g, ga)) return 2;
    if (*c_exp) run_experiment(g, ea);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
