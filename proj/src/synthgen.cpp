#include "agasdf/synthgen.hpp"

#include "agasdf/io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace agasdf {

namespace {

constexpr double kTrainLengthM = 140.0;
constexpr double kBogieOffsets[2] = {0.17, 0.83};  // fraction of vehicle length
constexpr double kAxleHalfSpacingM = 1.25;
constexpr double kPulseWidthAt80 = 1.5e-4;          // seconds, Gaussian sigma
constexpr double kAccelerationSnrDb = 30.0;
constexpr double kToneFrequenciesHz[2] = {280.0, 1100.0};
constexpr double kToneShare = 0.3;                  // fraction of noise power in the tones

double power(const Eigen::VectorXd& x) { return x.squaredNorm() / static_cast<double>(x.size()); }

void scale_to_power(Eigen::VectorXd& x, double target) {
  const double p = power(x);
  if (p > 0.0) x *= std::sqrt(target / p);
}

Eigen::VectorXd white(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::VectorXd w(n);
  for (Index i = 0; i < n; ++i) w[i] = nd(rng);
  return w;
}

// Two-pole resonator normalized to unit gain at its peak.
Eigen::VectorXd resonate(const Eigen::VectorXd& x, double freq_hz, double damping, double fs) {
  const double omega = 2.0 * std::numbers::pi * freq_hz;
  const double r = std::exp(-damping * omega / fs);
  const double theta = omega * std::sqrt(std::max(1.0 - damping * damping, 1e-6)) / fs;
  const double a1 = 2.0 * r * std::cos(theta);
  const double a2 = -r * r;
  const double gain = (1.0 - r) * 2.0 * std::sin(theta);
  Eigen::VectorXd y(x.size());
  double y1 = 0.0, y2 = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const double v = a1 * y1 + a2 * y2 + x[i];
    y2 = y1;
    y1 = v;
    y[i] = gain * v;
  }
  return y;
}

}  // namespace

void TrackClassParams::validate(double sample_rate_hz) const {
  if (modal_frequencies_hz.empty()) throw ValidationError("track class needs at least one mode");
  if (modal_dampings.size() != modal_frequencies_hz.size() || modal_weights.size() != modal_frequencies_hz.size()) {
    throw ValidationError("track class modal parameter lists differ in length");
  }
  for (std::size_t i = 0; i < modal_frequencies_hz.size(); ++i) {
    const double f = modal_frequencies_hz[i];
    if (!(f > 0.0) || f >= 2000.0 || f >= sample_rate_hz / 2.0) {
      throw ValidationError("modal frequencies must lie in (0, 2000) Hz and below Nyquist");
    }
    if (!(modal_dampings[i] > 0.0 && modal_dampings[i] < 1.0)) throw ValidationError("damping ratios must be in (0, 1)");
  }
}

TrackClassParams TrackClassParams::defaults(TrackClass c) {
  // Softer supports shift the resonances down.
  switch (c) {
    case TrackClass::NoDegradation:
      return {c, {180.0, 620.0, 1450.0}, {0.04, 0.03, 0.02}, {1.0, 0.7, 0.5}};
    case TrackClass::Intermediate:
      return {c, {120.0, 480.0, 1250.0}, {0.04, 0.03, 0.02}, {1.0, 0.7, 0.5}};
    case TrackClass::Severe:
      return {c, {70.0, 350.0, 1050.0}, {0.04, 0.03, 0.02}, {1.0, 0.7, 0.5}};
  }
  throw ValidationError("unknown track class");
}

double min_modal_separation_hz(const std::vector<TrackClassParams>& classes) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < classes.size(); ++i) {
    for (std::size_t j = i + 1; j < classes.size(); ++j) {
      const auto& a = classes[i].modal_frequencies_hz;
      const auto& b = classes[j].modal_frequencies_hz;
      double best = 0.0;
      for (std::size_t m = 0; m < std::min(a.size(), b.size()); ++m) best = std::max(best, std::abs(a[m] - b[m]));
      worst = std::min(worst, best);
    }
  }
  return worst;
}

double table_duration_s(TrackClass c, int speed_kmh) {
  static constexpr double table[4][3] = {
      {21.84, 22.34, 22.04}, {11.41, 11.47, 11.43}, {7.94, 7.85, 7.90}, {6.11, 6.12, 6.20}};
  if (!is_valid_speed(speed_kmh)) throw ValidationError("speed must be one of 20, 40, 60, 80 km/h");
  return table[speed_kmh / 20 - 1][static_cast<int>(c)];
}

PassConfig PassConfig::from_table(TrackClass c, int speed_kmh, std::uint64_t seed, double snr_db) {
  PassConfig cfg;
  cfg.speed_kmh = speed_kmh;
  cfg.duration_s = table_duration_s(c, speed_kmh);
  cfg.acoustic_snr_db = snr_db;
  cfg.seed = seed;
  return cfg;
}

void PassConfig::validate() const {
  if (!is_valid_speed(speed_kmh)) throw ValidationError("speed must be one of 20, 40, 60, 80 km/h");
  if (!(duration_s > 0.0) || !(sample_rate_hz > 0.0)) throw ValidationError("duration and sample rate must be positive");
  if (n_vehicles < 1 || axles_per_vehicle < 1) throw ValidationError("need at least one vehicle and axle");
  if (!std::isfinite(acoustic_snr_db)) throw ValidationError("SNR must be finite");
}

GeneratedPass generate_pass_detailed(const TrackClassParams& cls, const PassConfig& cfg) {
  cfg.validate();
  cls.validate(cfg.sample_rate_hz);
  const double fs = cfg.sample_rate_hz;
  const Index n = static_cast<Index>(std::llround(cfg.duration_s * fs));
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> nd(0.0, 1.0);

  // Axle positions along the train, mapped onto the window between first and last wheel set.
  const double vehicle_len = kTrainLengthM / cfg.n_vehicles;
  std::vector<double> pos;
  for (int v = 0; v < cfg.n_vehicles; ++v) {
    for (int a = 0; a < cfg.axles_per_vehicle; ++a) {
      const int bogie = a * 2 / cfg.axles_per_vehicle;
      const int per_bogie = (cfg.axles_per_vehicle + 1) / 2;
      const double within = per_bogie == 1 ? 0.0 : (a % per_bogie == 0 ? -kAxleHalfSpacingM : kAxleHalfSpacingM);
      pos.push_back(v * vehicle_len + kBogieOffsets[bogie] * vehicle_len + within);
    }
  }
  std::sort(pos.begin(), pos.end());
  const double span = std::max(pos.back() - pos.front(), 1e-9);
  const double margin = 0.01 * cfg.duration_s;

  const double speed_ratio = cfg.speed_kmh / 80.0;
  const double sigma = kPulseWidthAt80 / std::sqrt(speed_ratio) * fs;  // samples
  const Index half = static_cast<Index>(std::ceil(4.0 * sigma));
  Eigen::VectorXd excitation = 0.01 * white(n, rng);
  for (double x : pos) {
    double t = margin + (x - pos.front()) / span * (cfg.duration_s - 2.0 * margin);
    t += 0.002 * cfg.duration_s * nd(rng) / static_cast<double>(pos.size());
    const double amp = std::max(0.2, 1.0 + 0.2 * nd(rng));
    const double centre = t * fs;
    const Index c = static_cast<Index>(std::llround(centre));
    for (Index i = std::max<Index>(0, c - half); i <= std::min<Index>(n - 1, c + half); ++i) {
      const double u = (static_cast<double>(i) - centre) / sigma;
      excitation[i] += amp * std::exp(-0.5 * u * u);
    }
  }

  Eigen::VectorXd clean = Eigen::VectorXd::Zero(n);
  for (std::size_t m = 0; m < cls.modal_frequencies_hz.size(); ++m) {
    const double f = cls.modal_frequencies_hz[m] * (1.0 + 0.01 * nd(rng));
    clean += cls.modal_weights[m] * resonate(excitation, f, cls.modal_dampings[m], fs);
  }
  // Excitation level grows with speed; unit power at 80 km/h.
  const double clean_power = speed_ratio * speed_ratio;
  scale_to_power(clean, clean_power);

  GeneratedPass out{
      PairedRecord{Signal(Eigen::VectorXd::Zero(1), fs), Signal(Eigen::VectorXd::Zero(1), fs), cls.id, cfg.speed_kmh, ""},
      clean, Eigen::VectorXd(), Eigen::VectorXd()};

  Eigen::VectorXd acc_noise = white(n, rng);
  scale_to_power(acc_noise, clean_power * std::pow(10.0, -kAccelerationSnrDb / 10.0));
  Eigen::VectorXd acceleration = clean + acc_noise;

  // Airborne copy: first-difference radiation tilt, same power as the structural response.
  Eigen::VectorXd radiated(n);
  radiated[0] = clean[0];
  for (Index i = 1; i < n; ++i) radiated[i] = clean[i] - 0.5 * clean[i - 1];
  scale_to_power(radiated, clean_power);
  out.clean_acoustic = radiated;

  // Speed-independent background: white plus low-passed noise, and two machine tones.
  Eigen::VectorXd broadband = white(n, rng);
  scale_to_power(broadband, 1.0);
  Eigen::VectorXd rumble = white(n, rng);
  for (Index i = 1; i < n; ++i) rumble[i] += 0.98 * rumble[i - 1];
  scale_to_power(rumble, 1.0);
  Eigen::VectorXd noise = broadband + rumble;
  scale_to_power(noise, 1.0 - kToneShare);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  Eigen::VectorXd tones = Eigen::VectorXd::Zero(n);
  for (double f : kToneFrequenciesHz) {
    const double ph = phase(rng);
    for (Index i = 0; i < n; ++i) tones[i] += std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + ph);
  }
  scale_to_power(tones, kToneShare);
  noise += tones;
  // Reference power is the clean power at 80 km/h (1.0), so slower passes see a lower SNR.
  scale_to_power(noise, std::pow(10.0, -cfg.acoustic_snr_db / 10.0));
  out.acoustic_noise = noise;

  out.record.acoustic = Signal(radiated + noise, fs, SourceKind::Acoustic);
  out.record.acceleration = Signal(std::move(acceleration), fs, SourceKind::Acceleration);
  return out;
}

PairedRecord generate_pass(const TrackClassParams& cls, const PassConfig& cfg) {
  return generate_pass_detailed(cls, cfg).record;
}

std::uint64_t record_seed(std::uint64_t seed, int cls, int speed_kmh, int pass) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(seed);
  h = mix(h ^ static_cast<std::uint64_t>(cls));
  h = mix(h ^ static_cast<std::uint64_t>(speed_kmh));
  return mix(h ^ static_cast<std::uint64_t>(pass));
}

std::vector<PairedRecord> generate_records(const SynthOptions& opt) {
  if (opt.passes_per_speed < 1) throw ValidationError("passes_per_speed must be >= 1");
  std::vector<PairedRecord> out;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cls = TrackClassParams::defaults(static_cast<TrackClass>(c));
    for (int speed : {20, 40, 60, 80}) {
      for (int p = 0; p < opt.passes_per_speed; ++p) {
        auto cfg = PassConfig::from_table(cls.id, speed, record_seed(opt.seed, c, speed, p), opt.snr_db);
        if (opt.profile == SynthProfile::Desk) cfg.duration_s = opt.desk_duration_s;
        auto rec = generate_pass(cls, cfg);
        rec.ride_id = "c" + std::to_string(c + 1) + "_v" + std::to_string(speed) + "_p" + std::to_string(p + 1);
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

DatasetManifest generate_dataset(const SynthOptions& opt, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw ValidationError("cannot create " + out_dir.string() + ": " + ec.message());
  DatasetManifest m;
  m.seed = opt.seed;
  const auto records = generate_records(opt);
  m.sample_rate_hz = records.front().acoustic.sample_rate_hz();
  for (const auto& r : records) {
    ManifestEntry e{r.ride_id, r.label, r.speed_kmh, r.ride_id + "_acoustic.f32", r.ride_id + "_acceleration.f32"};
    write_f32(out_dir / e.acoustic_path, r.acoustic.samples());
    write_f32(out_dir / e.acceleration_path, r.acceleration.samples());
    m.records.push_back(std::move(e));
  }
  write_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace agasdf
