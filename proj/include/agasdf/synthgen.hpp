#pragma once

#include "agasdf/dataset.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace agasdf {

/// Modal signature of one track support condition: a sum of damped resonances below 2 kHz.
struct TrackClassParams {
  TrackClass id = TrackClass::NoDegradation;
  std::vector<double> modal_frequencies_hz;
  std::vector<double> modal_dampings;
  std::vector<double> modal_weights;

  void validate(double sample_rate_hz) const;
  static TrackClassParams defaults(TrackClass c);
};

/// Minimum over class pairs of the largest per-mode frequency difference.
double min_modal_separation_hz(const std::vector<TrackClassParams>& classes);

/// Average effective duration of a pass (seconds) for a track class and speed.
double table_duration_s(TrackClass c, int speed_kmh);

struct PassConfig {
  int speed_kmh = 80;
  double duration_s = 6.11;
  int n_vehicles = 6;
  int axles_per_vehicle = 4;
  double sample_rate_hz = 20000.0;
  /// Clean acoustic power over noise power, referenced to the 80 km/h excitation level.
  double acoustic_snr_db = 0.0;
  std::uint64_t seed = 0;

  /// Duration taken from the per-class, per-speed table.
  static PassConfig from_table(TrackClass c, int speed_kmh, std::uint64_t seed, double snr_db = 0.0);
  void validate() const;
};

/// A pass together with its noise-free components.
struct GeneratedPass {
  PairedRecord record;
  Eigen::VectorXd clean_acceleration;
  Eigen::VectorXd clean_acoustic;
  Eigen::VectorXd acoustic_noise;
};

GeneratedPass generate_pass_detailed(const TrackClassParams& cls, const PassConfig& cfg);
PairedRecord generate_pass(const TrackClassParams& cls, const PassConfig& cfg);

enum class SynthProfile {
  Full,  // per-class, per-speed table durations
  Desk,  // every pass lasts desk_duration_s
};

struct SynthOptions {
  std::uint64_t seed = 1;
  double snr_db = 0.0;
  SynthProfile profile = SynthProfile::Desk;
  double desk_duration_s = 2.0;
  int passes_per_speed = 6;
};

/// 3 classes x 4 speeds x passes_per_speed records, fully determined by the options.
std::vector<PairedRecord> generate_records(const SynthOptions& opt);

/// Writes one .f32 file per channel and a manifest.json into `out_dir`.
DatasetManifest generate_dataset(const SynthOptions& opt, const std::filesystem::path& out_dir);

/// splitmix64 mixing of (seed, class, speed, pass) into a per-record seed.
std::uint64_t record_seed(std::uint64_t seed, int cls, int speed_kmh, int pass);

}  // namespace agasdf
