#pragma once

#include "agasdf/despawn.hpp"
#include "agasdf/signal.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace agasdf {

/// Simultaneous acoustic and acceleration recording of one train pass.
struct PairedRecord {
  Signal acoustic;
  Signal acceleration;
  TrackClass label;
  int speed_kmh;
  std::string ride_id;
};

struct ManifestEntry {
  std::string ride_id;
  TrackClass label;
  int speed_kmh;
  std::string acoustic_path;  // relative paths resolve against the manifest's directory
  std::string acceleration_path;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  double sample_rate_hz = 20000.0;
  std::vector<ManifestEntry> records;

  /// Consistency of labels and speeds within each ride id.
  void validate() const;
};

/// Reads and aligns every record of a manifest. Relative paths resolve against `base_dir`.
std::vector<PairedRecord> load_records(const DatasetManifest& m, const std::filesystem::path& base_dir);

/// One per-vehicle band of a pass, z-scored and zero-padded to the dataset length.
struct BandSample {
  Eigen::VectorXd acoustic;
  Eigen::VectorXd acceleration;
  Index valid_length = 0;
  TrackClass label = TrackClass::NoDegradation;
  int speed_kmh = 0;
  std::string ride_id;
  int band = 0;
};

struct BandDataset {
  std::vector<BandSample> samples;
  Index padded_length = 0;
  int depth = 0;
  double sample_rate_hz = 20000.0;
  /// Raw acoustic amplitude statistics before z-scoring.
  NormalizationStats acoustic_normalization;
};

/// Splits each pass into `n_bands` bands, z-scores each channel of each band, and pads all
/// bands to the longest one. Depth is floor(log2(padded length)).
BandDataset make_band_dataset(const std::vector<PairedRecord>& records, int n_bands = 6);

int depth_for_length(Index n);

}  // namespace agasdf
