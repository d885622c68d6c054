#include "agasdf/dataset.hpp"

#include "agasdf/io.hpp"

#include <cmath>
#include <map>

namespace agasdf {

void DatasetManifest::validate() const {
  if (!(sample_rate_hz > 0.0)) throw ValidationError("manifest sample rate must be positive");
  std::map<std::string, std::pair<TrackClass, int>> rides;
  for (const auto& e : records) {
    if (e.ride_id.empty()) throw ValidationError("manifest record without ride_id");
    if (!is_valid_speed(e.speed_kmh)) {
      throw ValidationError("ride " + e.ride_id + ": speed must be one of 20, 40, 60, 80 km/h");
    }
    const auto [it, fresh] = rides.emplace(e.ride_id, std::make_pair(e.label, e.speed_kmh));
    if (!fresh && (it->second.first != e.label || it->second.second != e.speed_kmh)) {
      throw ValidationError("ride " + e.ride_id + " has records with different labels or speeds");
    }
  }
}

std::vector<PairedRecord> load_records(const DatasetManifest& m, const std::filesystem::path& base_dir) {
  m.validate();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base_dir / path;
  };
  std::vector<PairedRecord> out;
  out.reserve(m.records.size());
  for (const auto& e : m.records) {
    Signal ac(read_f32(resolve(e.acoustic_path)), m.sample_rate_hz, SourceKind::Acoustic);
    Signal acc(read_f32(resolve(e.acceleration_path)), m.sample_rate_hz, SourceKind::Acceleration);
    auto [a, b] = pair_align(ac, acc);
    out.push_back({std::move(a), std::move(b), e.label, e.speed_kmh, e.ride_id});
  }
  return out;
}

int depth_for_length(Index n) {
  if (n < 2) return 1;
  return static_cast<int>(std::floor(std::log2(static_cast<double>(n))));
}

BandDataset make_band_dataset(const std::vector<PairedRecord>& records, int n_bands) {
  if (records.empty()) throw ValidationError("dataset has no records");
  BandDataset ds;
  ds.sample_rate_hz = records.front().acoustic.sample_rate_hz();
  struct Raw {
    Signal acoustic, acceleration;
    const PairedRecord* rec;
    int band;
  };
  std::vector<Raw> raw;
  double sum_mean = 0.0, sum_std = 0.0;
  for (const auto& r : records) {
    if (r.acoustic.sample_rate_hz() != ds.sample_rate_hz) throw ValidationError("records have different sample rates");
    auto [ac, acc] = pair_align(r.acoustic, r.acceleration);
    const auto ac_bands = split_into_bands(ac, n_bands);
    const auto acc_bands = split_into_bands(acc, n_bands);
    for (int b = 0; b < n_bands; ++b) {
      const auto& x = ac_bands[static_cast<std::size_t>(b)].samples();
      const double mean = x.mean();
      sum_mean += mean;
      sum_std += std::sqrt((x.array() - mean).square().mean());
      raw.push_back({zscore_normalize(ac_bands[static_cast<std::size_t>(b)]),
                     zscore_normalize(acc_bands[static_cast<std::size_t>(b)]), &r, b});
      ds.padded_length = std::max(ds.padded_length, x.size());
    }
  }
  ds.depth = depth_for_length(ds.padded_length);
  ds.acoustic_normalization.count = static_cast<long long>(raw.size());
  ds.acoustic_normalization.mean_of_means = sum_mean / static_cast<double>(raw.size());
  ds.acoustic_normalization.mean_of_stds = sum_std / static_cast<double>(raw.size());
  ds.samples.reserve(raw.size());
  for (const auto& r : raw) {
    BandSample s;
    auto pa = pad_to_length(r.acoustic.samples(), ds.padded_length);
    s.acoustic = std::move(pa.samples);
    s.valid_length = pa.valid_length;
    s.acceleration = pad_to_length(r.acceleration.samples(), ds.padded_length).samples;
    s.label = r.rec->label;
    s.speed_kmh = r.rec->speed_kmh;
    s.ride_id = r.rec->ride_id;
    s.band = r.band;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

}  // namespace agasdf
