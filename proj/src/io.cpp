#include "agasdf/io.hpp"

#include <json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace agasdf {

using nlohmann::json;

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

}  // namespace

Eigen::VectorXd read_f32(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  in.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  if (bytes % 4 != 0) throw ValidationError(path.string() + ": size is not a multiple of 4 bytes");
  std::vector<std::uint32_t> raw(bytes / 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  if (!in) throw ValidationError("short read on " + path.string());
  Eigen::VectorXd out(static_cast<Index>(raw.size()));
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out[static_cast<Index>(i)] = static_cast<double>(std::bit_cast<float>(to_little_endian(raw[i])));
  }
  return out;
}

void write_f32(const std::filesystem::path& path, const Eigen::VectorXd& samples) {
  std::vector<std::uint32_t> raw(static_cast<std::size_t>(samples.size()));
  for (Index i = 0; i < samples.size(); ++i) {
    raw[static_cast<std::size_t>(i)] = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(samples[i])));
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 4));
  if (!out) throw ValidationError("write failed on " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << text;
  if (!out) throw ValidationError("write failed on " + path.string());
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  DatasetManifest m;
  try {
    const json j = json::parse(read_text(path));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.sample_rate_hz = j.value("sample_rate_hz", 20000.0);
    for (const auto& r : j.at("records")) {
      ManifestEntry e;
      e.ride_id = r.at("ride_id").get<std::string>();
      e.label = track_class_from_string(r.at("class_label").get<std::string>());
      e.speed_kmh = r.at("speed_kmh").get<int>();
      e.acoustic_path = r.at("acoustic_path").get<std::string>();
      e.acceleration_path = r.at("acceleration_path").get<std::string>();
      m.records.push_back(std::move(e));
    }
  } catch (const json::exception& ex) {
    throw ValidationError(path.string() + ": malformed manifest (" + ex.what() + ")");
  }
  m.validate();
  return m;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  json j;
  j["seed"] = m.seed;
  j["sample_rate_hz"] = m.sample_rate_hz;
  j["records"] = json::array();
  for (const auto& e : m.records) {
    j["records"].push_back({{"ride_id", e.ride_id},
                            {"class_label", to_string(e.label)},
                            {"speed_kmh", e.speed_kmh},
                            {"acoustic_path", e.acoustic_path},
                            {"acceleration_path", e.acceleration_path}});
  }
  write_text(path, j.dump(2) + "\n");
}

std::string model_to_json(const DespawnModel& m) {
  m.validate();
  json j;
  j["format"] = "agasdf-model";
  j["version"] = 1;
  j["depth"] = m.depth();
  j["alpha"] = m.alpha;
  j["kernels"] = json::array();
  for (const auto& k : m.kernels) j["kernels"].push_back(std::vector<double>(k.data(), k.data() + k.size()));
  j["thresholds"] = json::array();
  for (const auto& t : m.thresholds) j["thresholds"].push_back({{"b_plus", t.b_plus}, {"b_minus", t.b_minus}});
  j["normalization"] = {{"scheme", m.normalization.scheme},
                        {"mean_of_means", m.normalization.mean_of_means},
                        {"mean_of_stds", m.normalization.mean_of_stds},
                        {"count", m.normalization.count}};
  // nlohmann writes doubles with 17 significant digits, which round-trips exactly.
  return j.dump(2) + "\n";
}

DespawnModel model_from_json(const std::string& text) {
  DespawnModel m;
  try {
    const json j = json::parse(text);
    if (j.value("format", std::string()) != "agasdf-model") throw ValidationError("not an agasdf model file");
    const int depth = j.at("depth").get<int>();
    m.alpha = j.at("alpha").get<double>();
    for (const auto& k : j.at("kernels")) {
      const auto taps = k.get<std::vector<double>>();
      m.kernels.emplace_back(Eigen::Map<const Eigen::VectorXd>(taps.data(), static_cast<Index>(taps.size())));
    }
    for (const auto& t : j.at("thresholds")) {
      m.thresholds.push_back({t.at("b_plus").get<double>(), t.at("b_minus").get<double>()});
    }
    if (j.contains("normalization")) {
      const auto& n = j["normalization"];
      m.normalization.scheme = n.value("scheme", std::string("per_signal_zscore"));
      m.normalization.mean_of_means = n.value("mean_of_means", 0.0);
      m.normalization.mean_of_stds = n.value("mean_of_stds", 1.0);
      m.normalization.count = n.value("count", 0LL);
    }
    if (depth != m.depth()) throw ValidationError("model depth field disagrees with its kernel count");
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed model JSON (") + ex.what() + ")");
  }
  m.validate();
  return m;
}

void write_model(const std::filesystem::path& path, const DespawnModel& m) { write_text(path, model_to_json(m)); }

DespawnModel read_model(const std::filesystem::path& path) { return model_from_json(read_text(path)); }

}  // namespace agasdf
