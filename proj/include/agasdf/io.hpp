#pragma once

#include "agasdf/dataset.hpp"
#include "agasdf/despawn.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace agasdf {

/// Raw little-endian IEEE-754 float32, no header.
Eigen::VectorXd read_f32(const std::filesystem::path& path);
void write_f32(const std::filesystem::path& path, const Eigen::VectorXd& samples);

DatasetManifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const DatasetManifest& m);

std::string model_to_json(const DespawnModel& m);
DespawnModel model_from_json(const std::string& text);
void write_model(const std::filesystem::path& path, const DespawnModel& m);
DespawnModel read_model(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace agasdf
