#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "additivity/sampler.hpp"

namespace additivity {

// Everything needed to reproduce a CLI run bit-for-bit, plus a creation
// timestamp. `extra` carries subcommand-specific arguments (target
// parameter, prior list, simulation size, ...).
struct RunManifest {
  std::string command;
  std::vector<std::string> models;
  std::string dataset_path;  // empty when the command reads no dataset
  std::string dataset_hash;  // fnv1a-64 hex of the file bytes
  SamplerConfig config;
  std::string engine_version;
  std::string created_utc;  // ISO-8601, the only non-reproducible field
  std::map<std::string, std::string> extra;
};

// FNV-1a 64-bit over the raw file bytes, as 16 hex digits.
std::string file_hash_hex(const std::filesystem::path& path);

std::string utc_timestamp();

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path);

RunManifest load_manifest(const std::filesystem::path& path);

}  // namespace additivity
