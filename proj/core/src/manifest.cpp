#include "additivity/manifest.hpp"

#include <cstdio>
#include <ctime>
#include <fstream>

#include <json.hpp>

#include "additivity/errors.hpp"

namespace additivity {

std::string file_hash_hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open for hashing: " + path.string());
  }
  std::uint64_t hash = 1469598103934665603ULL;
  char buf[8192];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(hash));
  return hex;
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

nlohmann::json config_to_json(const SamplerConfig& cfg) {
  return nlohmann::json{{"chains", cfg.chains},
                        {"iters_per_chain", cfg.iters_per_chain},
                        {"warmup", cfg.warmup},
                        {"target_accept", cfg.target_accept},
                        {"leapfrog_steps", cfg.leapfrog_steps},
                        {"seed", cfg.seed},
                        {"init_step_size", cfg.init_step_size},
                        {"max_step_size", cfg.max_step_size},
                        {"parallel_chains", cfg.parallel_chains}};
}

SamplerConfig config_from_json(const nlohmann::json& j) {
  SamplerConfig cfg;
  cfg.chains = j.at("chains").get<int>();
  cfg.iters_per_chain = j.at("iters_per_chain").get<int>();
  cfg.warmup = j.at("warmup").get<int>();
  cfg.target_accept = j.at("target_accept").get<double>();
  cfg.leapfrog_steps = j.at("leapfrog_steps").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.init_step_size = j.at("init_step_size").get<double>();
  cfg.max_step_size = j.at("max_step_size").get<double>();
  cfg.parallel_chains = j.at("parallel_chains").get<bool>();
  return cfg;
}

}  // namespace

void write_manifest(const RunManifest& manifest,
                    const std::filesystem::path& path) {
  nlohmann::json j{{"command", manifest.command},
                   {"models", manifest.models},
                   {"dataset_path", manifest.dataset_path},
                   {"dataset_hash", manifest.dataset_hash},
                   {"config", config_to_json(manifest.config)},
                   {"seed", manifest.config.seed},
                   {"engine_version", manifest.engine_version},
                   {"created_utc", manifest.created_utc},
                   {"extra", manifest.extra}};
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot write manifest: " + path.string());
  }
  out << j.dump(2) << '\n';
  if (!out) {
    throw IoError("manifest write failed: " + path.string());
  }
}

RunManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open manifest: " + path.string());
  }
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest " + path.string() + ": invalid JSON: " +
                          e.what());
  }
  RunManifest m;
  try {
    m.command = j.at("command").get<std::string>();
    m.models = j.at("models").get<std::vector<std::string>>();
    m.dataset_path = j.at("dataset_path").get<std::string>();
    m.dataset_hash = j.at("dataset_hash").get<std::string>();
    m.config = config_from_json(j.at("config"));
    m.engine_version = j.at("engine_version").get<std::string>();
    m.created_utc = j.at("created_utc").get<std::string>();
    m.extra = j.at("extra").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("manifest " + path.string() + ": missing field: " +
                          e.what());
  }
  return m;
}

}  // namespace additivity
