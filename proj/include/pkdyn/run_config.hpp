#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "pkdyn/config.hpp"
#include "pkdyn/experiments.hpp"

namespace pkdyn {

// CLI-level overrides applied before canonicalization, so the digest always
// reflects the effective configuration.
struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<bool> deterministic;
};

// A fully validated run description. Unknown keys anywhere in the source
// text are rejected, and the digest is the SHA-256 of the canonicalized
// (key-sorted, whitespace-free) effective config with the output directory
// removed, so key order and formatting never matter.
struct RunConfig {
  std::string experiment;
  std::string map_spec;  // preset string, file path, or inline JSON object text
  std::uint64_t seed = 1;
  bool deterministic = true;
  std::string out = "out";
  NumericConfig numeric;
  std::string params_json;  // validated experiment parameters, canonical text
  std::string canonical_text;
  std::string digest;
};

RunConfig parse_run_config(const std::string& json_text, const RunOverrides& overrides = {});
RunConfig parse_run_config_file(const std::string& path, const RunOverrides& overrides = {});

// Executes the named experiment and stamps the digest into the report.
ExperimentReport execute_run(const RunConfig& config, int threads = 1);

std::string sha256_hex(const std::string& text);

}  // namespace pkdyn
