#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace glsharp {

/// One problem found while validating a configuration. `path` is a JSON pointer.
struct ConfigIssue {
    std::string path;
    std::string message;
};

struct ExperimentConfig {
    std::string experiment;
    std::string output = "out";
    std::uint64_t seed = 1;
    int threads = 1;
    bool quiet = false;
    nlohmann::json params;  ///< complete parameter block, defaults filled in
};

/// Values given on the command line; they win over the config file.
struct ConfigOverrides {
    std::optional<std::string> experiment;
    std::optional<std::string> output;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool quiet = false;
};

const std::vector<std::string>& experiment_names();
std::string experiment_summary(const std::string& name);
nlohmann::json default_params(const std::string& name);

/**
 * Merges defaults, the config document and the overrides (flags > file > defaults)
 * and checks the schema and cross-field constraints. Returns the issues found;
 * `out` is filled only when there are none.
 */
std::vector<ConfigIssue> resolve_config(const nlohmann::json& doc, const ConfigOverrides& flags, ExperimentConfig* out);

/// Reads a JSON config file; parse failures come back as issues.
std::vector<ConfigIssue> load_config(const std::filesystem::path& path, nlohmann::json* doc);

struct RunOutcome {
    int exit_code = 0;  ///< 0 success, 1 experiment failure, 2 config error
    std::string stage;
    std::string message;
    nlohmann::json summary;
};

/// Runs the experiment, writing its outputs and manifest.json into cfg.output.
RunOutcome run_experiment(const ExperimentConfig& cfg);

/// Canonical JSON text used for hashing and for every JSON artifact.
std::string canonical_dump(const nlohmann::json& j);
/// FNV-1a 64-bit hash, hex encoded.
std::string fnv1a_hex(const std::string& bytes);

}  // namespace glsharp
