#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tnlab {

using Json = nlohmann::ordered_json;

inline constexpr int kManifestSchemaVersion = 1;
const char* library_version();

/// acw, mixing, lyapunov, ergodicity, steady, particles, convergence.
const std::vector<std::string>& experiment_ids();

/// Validates a raw config for `experiment` and returns it with every default filled in.
/// Unknown keys, wrong types and out-of-range values throw InputError naming the key path.
Json resolve_config(const std::string& experiment, const Json& raw);

struct RunOptions {
    /// Overrides the config seed.
    std::optional<std::uint64_t> seed;
    /// 0 = default_workers(). Results do not depend on it.
    int workers = 0;
    /// Output directory; nothing is written when empty.
    std::filesystem::path out_dir;
};

/// Runs one campaign, writes <experiment>*.csv and <experiment>_manifest.json into
/// out_dir, and returns the manifest (including the criteria it can evaluate).
Json run_experiment(const std::string& experiment, const Json& config, const RunOptions& options = {});

struct CriterionStatus {
    std::string id;
    /// "pass", "fail" or "missing".
    std::string status;
    std::string detail;
    Json measured;
};

/// Evaluates A1-A9 over whatever manifests are given; criteria without the
/// required experiment are "missing".
std::vector<CriterionStatus> check_acceptance(const std::vector<Json>& manifests);

/// Criteria ids A1..A9 in order.
const std::vector<std::string>& criterion_ids();

/// Reads a JSON file; throws InputError with the path on parse errors.
Json load_json(const std::filesystem::path& path);

}  // namespace tnlab
