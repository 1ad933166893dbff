#pragma once

// Config reading helpers shared by the experiment runners.

#include <functional>
#include <set>
#include <string>
#include <vector>

#include "tnlab/experiments.hpp"
#include "tnlab/meanfield.hpp"
#include "tnlab/noise.hpp"
#include "tnlab/spde.hpp"

namespace tnlab::config {

/// One JSON object being read. Every accessor records the key and writes the
/// value it used into `resolved`, so defaults end up in the manifest.
class Section {
public:
    Section(const Json& raw, std::string path);

    bool has(const std::string& key) const { return raw_.contains(key) && !raw_[key].is_null(); }
    const std::string& path() const { return path_; }

    double real(const std::string& key, double def, const std::function<bool(double)>& ok = {},
                const char* requirement = "");
    long long integer(const std::string& key, long long def, long long min_value);
    bool boolean(const std::string& key, bool def);
    std::string text(const std::string& key, const std::string& def, const std::vector<std::string>& allowed);
    std::vector<double> reals(const std::string& key, std::vector<double> def, const std::function<bool(double)>& ok = {},
                              const char* requirement = "");
    std::vector<long long> integers(const std::string& key, std::vector<long long> def, long long min_value);
    /// Nested object; absent keys read as empty objects.
    Section section(const std::string& key);
    /// Stores a nested resolved object produced by a sub-section.
    void put(const std::string& key, Json value);
    /// Raw value (marks the key as used; the caller stores the resolved form with put).
    const Json& raw(const std::string& key);

    /// Throws on keys that were never read.
    Json finish();

private:
    [[noreturn]] void fail(const std::string& key, const std::string& message) const;

    Json raw_;
    std::string path_;
    std::set<std::string> used_;
    Json resolved_ = Json::object();
};

/// dim, points, dt, scheme, T, record_every, blowup_cap.
SolverConfig read_solver(Section& s, const SolverConfig& defaults);

PotentialSpec read_potential(Section& s, const PotentialSpec& def);
/// Noise block; with `with_intensity` false an "intensity" key is rejected.
NoiseSpec read_noise(Section& s, int dim, double default_intensity, bool with_intensity);

/// List of {"k": [...], "value": number | [re, im]} entries.
using ModeList = std::vector<std::pair<std::vector<int>, Complex>>;
ModeList read_modes(Section& s, const std::string& key, const ModeList& def, int dim);
SpectralField field_from_modes(const TorusGrid& grid, double mean, const ModeList& modes);

Scheme parse_scheme(const std::string& name);
std::string scheme_name(Scheme s);

}  // namespace tnlab::config
