#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tnlab/errors.hpp"

namespace tnlab::config {

Section::Section(const Json& raw, std::string path) : raw_(raw.is_null() ? Json::object() : raw), path_(std::move(path)) {
    if (!raw_.is_object()) throw InputError(path_ + ": expected an object");
}

void Section::fail(const std::string& key, const std::string& message) const {
    throw InputError(path_ + (path_.empty() ? "" : ".") + key + ": " + message);
}

const Json& Section::raw(const std::string& key) {
    used_.insert(key);
    static const Json null;
    return raw_.contains(key) ? raw_[key] : null;
}

void Section::put(const std::string& key, Json value) {
    used_.insert(key);
    resolved_[key] = std::move(value);
}

double Section::real(const std::string& key, double def, const std::function<bool(double)>& ok, const char* requirement) {
    double v = def;
    const Json& j = raw(key);
    if (!j.is_null()) {
        if (!j.is_number()) fail(key, "expected a number");
        v = j.get<double>();
    }
    if (!std::isfinite(v)) fail(key, "must be finite");
    if (ok && !ok(v)) fail(key, std::string("must be ") + requirement);
    resolved_[key] = v;
    return v;
}

long long Section::integer(const std::string& key, long long def, long long min_value) {
    long long v = def;
    const Json& j = raw(key);
    if (!j.is_null()) {
        if (!j.is_number_integer()) fail(key, "expected an integer");
        v = j.get<long long>();
    }
    if (v < min_value) fail(key, "must be at least " + std::to_string(min_value));
    resolved_[key] = v;
    return v;
}

bool Section::boolean(const std::string& key, bool def) {
    bool v = def;
    const Json& j = raw(key);
    if (!j.is_null()) {
        if (!j.is_boolean()) fail(key, "expected true or false");
        v = j.get<bool>();
    }
    resolved_[key] = v;
    return v;
}

std::string Section::text(const std::string& key, const std::string& def, const std::vector<std::string>& allowed) {
    std::string v = def;
    const Json& j = raw(key);
    if (!j.is_null()) {
        if (!j.is_string()) fail(key, "expected a string");
        v = j.get<std::string>();
    }
    if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
        std::ostringstream os;
        os << "unknown value '" << v << "' (allowed:";
        for (const auto& a : allowed) os << " " << a;
        os << ")";
        fail(key, os.str());
    }
    resolved_[key] = v;
    return v;
}

std::vector<double> Section::reals(const std::string& key, std::vector<double> def, const std::function<bool(double)>& ok,
                                   const char* requirement) {
    const Json& j = raw(key);
    if (!j.is_null()) {
        if (!j.is_array()) fail(key, "expected a list of numbers");
        def.clear();
        for (const auto& e : j) {
            if (!e.is_number()) fail(key, "expected a list of numbers");
            def.push_back(e.get<double>());
        }
    }
    for (double v : def) {
        if (!std::isfinite(v)) fail(key, "entries must be finite");
        if (ok && !ok(v)) fail(key, std::string("entries must be ") + requirement);
    }
    resolved_[key] = def;
    return def;
}

std::vector<long long> Section::integers(const std::string& key, std::vector<long long> def, long long min_value) {
    const Json& j = raw(key);
    if (!j.is_null()) {
        if (!j.is_array()) fail(key, "expected a list of integers");
        def.clear();
        for (const auto& e : j) {
            if (!e.is_number_integer()) fail(key, "expected a list of integers");
            def.push_back(e.get<long long>());
        }
    }
    for (long long v : def) {
        if (v < min_value) fail(key, "entries must be at least " + std::to_string(min_value));
    }
    resolved_[key] = def;
    return def;
}

Section Section::section(const std::string& key) {
    const Json& j = raw(key);
    if (!j.is_null() && !j.is_object()) fail(key, "expected an object");
    return Section(j, path_.empty() ? key : path_ + "." + key);
}

Json Section::finish() {
    for (const auto& [key, value] : raw_.items()) {
        if (!used_.count(key)) fail(key, "unknown key");
    }
    return resolved_;
}

namespace {

bool positive(double v) { return v > 0.0; }

std::vector<int> read_wavevector(const Json& j, const std::string& where, int dim) {
    if (!j.is_array()) throw InputError(where + ": expected an integer list");
    std::vector<int> k;
    for (const auto& e : j) {
        if (!e.is_number_integer()) throw InputError(where + ": expected an integer list");
        k.push_back(e.get<int>());
    }
    if (static_cast<int>(k.size()) != dim) throw InputError(where + ": wavevector must have " + std::to_string(dim) + " entries");
    return k;
}

Json complex_json(Complex c) {
    if (c.imag() == 0.0) return c.real();
    return Json::array({c.real(), c.imag()});
}

}  // namespace

Scheme parse_scheme(const std::string& name) {
    if (name == "ito_em") return Scheme::ito_em;
    if (name == "ito_milstein") return Scheme::ito_milstein;
    if (name == "strang") return Scheme::strang;
    throw InputError("unknown scheme '" + name + "'");
}

std::string scheme_name(Scheme s) {
    switch (s) {
        case Scheme::ito_em: return "ito_em";
        case Scheme::ito_milstein: return "ito_milstein";
        case Scheme::strang: return "strang";
    }
    return "?";
}

SolverConfig read_solver(Section& s, const SolverConfig& defaults) {
    SolverConfig c = defaults;
    const int dim = static_cast<int>(s.integer("dim", defaults.grid.dim(), 1));
    const int points = static_cast<int>(s.integer("points", defaults.grid.points(), 4));
    c.grid = TorusGrid(dim, points);
    c.dt = s.real("dt", defaults.dt, positive, "positive");
    c.scheme = parse_scheme(s.text("scheme", scheme_name(defaults.scheme), {"ito_em", "ito_milstein", "strang"}));
    c.T = s.real("T", defaults.T, positive, "positive");
    c.record_every = static_cast<int>(s.integer("record_every", defaults.record_every, 1));
    c.blowup_cap = s.real("blowup_cap", defaults.blowup_cap, positive, "positive");
    try {
        c.validate();
    } catch (const InputError& e) {
        throw InputError(s.path() + ": " + e.what());
    }
    return c;
}

PotentialSpec read_potential(Section& s, const PotentialSpec& def) {
    static const char* names[] = {"single_mode", "two_mode", "explicit"};
    const std::string def_form = names[static_cast<int>(def.form)];
    const std::string form = s.text("form", def_form, {"none", "single_mode", "two_mode", "explicit"});
    PotentialSpec p;
    if (form == "none") {
        p.form = PotentialSpec::Form::explicit_table;
        return p;
    }
    if (form == "single_mode" || form == "two_mode") {
        const std::string key = form == "single_mode" ? "k" : "l";
        std::vector<long long> dk(def.k.begin(), def.k.end());
        if (def.form != (form == "single_mode" ? PotentialSpec::Form::single_mode : PotentialSpec::Form::two_mode)) dk = {1, 1};
        const auto kv = s.integers(key, dk, std::numeric_limits<long long>::min());
        std::vector<int> k(kv.begin(), kv.end());
        return form == "single_mode" ? PotentialSpec::single_mode(k) : PotentialSpec::two_mode(k);
    }
    p.form = PotentialSpec::Form::explicit_table;
    const Json& t = s.raw("table");
    if (!t.is_array()) throw InputError(s.path() + ".table: expected a list of {k, value} entries");
    Json resolved = Json::array();
    for (const auto& e : t) {
        if (!e.is_object() || !e.contains("k") || !e.contains("value") || e.size() != 2 || !e["value"].is_number()) {
            throw InputError(s.path() + ".table: each entry needs exactly k and a real value");
        }
        std::vector<int> k;
        for (const auto& v : e["k"]) {
            if (!v.is_number_integer()) throw InputError(s.path() + ".table: k must be integers");
            k.push_back(v.get<int>());
        }
        p.table.emplace_back(k, e["value"].get<double>());
        resolved.push_back({{"k", k}, {"value", e["value"].get<double>()}});
    }
    s.put("table", resolved);
    return p;
}

NoiseSpec read_noise(Section& s, int dim, double default_intensity, bool with_intensity) {
    NoiseSpec spec;
    spec.dim = dim;
    if (with_intensity) {
        spec.intensity = s.real("intensity", default_intensity, [](double v) { return v >= 0.0; }, "nonnegative");
    } else if (s.has("intensity")) {
        throw InputError(s.path() + ".intensity: set by the campaign's K values, not here");
    }
    if (s.has("power_law")) {
        if (s.has("shells")) throw InputError(s.path() + ": give either shells or power_law");
        auto pl = s.section("power_law");
        const double amp = pl.real("amplitude", 1.0, [](double v) { return v >= 0.0; }, "nonnegative");
        const double ex = pl.real("exponent", 0.0);
        spec.truncation = static_cast<int>(pl.integer("truncation", 1, 1));
        s.put("power_law", pl.finish());
        spec.coloring = Coloring::power_law(amp, ex);
    } else {
        const Json& j = s.raw("shells");
        std::vector<std::pair<int, double>> shells;
        if (j.is_null()) {
            shells = {{1, 1.0}};
        } else {
            if (!j.is_array()) throw InputError(s.path() + ".shells: expected [[|k|^2, theta], ...]");
            for (const auto& e : j) {
                if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number()) {
                    throw InputError(s.path() + ".shells: expected [[|k|^2, theta], ...]");
                }
                if (e[0].get<int>() < 1) throw InputError(s.path() + ".shells: |k|^2 must be positive");
                shells.emplace_back(e[0].get<int>(), e[1].get<double>());
            }
            if (shells.empty()) throw InputError(s.path() + ".shells: empty");
        }
        int r2 = 0;
        Json resolved = Json::array();
        for (const auto& [k2, th] : shells) {
            r2 = std::max(r2, k2);
            resolved.push_back(Json::array({k2, th}));
        }
        s.put("shells", resolved);
        spec.coloring = Coloring::shells(shells);
        spec.truncation = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(r2)) - 1e-12));
    }
    try {
        make_basis(spec);
    } catch (const InputError& e) {
        throw InputError(s.path() + ": " + e.what());
    }
    return spec;
}

ModeList read_modes(Section& s, const std::string& key, const ModeList& def, int dim) {
    const Json& j = s.raw(key);
    ModeList out = def;
    const std::string where = s.path() + "." + key;
    if (!j.is_null()) {
        if (!j.is_array()) throw InputError(where + ": expected a list of {k, value} entries");
        out.clear();
        for (const auto& e : j) {
            if (!e.is_object() || !e.contains("k") || !e.contains("value") || e.size() != 2) {
                throw InputError(where + ": each entry needs exactly k and value");
            }
            auto k = read_wavevector(e["k"], where, dim);
            Complex v;
            if (e["value"].is_number()) {
                v = e["value"].get<double>();
            } else if (e["value"].is_array() && e["value"].size() == 2 && e["value"][0].is_number() && e["value"][1].is_number()) {
                v = Complex(e["value"][0].get<double>(), e["value"][1].get<double>());
            } else {
                throw InputError(where + ": value must be a number or [re, im]");
            }
            out.emplace_back(k, v);
        }
    }
    Json resolved = Json::array();
    for (const auto& [k, v] : out) {
        if (static_cast<int>(k.size()) != dim) throw InputError(where + ": wavevector dimension mismatch");
        resolved.push_back({{"k", k}, {"value", complex_json(v)}});
    }
    s.put(key, resolved);
    return out;
}

SpectralField field_from_modes(const TorusGrid& grid, double mean, const ModeList& modes) {
    auto u = SpectralField::constant(grid, mean);
    for (const auto& [k, v] : modes) {
        bool zero = true;
        for (int c : k) zero = zero && c == 0;
        if (zero) throw InputError("initial data: set the mean through the model, not the k = 0 entry");
        if (!grid.contains(k) || !grid.in_dealias_band(grid.flat_index(k))) {
            throw InputError("initial data: mode outside the dealiased band of the grid");
        }
        u.set_mode(std::span<const int>(k), v);
    }
    return u;
}

}  // namespace tnlab::config
