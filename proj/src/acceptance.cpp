#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>

#include "tnlab/experiments.hpp"

namespace tnlab {

namespace {

struct Verdict {
    bool ok = true;
    std::ostringstream detail;
    Json measured = Json::object();

    void require(bool condition, const std::string& what) {
        if (!condition) {
            ok = false;
            detail << (detail.tellp() > 0 ? "; " : "") << what;
        }
    }
};

double num(const Json& j) { return j.is_number() ? j.get<double>() : std::nan(""); }

void runtime(Verdict& v, double seconds, double limit) {
    v.measured["seconds"] = seconds;
    v.measured["limit_seconds"] = limit;
    if (!(seconds <= limit)) v.require(false, "runtime " + std::to_string(seconds) + " s over " + std::to_string(limit));
}

const Json* find_row(const Json& rows, const char* key, double value) {
    for (const auto& r : rows) {
        if (std::abs(num(r[key]) - value) <= 1e-12 * std::max(1.0, std::abs(value))) return &r;
    }
    return nullptr;
}

void check_a1(const Json& m, Verdict& v) {
    const auto& x = m["measurements"];
    const auto& rows = x["rows"];
    const double a = num(x["a"]), b = num(x["b"]);
    const Json* r0 = find_row(rows, "K", 0.0);
    v.require(r0 != nullptr, "no K = 0 run");
    if (r0) {
        const double l0 = num((*r0)["lambda_mc"]);
        v.measured["lambda_K0"] = l0;
        v.require(std::abs(l0 - std::max(a, b)) <= 1e-3, "lambda(0) off the deterministic exponent");
    }
    for (double K : {0.5, 1.0, 2.0, 5.0}) {
        const Json* r = find_row(rows, "K", K);
        if (!r) {
            v.require(false, "no K = " + std::to_string(K) + " run");
            continue;
        }
        const double mc = num((*r)["lambda_mc"]), se = num((*r)["stderr"]), q = num((*r)["lambda_quadrature"]);
        v.measured["z_K" + std::to_string(K).substr(0, 3)] = (mc - q) / se;
        v.require(std::abs(mc - q) <= 3.0 * se, "Monte Carlo vs quadrature beyond 3 stderr at K = " + std::to_string(K));
    }
    const Json* r10 = find_row(rows, "K", 10.0);
    v.require(r10 != nullptr, "no K = 10 run");
    if (r10) {
        const double l = num((*r10)["lambda_mc"]);
        v.measured["lambda_K10"] = l;
        // Window around the half-trace limit, as wide as for A = diag(1, -2).
        const double limit = 0.5 * (a + b);
        v.require(l >= limit - 0.15 && l <= limit + 0.15, "lambda(10) outside [-0.65, -0.35]");
    }
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) pts.emplace_back(num(r["K"]), num(r["lambda_mc"]));
    std::sort(pts.begin(), pts.end());
    for (std::size_t i = 1; i < pts.size(); ++i) {
        v.require(pts[i].second < pts[i - 1].second, "lambda not decreasing in K");
    }
    runtime(v, num(m["wall_clock_seconds"]), 120.0);
}

void check_a2(const Json& m, Verdict& v) {
    const auto& rows = m["measurements"]["rows"];
    v.require(rows.size() >= 2, "need at least two intensities");
    double prev = -INFINITY;
    std::vector<std::pair<double, Json>> sorted;
    for (const auto& r : rows) sorted.emplace_back(num(r["K"]), r);
    std::sort(sorted.begin(), sorted.end(), [](const auto& p, const auto& q) { return p.first < q.first; });
    Json meas = Json::array();
    for (const auto& [K, r] : sorted) {
        const double rate = num(r["rate"]), r2 = num(r["r_squared"]), bound = num(r["bound_rate"]);
        meas.push_back({{"K", K}, {"rate", rate}, {"r_squared", r2}, {"ratio_to_bound", rate / bound}});
        const std::string at = " at K = " + std::to_string(K);
        v.require(r2 >= 0.9, "R^2 below 0.9" + at);
        v.require(rate > 0.0, "rate not positive" + at);
        v.require(rate > prev, "rate not increasing" + at);
        v.require(rate >= 0.8 * bound, "rate below 0.8 x bound" + at);
        prev = rate;
    }
    v.measured["rows"] = meas;
    runtime(v, num(m["wall_clock_seconds"]), 600.0);
}

void check_a3(const Json& m, Verdict& v) {
    const auto& x = m["measurements"];
    const double nu = num(m["config"]["model"]["nu"]);
    const double kc = num(x["K_crit"]);
    v.measured["K_crit"] = kc;
    v.require(std::isfinite(kc) && kc > 0.0, "K_crit not finite");
    const Json* r0 = find_row(x["rows"], "K", 0.0);
    v.require(r0 != nullptr, "no K = 0 run");
    if (r0) {
        // Growth rate of the unstable mode at K = 0 from the measured spectrum.
        const double expected = num(x["spectrum_max"]);
        const double l = num((*r0)["lambda"]);
        v.measured["lambda_K0"] = l;
        v.measured["lambda_K0_expected"] = expected;
        v.measured["nu"] = nu;
        v.require(std::abs(l - expected) <= 0.05 * std::abs(expected), "K = 0 exponent not within 5%");
    }
    for (double mult : {1.0, 1.5}) {
        const Json* r = nullptr;
        for (const auto& row : x["rows"]) {
            if (std::abs(num(row["K_crit_multiple"]) - mult) < 1e-12) r = &row;
        }
        if (!r) {
            v.require(false, "no run at " + std::to_string(mult) + " K_crit");
            continue;
        }
        const double l = num((*r)["lambda"]), se = num((*r)["stderr"]), bound = num((*r)["bound"]);
        const std::string at = " at " + std::to_string(mult).substr(0, 3) + " K_crit";
        v.measured["lambda" + at] = l;
        v.measured["stderr" + at] = se;
        v.measured["bound" + at] = bound;
        v.require(l + 1.6448536269514722 * se < 0.0, "exponent not negative with 95% confidence" + at);
        v.require(l <= bound + 3.0 * se, "exponent above bound + 3 stderr" + at);
    }
    runtime(v, num(m["wall_clock_seconds"]), 900.0);
}

void check_a4(const Json& m, Verdict& v) {
    const auto& x = m["measurements"];
    const double init = num(x["deterministic"]["initial_hm1"]), lo = num(x["deterministic"]["min_hm1"]);
    v.measured["deterministic_min_over_initial"] = lo / init;
    v.require(init > 0.0 && lo >= 0.5 * init, "K = 0 steady state decayed below half its initial distance");
    v.require(num(x["K_crit_multiple"]) >= 1.0, "noise below K_crit");
    v.require(num(x["T"]) >= 10.0 - 1e-9, "horizon shorter than 10");
    const double frac = num(x["success_fraction"]);
    v.measured["success_fraction"] = frac;
    v.measured["seeds"] = x["seeds"].size();
    v.require(x["seeds"].size() >= 20, "fewer than 20 seeds");
    v.require(frac >= 0.9, "fewer than 90% of seeds returned to uniform");
    runtime(v, num(m["wall_clock_seconds"]), 1200.0);
}

void check_a5(const Json& m, Verdict& v) {
    const auto& x = m["measurements"];
    if (!x.contains("single_mode") || !x.contains("two_mode")) {
        v.require(false, "both single_mode and two_mode runs are needed");
        return;
    }
    const auto& s = x["single_mode"];
    const double nu_c = num(s["nu_crit_formula"]);
    for (const auto& r : s["rows"]) {
        const double nu = num(r["nu"]), order = num(r["order_parameter"]);
        const std::string at = " at nu = " + std::to_string(nu);
        if (nu > nu_c) v.require(order <= 1e-6, "order parameter nonzero above nu_crit" + at);
        if (nu < nu_c) {
            v.require(order >= 0.05, "order parameter below 0.05" + at);
            v.require(num(r["free_energy"]) < num(r["free_energy_uniform"]), "nonuniform free energy not below uniform" + at);
        }
    }
    for (double nu : {0.55, 0.6, 0.45, 0.3}) {
        v.require(find_row(s["rows"], "nu", nu) != nullptr, "single-mode grid lacks nu = " + std::to_string(nu));
    }
    v.measured["single_nu_crit_estimate"] = s["nu_crit_estimate"];
    v.require(s["bracket_valid"].get<bool>() && std::abs(num(s["nu_crit_estimate"]) - nu_c) <= 0.02,
              "bisection does not bracket nu_crit within 0.02");

    const auto& t = x["two_mode"];
    bool window = false;
    for (const auto& r : t["rows"]) {
        if (num(r["max_eigenvalue"]) < 0.0 && num(r["order_parameter"]) > 1e-4 &&
            num(r["free_energy"]) < num(r["free_energy_uniform"])) {
            window = true;
            v.measured["first_order_nu"] = r["nu"];
        }
    }
    v.require(window, "no tested nu is linearly stable with a lower-energy nonuniform state");
    const double sharp = num(t["nu_sharp"]), ninv = num(t["N_inverse"]);
    v.measured["nu_sharp"] = sharp;
    v.measured["N_inverse"] = ninv;
    v.require(std::abs(sharp - ninv) <= 1e-10, "nu_sharp differs from N^-1");
    runtime(v, num(m["wall_clock_seconds"]), 300.0);
}

bool decreasing(const Json& xs) {
    for (std::size_t i = 1; i < xs.size(); ++i) {
        if (!(num(xs[i]) < num(xs[i - 1]))) return false;
    }
    return xs.size() >= 2;
}

void check_a6(const Json& m, Verdict& v) {
    const auto& o = m["measurements"]["oracles"];
    const auto& tr = o["transport"];
    double at_1e3 = std::nan("");
    for (std::size_t i = 0; i < tr["dt"].size(); ++i) {
        if (std::abs(num(tr["dt"][i]) - 1e-3) < 1e-15) at_1e3 = num(tr["gaps"][i]);
    }
    v.measured["transport_gap_dt_1e-3"] = at_1e3;
    v.measured["transport_gaps"] = tr["gaps"];
    v.require(num(tr["points"]) == 64 && std::abs(num(tr["T"]) - 0.5) < 1e-12, "transport check not at M = 64, T = 0.5");
    v.require(at_1e3 <= 5e-3, "transport gap at dt = 1e-3 above 5e-3");
    v.require(decreasing(tr["gaps"]), "transport gap not decreasing under refinement");
    v.measured["wong_zakai_gaps"] = o["wong_zakai"]["gaps"];
    v.require(decreasing(o["wong_zakai"]["gaps"]), "Wong-Zakai gap not decreasing in m");
    const double order = num(o["schemes"]["em_order"]);
    v.measured["em_strang_order"] = order;
    v.measured["em_strang_gaps"] = o["schemes"]["em_strang_gaps"];
    v.measured["milstein_strang_order"] = o["schemes"]["milstein_order"];
    v.require(order >= 1.0, "ito_em vs strang gap order below 1");
    runtime(v, num(o["seconds"]), 600.0);
}

void check_a7(const Json& m, Verdict& v) {
    const auto& l = m["measurements"]["linearization"];
    v.measured["relative_errors"] = l["relative_errors"];
    v.require(l["relative_errors"].size() >= 3, "fewer than three directions");
    for (const auto& e : l["relative_errors"]) v.require(num(e) <= 1e-3, "relative error above 1e-3");
    runtime(v, num(l["seconds"]), 120.0);
}

void check_a8(const Json& m, Verdict& v) {
    const auto& x = m["measurements"];
    const double slope = num(x["slope"]);
    v.measured["slope"] = slope;
    v.require(std::abs(slope + 0.5) <= 0.15, "log-log slope outside -0.5 +- 0.15");
    double largest = 0.0, err = std::nan("");
    for (const auto& r : x["rows"]) {
        if (num(r["N"]) > largest) {
            largest = num(r["N"]);
            err = num(r["mean_max_error"]);
        }
    }
    v.measured["N_max"] = largest;
    v.measured["error_at_N_max"] = err;
    v.measured["three_over_sqrt_N"] = 3.0 / std::sqrt(largest);
    v.require(largest >= 16000, "largest N below 1.6e4");
    v.require(err <= 3.0 / std::sqrt(largest), "error at largest N above 3/sqrt(N)");
    runtime(v, num(m["wall_clock_seconds"]), 900.0);
}

void check_a9(const Json& m, Verdict& v) {
    const auto& c = m["measurements"]["conservation"];
    const std::pair<const char*, double> limits[] = {{"mass_defect", 1e-12},       {"uniform_defect", 1e-14},
                                                     {"volume_defect", 1e-6},      {"divergence_relative", 1e-12},
                                                     {"parseval_relative", 1e-10}, {"realness_relative", 1e-10}};
    for (const auto& [key, limit] : limits) {
        v.measured[key] = c[key];
        v.require(num(c[key]) <= limit, std::string(key) + " above tolerance");
    }
    runtime(v, num(c["seconds"]), 60.0);
}

struct Rule {
    const char* id;
    const char* experiment;
    std::function<void(const Json&, Verdict&)> check;
};

const std::vector<Rule>& rules() {
    static const std::vector<Rule> r{{"A1", "acw", check_a1},          {"A2", "mixing", check_a2},
                                     {"A3", "lyapunov", check_a3},     {"A4", "ergodicity", check_a4},
                                     {"A5", "steady", check_a5},       {"A6", "convergence", check_a6},
                                     {"A7", "convergence", check_a7},  {"A8", "particles", check_a8},
                                     {"A9", "convergence", check_a9}};
    return r;
}

}  // namespace

const std::vector<std::string>& criterion_ids() {
    static const std::vector<std::string> ids = [] {
        std::vector<std::string> out;
        for (const auto& r : rules()) out.push_back(r.id);
        return out;
    }();
    return ids;
}

std::vector<CriterionStatus> check_acceptance(const std::vector<Json>& manifests) {
    std::vector<CriterionStatus> out;
    for (const auto& rule : rules()) {
        CriterionStatus s{rule.id, "missing", "no " + std::string(rule.experiment) + " manifest", Json::object()};
        for (const auto& m : manifests) {
            if (!m.is_object() || m.value("experiment", "") != rule.experiment) continue;
            Verdict v;
            try {
                rule.check(m, v);
            } catch (const std::exception& e) {
                v.require(false, std::string("malformed manifest: ") + e.what());
            }
            s.status = v.ok ? "pass" : "fail";
            s.detail = v.ok ? "all checks within tolerance" : v.detail.str();
            s.measured = v.measured;
            break;
        }
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace tnlab
