#include "tnlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "config.hpp"
#include "tnlab/errors.hpp"
#include "tnlab/lyapunov.hpp"
#include "tnlab/meanfield.hpp"
#include "tnlab/parallel.hpp"
#include "tnlab/particles.hpp"
#include "tnlab/spectral.hpp"

namespace tnlab {

namespace fs = std::filesystem;
using config::Section;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool positive(double v) { return v > 0.0; }
bool nonnegative(double v) { return v >= 0.0; }

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv {
public:
    explicit Csv(std::vector<std::string> columns) : columns_(std::move(columns)) {
        for (std::size_t i = 0; i < columns_.size(); ++i) os_ << (i ? "," : "") << columns_[i];
        os_ << "\n";
    }
    template <class... Ts>
    void row(const Ts&... values) {
        std::size_t i = 0;
        ((os_ << (i++ ? "," : "") << cell(values)), ...);
        os_ << "\n";
    }
    std::string str() const { return os_.str(); }

private:
    static std::string cell(double v) { return fmt(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long long v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

    std::vector<std::string> columns_;
    std::ostringstream os_;
};

struct Context {
    std::string id;
    std::uint64_t seed = 0;
    int workers = 0;
    fs::path out;
    Json measurements = Json::object();
    Json derived = Json::object();
    Json files = Json::array();

    // Independent top-level streams per use within one experiment.
    RngStream stream(std::uint64_t use) const { return RngStream(seed, use); }

    void write(const std::string& name, const Csv& csv) {
        files.push_back(name);
        if (out.empty()) return;
        std::ofstream f(out / name, std::ios::binary);
        if (!f) throw InputError("cannot write " + (out / name).string());
        f << csv.str();
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Least-squares line y = a + b x; returns (slope, R^2).
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    const double vx = n * sxx - sx * sx, vy = n * syy - sy * sy, cxy = n * sxy - sx * sy;
    const double slope = cxy / vx;
    const double r2 = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
    return {slope, r2};
}

// log(mean(exp(v))) without overflow.
double log_mean_exp(const std::vector<double>& v) {
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s / static_cast<double>(v.size()));
}

// ---------------------------------------------------------------- model blocks

struct ModelBlock {
    ModelParams params;
    PotentialSpec potential;
};

ModelBlock read_model(Section& top, const TorusGrid& grid, bool with_intensity, double default_nu = 0.3) {
    auto s = top.section("model");
    ModelBlock m;
    m.params.nu = s.real("nu", default_nu, positive, "positive");
    auto ps = s.section("potential");
    m.potential = config::read_potential(ps, PotentialSpec::single_mode({1, 1}));
    s.put("potential", ps.finish());
    try {
        m.params.W = fourier_potential(m.potential, grid);
    } catch (const InputError& e) {
        throw InputError("model.potential: " + std::string(e.what()));
    }
    auto ns = s.section("noise");
    m.params.noise = config::read_noise(ns, grid.dim(), 1.0, with_intensity);
    s.put("noise", ns.finish());
    top.put("model", s.finish());
    return m;
}

// Noise-only model (pure transport campaigns).
NoiseSpec read_noise_model(Section& top, int dim) {
    auto s = top.section("model");
    auto ns = s.section("noise");
    auto spec = config::read_noise(ns, dim, 0.0, false);
    s.put("noise", ns.finish());
    top.put("model", s.finish());
    return spec;
}

SolverConfig solver_block(Section& top, SolverConfig defaults) {
    auto s = top.section("solver");
    auto c = config::read_solver(s, defaults);
    top.put("solver", s.finish());
    return c;
}

SolverConfig solver_defaults(int points, double T, Scheme scheme, int record_every) {
    SolverConfig c;
    c.grid = TorusGrid(2, points);
    c.dt = 1e-3;
    c.T = T;
    c.scheme = scheme;
    c.record_every = record_every;
    return c;
}

Json noise_derived(const NoiseSpec& noise) {
    Json d;
    d["dim"] = noise.dim;
    d["active_modes"] = make_basis(noise).modes.size();
    d["theta_l2_squared"] = h_norm_squared(noise, 0.0);
    d["theta_hm1_squared"] = h_norm_squared(noise, -1.0);
    d["covariance_scalar_q"] = covariance_scalar(noise);
    d["C_d"] = noise.dim >= 2 ? dimension_constant(noise.dim) : 0.0;
    return d;
}

Json model_derived(const ModelParams& p) {
    Json d = noise_derived(p.noise);
    d["intensity"] = p.noise.intensity;
    d["ito_corrector_kappa"] = ito_corrector(p.noise);
    d["max_eigenvalue"] = max_eigenvalue(p.W, p.nu);
    d["linear_instability_threshold"] = linear_instability_threshold(p.W);
    const auto r = stability_report(p.W, p.nu, p.noise);
    d["K_crit"] = r.K_crit;
    d["best_nu_prime"] = r.best.nu_prime;
    d["C_W_at_best"] = r.best.C_W;
    double lo = 0.0, hi = 0.0;
    if (!r.spectrum.empty()) {
        lo = hi = r.spectrum.front().lambda;
        for (const auto& e : r.spectrum) {
            lo = std::min(lo, e.lambda);
            hi = std::max(hi, e.lambda);
        }
    }
    d["spectrum_min"] = lo;
    d["spectrum_max"] = hi;
    return d;
}

config::ModeList default_initial() {
    return {{{1, 0}, 0.5}, {{0, 1}, 0.5}, {{1, 1}, 0.25}};
}

// ---------------------------------------------------------------- E1 acw

struct AcwPlan {
    double a, b;
    std::vector<double> K;
    double T, dt;
    std::size_t ensemble;
    int angular_resolution;
};

AcwPlan parse_acw(Section& top) {
    auto s = top.section("acw");
    AcwPlan p;
    p.a = s.real("a", 1.0);
    p.b = s.real("b", -2.0);
    p.K = s.reals("K", {0.0, 0.5, 1.0, 2.0, 5.0, 10.0}, nonnegative, "nonnegative");
    p.T = s.real("T", 200.0, positive, "positive");
    p.dt = s.real("dt", 0.0, nonnegative, "nonnegative (0 = 1e-3 min(1, 1/K^2))");
    p.ensemble = static_cast<std::size_t>(s.integer("ensemble", 32, 1));
    p.angular_resolution = static_cast<int>(s.integer("angular_resolution", 4096, 8));
    top.put("acw", s.finish());
    return p;
}

void run_acw(const AcwPlan& p, Context& ctx) {
    Csv csv({"K", "lambda_mc", "stderr", "lambda_quadrature"});
    Json rows = Json::array();
    for (std::size_t i = 0; i < p.K.size(); ++i) {
        const double K = p.K[i];
        AcwOptions opt;
        opt.T = p.T;
        opt.dt = p.dt;
        opt.workers = ctx.workers;
        opt.ensemble = p.ensemble;
        if (K == 0.0) {
            // Deterministic: start on the unstable axis.
            opt.ensemble = 1;
            opt.x0 = std::array<double, 2>{p.a >= p.b ? 1.0 : 0.0, p.a >= p.b ? 0.0 : 1.0};
        }
        const auto est = acw_simulate({p.a, p.b, K}, opt, ctx.stream(i));
        const double quad = K > 0.0 ? acw_fk_quadrature({p.a, p.b, K}, p.angular_resolution) : std::nan("");
        csv.row(K, est.value, est.std_error, quad);
        rows.push_back({{"K", K},
                        {"lambda_mc", est.value},
                        {"stderr", est.std_error},
                        {"lambda_quadrature", K > 0.0 ? Json(quad) : Json(nullptr)},
                        {"dt", opt.dt > 0.0 ? opt.dt : acw_default_dt(K)},
                        {"ensemble", opt.ensemble}});
    }
    ctx.write("acw.csv", csv);
    ctx.measurements["a"] = p.a;
    ctx.measurements["b"] = p.b;
    ctx.measurements["rows"] = rows;
    ctx.derived["half_trace"] = 0.5 * (p.a + p.b);
    ctx.derived["deterministic_top"] = std::max(p.a, p.b);
}

// ---------------------------------------------------------------- E2 mixing

struct MixingPlan {
    NoiseSpec noise;
    SolverConfig solver;
    std::vector<double> K;
    std::size_t ensemble;
    double fit_lo, fit_hi;
    int renormalize_every;
    config::ModeList initial;
};

MixingPlan parse_mixing(Section& top) {
    MixingPlan p;
    p.solver = solver_block(top, solver_defaults(64, 3.0, Scheme::strang, 100));
    p.noise = read_noise_model(top, p.solver.grid.dim());
    auto s = top.section("mixing");
    p.K = s.reals("K", {1.0, 2.0, 4.0}, positive, "positive");
    p.ensemble = static_cast<std::size_t>(s.integer("ensemble", 50, 1));
    const auto w = s.reals("fit_window", {0.5, 3.0}, nonnegative, "nonnegative");
    if (w.size() != 2 || !(w[0] < w[1]) || w[1] > p.solver.T + 1e-12) {
        throw InputError("mixing.fit_window: need [t0, t1] with t0 < t1 <= solver.T");
    }
    p.fit_lo = w[0];
    p.fit_hi = w[1];
    p.renormalize_every = static_cast<int>(s.integer("renormalize_every", 100, 0));
    p.initial = config::read_modes(s, "initial", default_initial(), p.solver.grid.dim());
    top.put("mixing", s.finish());
    return p;
}

void run_mixing(const MixingPlan& p, Context& ctx) {
    const auto u0 = config::field_from_modes(p.solver.grid, 0.0, p.initial);
    SolverConfig cfg = p.solver;
    cfg.renormalize_every = p.renormalize_every;
    Csv series({"t", "K", "mean_hm1_squared", "log_mean_hm1_squared"});
    Csv rates({"K", "rate", "r_squared", "bound_rate"});
    Json rows = Json::array();
    ctx.derived = noise_derived(p.noise);
    for (std::size_t ki = 0; ki < p.K.size(); ++ki) {
        NoiseSpec noise = p.noise;
        noise.intensity = p.K[ki];
        const auto basis = make_basis(noise);
        std::vector<Trajectory> runs(p.ensemble);
        const RngStream base = ctx.stream(ki);
        parallel_each(
            p.ensemble,
            [&](std::size_t m) {
                runs[m] = run_pure_transport(u0, noise, cfg,
                                             NoiseDriver::white(basis, base.split(m, purpose::common_noise), cfg.dt));
            },
            ctx.workers);
        const std::size_t ns = runs.front().samples.size();
        std::vector<double> fx, fy;
        for (std::size_t i = 0; i < ns; ++i) {
            std::vector<double> logs(p.ensemble);
            for (std::size_t m = 0; m < p.ensemble; ++m) logs[m] = 2.0 * runs[m].samples[i].log_hm1;
            const double t = runs.front().samples[i].t;
            const double lm = log_mean_exp(logs);
            series.row(t, p.K[ki], std::exp(lm), lm);
            if (t >= p.fit_lo - 1e-9 && t <= p.fit_hi + 1e-9) {
                fx.push_back(t);
                fy.push_back(lm);
            }
        }
        const auto [slope, r2] = linear_fit(fx, fy);
        const double bound = 2.0 * kTwoPi * kTwoPi * h_norm_squared(noise, -1.0) * dimension_constant(noise.dim) *
                             p.K[ki] * p.K[ki];
        rates.row(p.K[ki], -slope, r2, bound);
        rows.push_back({{"K", p.K[ki]}, {"rate", -slope}, {"r_squared", r2}, {"bound_rate", bound}, {"fit_points", fx.size()}});
    }
    ctx.write("mixing.csv", series);
    ctx.write("mixing_rates.csv", rates);
    ctx.measurements["rows"] = rows;
    ctx.measurements["ensemble"] = p.ensemble;
    ctx.measurements["fit_window"] = {p.fit_lo, p.fit_hi};
}

// ---------------------------------------------------------------- E3 lyapunov

struct LyapunovPlan {
    ModelBlock model;
    SolverConfig solver;
    std::vector<double> K;
    std::vector<double> multiples;
    std::size_t ensemble;
    double tau;
};

LyapunovPlan parse_lyapunov(Section& top) {
    LyapunovPlan p;
    p.solver = solver_block(top, solver_defaults(32, 10.0, Scheme::strang, 1000));
    p.model = read_model(top, p.solver.grid, false);
    auto s = top.section("lyapunov");
    p.K = s.reals("K", {0.0}, nonnegative, "nonnegative");
    p.multiples = s.reals("K_crit_multiples", {1.0, 1.5}, nonnegative, "nonnegative");
    p.ensemble = static_cast<std::size_t>(s.integer("ensemble", 16, 1));
    p.tau = s.real("tau", 1.0, positive, "positive");
    top.put("lyapunov", s.finish());
    return p;
}

void run_lyapunov(const LyapunovPlan& p, Context& ctx) {
    ModelParams params = p.model.params;
    const auto report = stability_report(params.W, params.nu, params.noise);
    ctx.derived = model_derived(params);
    struct Point {
        double K;
        double multiple;
    };
    std::vector<Point> points;
    for (double K : p.K) points.push_back({K, std::nan("")});
    for (double m : p.multiples) points.push_back({m * report.K_crit, m});
    Csv csv({"K", "K_over_K_crit", "lambda", "stderr", "bound", "spectrum_max"});
    Json rows = Json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        params.noise.intensity = points[i].K;
        SpdeLyapunovOptions opt;
        opt.solver = p.solver;
        opt.ensemble = p.ensemble;
        opt.tau = p.tau;
        opt.workers = ctx.workers;
        const auto r = spde_top_lyapunov(params, opt, ctx.stream(i));
        const double ratio = report.K_crit > 0.0 ? points[i].K / report.K_crit : std::nan("");
        csv.row(points[i].K, ratio, r.estimate.value, r.estimate.std_error, r.bound, report.max_eigenvalue);
        rows.push_back({{"K", points[i].K},
                        {"K_crit_multiple", std::isnan(points[i].multiple) ? Json(nullptr) : Json(points[i].multiple)},
                        {"lambda", r.estimate.value},
                        {"stderr", r.estimate.std_error},
                        {"bound", r.bound},
                        {"members", r.estimate.members}});
    }
    ctx.write("lyapunov.csv", csv);
    ctx.measurements["rows"] = rows;
    ctx.measurements["K_crit"] = report.K_crit;
    ctx.measurements["spectrum_max"] = report.max_eigenvalue;
    ctx.measurements["reference_split"] = {
        {"nu_prime", 0.25},
        {"K", std::sqrt(split_point(params.W, params.nu, 0.25, report.theta_hm1_squared, report.C_d).K_squared)}};
}

// ---------------------------------------------------------------- E4 ergodicity

struct FixedPointBlock {
    double damping, tol;
    int max_iter;
    double amplitude;
};

FixedPointBlock read_fixed_point(Section& parent, double default_amplitude) {
    auto s = parent.section("fixed_point");
    FixedPointBlock f;
    f.damping = s.real("damping", 0.5, [](double v) { return v > 0.0 && v <= 1.0; }, "in (0, 1]");
    f.tol = s.real("tol", 1e-10, positive, "positive");
    f.max_iter = static_cast<int>(s.integer("max_iter", 10000, 1));
    f.amplitude = s.real("amplitude", default_amplitude, nonnegative, "nonnegative");
    parent.put("fixed_point", s.finish());
    return f;
}

// Symmetric perturbation of the uniform state along the product mode k.
SpectralField perturbed_uniform(const TorusGrid& g, const std::vector<int>& k, double amplitude) {
    auto rho = SpectralField::constant(g, 1.0);
    const int d = g.dim();
    std::vector<int> pattern(d);
    for (int mask = 0; mask < (1 << d); ++mask) {
        for (int i = 0; i < d; ++i) pattern[i] = (mask >> i & 1) ? -k[i] : k[i];
        rho.at(g.flat_index(pattern)) += amplitude * std::ldexp(1.0, -d);
    }
    return rho;
}

struct ErgodicityPlan {
    ModelBlock model;
    SolverConfig solver;
    std::size_t seeds;
    double multiple;
    double deterministic_T;
    double threshold, reach_by, stay_below;
    FixedPointBlock fp;
};

ErgodicityPlan parse_ergodicity(Section& top) {
    ErgodicityPlan p;
    p.solver = solver_block(top, solver_defaults(32, 10.0, Scheme::strang, 100));
    p.model = read_model(top, p.solver.grid, false);
    auto s = top.section("ergodicity");
    p.seeds = static_cast<std::size_t>(s.integer("seeds", 20, 1));
    p.multiple = s.real("K_crit_multiple", 1.5, nonnegative, "nonnegative");
    p.deterministic_T = s.real("deterministic_T", 5.0, positive, "positive");
    p.threshold = s.real("threshold", 1e-2, positive, "positive");
    p.reach_by = s.real("reach_by", 5.0, positive, "positive");
    p.stay_below = s.real("stay_below", 5e-2, positive, "positive");
    p.fp = read_fixed_point(s, 0.1);
    top.put("ergodicity", s.finish());
    return p;
}

void run_ergodicity(const ErgodicityPlan& p, Context& ctx) {
    ModelParams params = p.model.params;
    const auto report = stability_report(params.W, params.nu, params.noise);
    ctx.derived = model_derived(params);
    const auto& g = p.solver.grid;
    std::vector<int> k = p.model.potential.k.empty() ? std::vector<int>(g.dim(), 1) : p.model.potential.k;
    const auto fp = steady_state_fixed_point(params.nu, params.W, perturbed_uniform(g, k, p.fp.amplitude), p.fp.damping,
                                             p.fp.tol, p.fp.max_iter);
    auto rho_star = fp.rho;
    Csv csv({"t", "run", "K", "hm1"});
    Json seeds = Json::array();

    // K = 0 from the steady state.
    SolverConfig det_cfg = p.solver;
    det_cfg.T = p.deterministic_T;
    params.noise.intensity = 0.0;
    const auto basis = make_basis(params.noise);
    const auto det = run_spde(rho_star, params, det_cfg, NoiseDriver::white(basis, ctx.stream(0), det_cfg.dt));
    double det_min = std::numeric_limits<double>::infinity();
    for (const auto& s : det.samples) {
        csv.row(s.t, "deterministic", 0.0, s.hm1);
        det_min = std::min(det_min, s.hm1);
    }

    params.noise.intensity = p.multiple * report.K_crit;
    std::vector<Trajectory> runs(p.seeds);
    parallel_each(
        p.seeds,
        [&](std::size_t i) {
            runs[i] = run_spde(rho_star, params, p.solver,
                               NoiseDriver::white(basis, ctx.stream(1).split(i, purpose::common_noise), p.solver.dt));
        },
        ctx.workers);
    std::size_t successes = 0;
    for (std::size_t i = 0; i < p.seeds; ++i) {
        double reach = std::nan("");
        double after = 0.0;
        for (const auto& s : runs[i].samples) {
            csv.row(s.t, std::to_string(i), params.noise.intensity, s.hm1);
            if (std::isnan(reach) && s.hm1 < p.threshold) reach = s.t;
            if (!std::isnan(reach)) after = std::max(after, s.hm1);
        }
        const bool ok = !std::isnan(reach) && reach <= p.reach_by + 1e-9 && after < p.stay_below;
        successes += ok;
        seeds.push_back({{"seed_index", i},
                         {"reach_time", std::isnan(reach) ? Json(nullptr) : Json(reach)},
                         {"max_after_reach", std::isnan(reach) ? Json(nullptr) : Json(after)},
                         {"final_hm1", runs[i].samples.back().hm1},
                         {"success", ok}});
    }
    ctx.write("ergodicity.csv", csv);
    ctx.measurements["fixed_point"] = {{"converged", fp.converged},
                                       {"iterations", fp.iterations},
                                       {"residual", fp.residual},
                                       {"order_parameter", std::abs(rho_star.coefficient(std::span<const int>(k)))}};
    ctx.measurements["deterministic"] = {{"initial_hm1", det.samples.front().hm1},
                                         {"min_hm1", det_min},
                                         {"T", p.deterministic_T}};
    ctx.measurements["K"] = params.noise.intensity;
    ctx.measurements["K_crit"] = report.K_crit;
    ctx.measurements["K_crit_multiple"] = p.multiple;
    ctx.measurements["seeds"] = seeds;
    ctx.measurements["success_fraction"] = static_cast<double>(successes) / static_cast<double>(p.seeds);
    ctx.measurements["threshold"] = p.threshold;
    ctx.measurements["reach_by"] = p.reach_by;
    ctx.measurements["stay_below"] = p.stay_below;
    ctx.measurements["T"] = p.solver.T;
}

// ---------------------------------------------------------------- E5 steady

struct SteadyPlan {
    int points;
    FixedPointBlock fp;
    bool single = false, two = false;
    std::vector<int> k, l;
    std::vector<double> single_nu, two_nu;
    double s_lo, s_hi, s_tol, t_lo, t_hi, t_tol;
    double two_scale;
};

SteadyPlan parse_steady(Section& top) {
    auto s = top.section("steady");
    SteadyPlan p;
    p.points = static_cast<int>(s.integer("points", 32, 8));
    p.fp = read_fixed_point(s, 0.1);
    auto bracket = [](Section& sec, double lo, double hi) {
        const auto b = sec.reals("bracket", {lo, hi}, positive, "positive");
        if (b.size() != 2 || !(b[0] < b[1])) throw InputError(sec.path() + ".bracket: need [lo, hi] with lo < hi");
        return b;
    };
    const bool single = !s.has("single_mode") || !s.raw("single_mode").is_boolean();
    if (single) {
        auto sm = s.section("single_mode");
        const auto kv = sm.integers("k", {1, 1}, std::numeric_limits<long long>::min());
        p.k.assign(kv.begin(), kv.end());
        p.single_nu = sm.reals("nu", {0.6, 0.55, 0.45, 0.3}, positive, "positive");
        const auto b = bracket(sm, 0.45, 0.55);
        p.s_lo = b[0];
        p.s_hi = b[1];
        p.s_tol = sm.real("bisection_tol", 0.005, positive, "positive");
        s.put("single_mode", sm.finish());
        p.single = true;
    } else {
        s.put("single_mode", false);
    }
    const bool two = !s.has("two_mode") || !s.raw("two_mode").is_boolean();
    if (two) {
        auto tm = s.section("two_mode");
        const auto lv = tm.integers("l", {1, 1}, std::numeric_limits<long long>::min());
        p.l.assign(lv.begin(), lv.end());
        p.two_nu = tm.reals("nu", {0.36, 0.38, 0.40, 0.42, 0.45}, positive, "positive");
        const auto b = bracket(tm, 0.36, 0.45);
        p.t_lo = b[0];
        p.t_hi = b[1];
        p.t_tol = tm.real("bisection_tol", 0.005, positive, "positive");
        p.two_scale = tm.real("init_temperature", 0.1, positive, "positive");
        s.put("two_mode", tm.finish());
        p.two = true;
    } else {
        s.put("two_mode", false);
    }
    top.put("steady", s.finish());
    return p;
}

// Concentrated initial density exp(-W/s)/Z for reaching the nonuniform branch.
SpectralField gibbs_of_potential(const SpectralField& W, double s) {
    auto phys = to_physical(W);
    const double lo = *std::min_element(phys.values.begin(), phys.values.end());
    double sum = 0.0;
    for (double& v : phys.values) {
        v = std::exp(-(v - lo) / s);
        sum += v;
    }
    for (double& v : phys.values) v /= sum / static_cast<double>(phys.values.size());
    auto rho = to_spectral(phys);
    rho.at(0) = 1.0;
    return rho;
}

void run_steady(const SteadyPlan& p, Context& ctx) {
    const TorusGrid g(2, p.points);
    Csv csv({"potential", "nu", "order_parameter", "free_energy", "free_energy_uniform", "max_eigenvalue", "converged",
             "iterations"});
    const auto uniform = SpectralField::constant(g, 1.0);
    struct Point {
        double order, E, E1, max_eig;
        bool converged;
        int iterations;
    };
    auto solve = [&](const SpectralField& W, const SpectralField& init, const std::vector<int>& k, double nu) {
        const auto r = steady_state_fixed_point(nu, W, init, p.fp.damping, p.fp.tol, p.fp.max_iter);
        Point pt;
        pt.order = std::abs(r.rho.coefficient(std::span<const int>(k)));
        pt.E = std::nan("");
        try {
            pt.E = free_energy(r.rho, nu, W);
        } catch (const InputError&) {
        }
        pt.E1 = free_energy(uniform, nu, W);
        pt.max_eig = max_eigenvalue(W, nu);
        pt.converged = r.converged;
        pt.iterations = r.iterations;
        return pt;
    };
    auto to_json = [](double nu, const Point& pt) {
        return Json{{"nu", nu},
                    {"order_parameter", pt.order},
                    {"free_energy", std::isnan(pt.E) ? Json(nullptr) : Json(pt.E)},
                    {"free_energy_uniform", pt.E1},
                    {"max_eigenvalue", pt.max_eig},
                    {"converged", pt.converged},
                    {"iterations", pt.iterations}};
    };

    if (p.single) {
        const auto spec = PotentialSpec::single_mode(p.k);
        const auto W = fourier_potential(spec, g);
        const auto init = perturbed_uniform(g, p.k, p.fp.amplitude);
        Json rows = Json::array();
        for (double nu : p.single_nu) {
            const auto pt = solve(W, init, p.k, nu);
            csv.row("single_mode", nu, pt.order, pt.E, pt.E1, pt.max_eig, pt.converged ? 1 : 0, pt.iterations);
            rows.push_back(to_json(nu, pt));
        }
        // Bisection on "the iteration leaves the uniform state".
        double lo = p.s_lo, hi = p.s_hi;
        const auto nonuniform = [&](double nu) { return solve(W, init, p.k, nu).order > 1e-4; };
        const bool lo_ok = nonuniform(lo), hi_ok = !nonuniform(hi);
        if (lo_ok && hi_ok) {
            while (hi - lo > p.s_tol) {
                const double mid = 0.5 * (lo + hi);
                (nonuniform(mid) ? lo : hi) = mid;
            }
        }
        ctx.measurements["single_mode"] = {{"k", p.k},
                                           {"rows", rows},
                                           {"bracket_valid", lo_ok && hi_ok},
                                           {"nu_crit_bracket", {lo, hi}},
                                           {"nu_crit_estimate", 0.5 * (lo + hi)},
                                           {"N_k", normalization_constant(spec, 2)},
                                           {"nu_crit_formula", 1.0 / normalization_constant(spec, 2)}};
    }
    if (p.two) {
        const auto spec = PotentialSpec::two_mode(p.l);
        const auto W = fourier_potential(spec, g);
        const auto init = gibbs_of_potential(W, p.two_scale);
        Json rows = Json::array();
        for (double nu : p.two_nu) {
            const auto pt = solve(W, init, p.l, nu);
            csv.row("two_mode", nu, pt.order, pt.E, pt.E1, pt.max_eig, pt.converged ? 1 : 0, pt.iterations);
            rows.push_back(to_json(nu, pt));
        }
        // Bisection on "a nonuniform fixed point with lower free energy than 1 exists".
        const auto lower = [&](double nu) {
            const auto pt = solve(W, init, p.l, nu);
            return pt.order > 1e-4 && pt.E < pt.E1;
        };
        double lo = p.t_lo, hi = p.t_hi;
        const bool valid = lower(lo) && !lower(hi);
        if (valid) {
            while (hi - lo > p.t_tol) {
                const double mid = 0.5 * (lo + hi);
                (lower(mid) ? lo : hi) = mid;
            }
        }
        const double N = normalization_constant(spec, 2);
        ctx.measurements["two_mode"] = {{"l", p.l},
                                        {"rows", rows},
                                        {"bracket_valid", valid},
                                        {"nu_crit_bracket", {lo, hi}},
                                        {"nu_crit_estimate", 0.5 * (lo + hi)},
                                        {"N", N},
                                        {"N_inverse", 1.0 / N},
                                        {"nu_sharp", linear_instability_threshold(W)}};
    }
    ctx.write("steady.csv", csv);
}

// ---------------------------------------------------------------- E6 particles

struct ParticlesPlan {
    ModelBlock model;
    SolverConfig solver;
    std::vector<long long> N;
    std::size_t replicas;
    double kmax;
    FlowScheme common;
    config::ModeList initial;
};

FlowScheme parse_flow_scheme(const std::string& s) {
    if (s == "heun") return FlowScheme::heun;
    if (s == "euler_maruyama") return FlowScheme::euler_maruyama;
    return FlowScheme::shear_split;
}

ParticlesPlan parse_particles(Section& top) {
    ParticlesPlan p;
    p.solver = solver_block(top, solver_defaults(32, 0.5, Scheme::strang, 50));
    p.model = read_model(top, p.solver.grid, true);
    auto s = top.section("particles");
    p.N = s.integers("N", {1000, 4000, 16000}, 1);
    p.replicas = static_cast<std::size_t>(s.integer("replicas", 4, 1));
    p.kmax = s.real("kmax", 2.0, [](double v) { return v >= 1.0; }, "at least 1");
    p.common = parse_flow_scheme(s.text("common_scheme", "shear_split", {"shear_split", "heun", "euler_maruyama"}));
    p.initial = config::read_modes(s, "initial", {{{1, 1}, 0.2}, {{1, 0}, Complex(0.1, -0.1)}, {{0, 2}, 0.1}},
                                   p.solver.grid.dim());
    top.put("particles", s.finish());
    return p;
}

void run_particles(const ParticlesPlan& p, Context& ctx) {
    const auto& params = p.model.params;
    ctx.derived = model_derived(params);
    const auto rho0 = config::field_from_modes(p.solver.grid, 1.0, p.initial);
    const auto basis = make_basis(params.noise);
    const auto common_stream = ctx.stream(0).split(0, purpose::common_noise);
    const auto driver = NoiseDriver::white(basis, common_stream, p.solver.dt);
    SolverConfig sc = p.solver;
    sc.record_fields = true;
    const auto spde = run_spde(rho0, params, sc, driver);

    ParticleConfig pc;
    pc.T = p.solver.T;
    pc.dt = p.solver.dt;
    pc.record_every = p.solver.record_every;
    pc.kmax = p.kmax;
    pc.common_scheme = p.common;
    pc.workers = ctx.workers;

    Csv csv({"N", "replica", "max_error"});
    Csv summary({"N", "mean_max_error", "bound_3_over_sqrt_N"});
    Json rows = Json::array();
    std::vector<double> lx, ly;
    for (std::size_t ni = 0; ni < p.N.size(); ++ni) {
        const auto N = static_cast<std::size_t>(p.N[ni]);
        double mean = 0.0;
        std::vector<double> errs;
        for (std::size_t r = 0; r < p.replicas; ++r) {
            const RngStream rs = ctx.stream(1 + ni);
            auto ens = draw_particles(rho0, N, rs.split(r, purpose::initial_data), rs.split(r, purpose::idiosyncratic));
            const auto run = simulate_particles(ens, params, pc, driver);
            const auto cmp = compare_to_spde(run, spde, driver);
            csv.row(N, r, cmp.max_error);
            errs.push_back(cmp.max_error);
            mean += cmp.max_error / static_cast<double>(p.replicas);
        }
        summary.row(N, mean, 3.0 / std::sqrt(static_cast<double>(N)));
        rows.push_back({{"N", N}, {"mean_max_error", mean}, {"replica_errors", errs}});
        lx.push_back(std::log(static_cast<double>(N)));
        ly.push_back(std::log(mean));
    }
    ctx.write("particles.csv", csv);
    ctx.write("particles_summary.csv", summary);
    ctx.measurements["rows"] = rows;
    ctx.measurements["slope"] = lx.size() >= 2 ? Json(linear_fit(lx, ly).first) : Json(nullptr);
    ctx.measurements["kmax"] = p.kmax;
}

// ---------------------------------------------------------------- convergence (A6, A7, A9)

struct ConvergencePlan {
    ModelBlock model;
    int points;
    // transport
    int tr_points;
    double tr_K, tr_T;
    std::vector<double> tr_dt;
    Scheme tr_scheme;
    config::ModeList tr_initial;
    // wong-zakai
    double wz_K, wz_T;
    std::vector<long long> wz_levels;
    int wz_base;
    std::size_t wz_points;
    // schemes
    double sc_K, sc_T;
    std::vector<double> sc_dt;
    // linearization
    double li_T, li_dt, li_eps;
    int li_dirs;
    Scheme li_scheme;
    // conservation
    double co_T, co_dt, co_flow_K, co_flow_T;
};

ConvergencePlan parse_convergence(Section& top) {
    ConvergencePlan p;
    {
        // Model grid resolved below from convergence.points.
        auto s = top.section("convergence");
        p.points = static_cast<int>(s.integer("points", 32, 8));
        {
            auto t = s.section("transport");
            p.tr_points = static_cast<int>(t.integer("points", 64, 8));
            p.tr_K = t.real("K", 0.1, nonnegative, "nonnegative");
            p.tr_T = t.real("T", 0.5, positive, "positive");
            p.tr_dt = t.reals("dt", {2e-3, 1e-3, 5e-4}, positive, "positive");
            p.tr_scheme = config::parse_scheme(t.text("scheme", "ito_milstein", {"ito_em", "ito_milstein", "strang"}));
            p.tr_initial = config::read_modes(t, "initial", {{{1, 0}, 0.2}, {{0, 1}, Complex(0.0, 0.2)}, {{1, 1}, 0.1}}, 2);
            s.put("transport", t.finish());
        }
        {
            auto w = s.section("wong_zakai");
            p.wz_K = w.real("K", 0.1, nonnegative, "nonnegative");
            p.wz_T = w.real("T", 0.5, positive, "positive");
            p.wz_levels = w.integers("levels", {4, 6, 8}, 0);
            p.wz_base = static_cast<int>(w.integer("base_level", 12, 1));
            p.wz_points = static_cast<std::size_t>(w.integer("points", 64, 1));
            for (auto m : p.wz_levels) {
                if (m > p.wz_base) throw InputError("convergence.wong_zakai.levels: must not exceed base_level");
            }
            s.put("wong_zakai", w.finish());
        }
        {
            auto c = s.section("schemes");
            p.sc_K = c.real("K", 0.1, nonnegative, "nonnegative");
            p.sc_T = c.real("T", 0.2, positive, "positive");
            p.sc_dt = c.reals("dt", {2e-3, 1e-3, 5e-4, 2.5e-4}, positive, "positive");
            s.put("schemes", c.finish());
        }
        {
            auto l = s.section("linearization");
            p.li_T = l.real("T", 0.2, positive, "positive");
            p.li_dt = l.real("dt", 1e-3, positive, "positive");
            p.li_eps = l.real("eps", 1e-4, positive, "positive");
            p.li_dirs = static_cast<int>(l.integer("directions", 3, 1));
            p.li_scheme = config::parse_scheme(l.text("scheme", "strang", {"ito_em", "ito_milstein", "strang"}));
            s.put("linearization", l.finish());
        }
        {
            auto c = s.section("conservation");
            p.co_T = c.real("T", 0.2, positive, "positive");
            p.co_dt = c.real("dt", 1e-3, positive, "positive");
            p.co_flow_K = c.real("flow_K", 0.1, nonnegative, "nonnegative");
            p.co_flow_T = c.real("flow_T", 1.0, positive, "positive");
            s.put("conservation", c.finish());
        }
        top.put("convergence", s.finish());
    }
    p.model = read_model(top, TorusGrid(2, p.points), true);
    return p;
}

// Drivers sharing one Brownian path at every step size in `dts` (each a multiple of the smallest).
NoiseDriver shared_driver(const ModeBasis& basis, const RngStream& stream, const std::vector<double>& dts, double dt) {
    const double base = *std::min_element(dts.begin(), dts.end());
    const auto group = static_cast<std::uint32_t>(std::llround(dt / base));
    if (std::abs(group * base - dt) > 1e-9 * dt) throw InputError("convergence: step sizes must be multiples of the smallest");
    return NoiseDriver::white(basis, stream, base, group);
}

SpectralField bumpy_density(const TorusGrid& g) {
    auto rho = SpectralField::constant(g, 1.0);
    rho.set_mode({1, 1}, 0.1);
    rho.set_mode({1, 0}, Complex(0.05, 0.05));
    rho.set_mode({0, 2}, 0.05);
    return rho;
}

SolverConfig quick_config(const TorusGrid& g, double dt, double T, Scheme s) {
    SolverConfig c;
    c.grid = g;
    c.dt = dt;
    c.T = T;
    c.scheme = s;
    c.record_every = 10;
    return c;
}

double fitted_order(const std::vector<double>& dts, const std::vector<double>& gaps) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < dts.size(); ++i) {
        x.push_back(std::log(dts[i]));
        y.push_back(std::log(gaps[i]));
    }
    return linear_fit(x, y).first;
}

void run_convergence(const ConvergencePlan& p, Context& ctx) {
    Csv csv({"check", "parameter", "value"});
    const auto& model = p.model.params;
    ctx.derived = model_derived(model);
    const TorusGrid g(2, p.points);

    // A6 (i): spectral pure transport against the characteristics pull-back.
    auto t0 = std::chrono::steady_clock::now();
    Json a6;
    {
        const TorusGrid tg(2, p.tr_points);
        NoiseSpec noise = model.noise;
        noise.intensity = p.tr_K;
        const auto basis = make_basis(noise);
        const auto u0 = config::field_from_modes(tg, 0.0, p.tr_initial);
        std::vector<double> gaps;
        for (double dt : p.tr_dt) {
            const auto drv = shared_driver(basis, ctx.stream(0), p.tr_dt, dt);
            const auto tr = run_pure_transport(u0, noise, quick_config(tg, dt, p.tr_T, p.tr_scheme), drv);
            const auto ref = transport_scalar(u0, noise, drv, p.tr_T);
            gaps.push_back(l2_norm(*tr.final_state - ref));
            csv.row("transport_gap", fmt(dt), gaps.back());
        }
        a6["transport"] = {{"dt", p.tr_dt}, {"gaps", gaps}, {"K", p.tr_K}, {"scheme", config::scheme_name(p.tr_scheme)},
                           {"points", p.tr_points}, {"T", p.tr_T}};
    }
    // A6 (ii): Wong-Zakai flows against the Stratonovich flow on one path.
    {
        NoiseSpec noise = model.noise;
        noise.intensity = p.wz_K;
        const auto basis = make_basis(noise);
        const RngStream stream = ctx.stream(1);
        std::vector<double> pts(2 * p.wz_points);
        for (std::size_t i = 0; i < p.wz_points; ++i) std::tie(pts[2 * i], pts[2 * i + 1]) = ctx.stream(2).uniforms(0, i);
        const double h = std::ldexp(1.0, -p.wz_base);
        const auto reference = integrate_characteristics(noise, NoiseDriver::white(basis, stream, h), pts, p.wz_T);
        std::vector<double> gaps;
        for (auto m : p.wz_levels) {
            auto path = std::make_shared<WongZakaiPath>(basis, p.wz_T, static_cast<int>(m), stream, p.wz_base);
            FlowOptions opt;
            opt.ode_dt = h;
            const auto wz = integrate_characteristics(noise, NoiseDriver::wong_zakai(basis, path), pts, p.wz_T, opt);
            gaps.push_back(torus_sup_distance(wz.points, reference.points));
            csv.row("wong_zakai_gap", std::to_string(m), gaps.back());
        }
        a6["wong_zakai"] = {{"levels", p.wz_levels}, {"gaps", gaps}, {"K", p.wz_K}, {"T", p.wz_T}};
    }
    // A6 (iii): ito_em against strang on shared increments; Milstein reported alongside.
    {
        ModelParams sm = model;
        sm.noise.intensity = p.sc_K;
        const auto basis = make_basis(sm.noise);
        const auto rho = bumpy_density(g);
        std::vector<double> em_gaps, mil_gaps;
        for (double dt : p.sc_dt) {
            const auto drv = shared_driver(basis, ctx.stream(3), p.sc_dt, dt);
            const auto em = run_spde(rho, sm, quick_config(g, dt, p.sc_T, Scheme::ito_em), drv);
            const auto mil = run_spde(rho, sm, quick_config(g, dt, p.sc_T, Scheme::ito_milstein), drv);
            const auto st = run_spde(rho, sm, quick_config(g, dt, p.sc_T, Scheme::strang), drv);
            em_gaps.push_back(l2_norm(*em.final_state - *st.final_state));
            mil_gaps.push_back(l2_norm(*mil.final_state - *st.final_state));
            csv.row("em_strang_gap", fmt(dt), em_gaps.back());
            csv.row("milstein_strang_gap", fmt(dt), mil_gaps.back());
        }
        a6["schemes"] = {{"dt", p.sc_dt},
                         {"em_strang_gaps", em_gaps},
                         {"em_order", fitted_order(p.sc_dt, em_gaps)},
                         {"milstein_strang_gaps", mil_gaps},
                         {"milstein_order", fitted_order(p.sc_dt, mil_gaps)},
                         {"K", p.sc_K},
                         {"T", p.sc_T}};
    }
    a6["seconds"] = seconds_since(t0);
    ctx.measurements["oracles"] = a6;

    // A7: finite-difference check of the linearization around rho = 1.
    t0 = std::chrono::steady_clock::now();
    {
        const auto basis = make_basis(model.noise);
        const auto drv = NoiseDriver::white(basis, ctx.stream(4), p.li_dt);
        const auto cfg = quick_config(g, p.li_dt, p.li_T, p.li_scheme);
        const auto one = SpectralField::constant(g, 1.0);
        const auto base = run_spde(one, model, cfg, drv);
        std::vector<double> errors;
        for (int i = 0; i < p.li_dirs; ++i) {
            const auto v0 = random_mean_free(g, ctx.stream(5).split(static_cast<std::uint64_t>(i), purpose::initial_data), 2);
            const auto pert = run_spde(one + p.li_eps * v0, model, cfg, drv);
            const auto lin = run_linearized(v0, model, cfg, drv);
            const auto fd = (1.0 / p.li_eps) * (*pert.final_state - *base.final_state);
            errors.push_back(l2_norm(fd - *lin.final_state) / l2_norm(*lin.final_state));
            csv.row("linearization_relative_error", std::to_string(i), errors.back());
        }
        ctx.measurements["linearization"] = {{"relative_errors", errors}, {"eps", p.li_eps}, {"T", p.li_T},
                                             {"scheme", config::scheme_name(p.li_scheme)},
                                             {"seconds", seconds_since(t0)}};
    }

    // A9: conservation and invariance suite.
    t0 = std::chrono::steady_clock::now();
    {
        Json c;
        const auto basis = make_basis(model.noise);
        const auto drv = NoiseDriver::white(basis, ctx.stream(6), p.co_dt);
        double mass = 0.0, uniform = 0.0;
        for (Scheme s : {Scheme::ito_em, Scheme::ito_milstein, Scheme::strang}) {
            const auto tr = run_spde(bumpy_density(g), model, quick_config(g, p.co_dt, p.co_T, s), drv);
            for (const auto& smp : tr.samples) mass = std::max(mass, std::abs(smp.mass - 1.0));
            const auto un = run_spde(SpectralField::constant(g, 1.0), model, quick_config(g, p.co_dt, p.co_T, s), drv);
            const auto phys = to_physical(*un.final_state);
            for (double v : phys.values) uniform = std::max(uniform, std::abs(v - 1.0));
        }
        c["mass_defect"] = mass;
        c["uniform_defect"] = uniform;

        std::vector<double> pts(400);
        for (std::size_t i = 0; i < 200; ++i) std::tie(pts[2 * i], pts[2 * i + 1]) = ctx.stream(7).uniforms(0, i);
        FlowOptions opt;
        opt.track_jacobian = true;
        NoiseSpec flow_noise = model.noise;
        flow_noise.intensity = p.co_flow_K;
        const auto flow_drv = NoiseDriver::white(make_basis(flow_noise), ctx.stream(9), p.co_dt);
        const auto map = integrate_characteristics(flow_noise, flow_drv, pts, p.co_flow_T, opt);
        c["volume_defect"] = map.max_volume_defect();
        c["flow_dt"] = p.co_dt;
        c["flow_K"] = p.co_flow_K;

        double div = 0.0;
        for (std::uint64_t n = 0; n < 20; ++n) {
            const auto v = velocity_field(model.noise, basis, drv.increment(n), g);
            const double nv = l2_norm(v);
            if (nv > 0.0) div = std::max(div, l2_norm(divergence(v)) / nv);
        }
        c["divergence_relative"] = div;

        // Parseval and realness on random band-limited fields.
        double parseval = 0.0, realness = 0.0;
        for (std::uint64_t r = 0; r < 5; ++r) {
            auto u = random_mean_free(g, ctx.stream(8).split(r, purpose::initial_data), p.points / 3);
            u.at(0) = 0.7;
            const auto phys = to_physical(u);
            double ms = 0.0;
            for (double v : phys.values) ms += (v - 0.7) * (v - 0.7);
            ms /= static_cast<double>(phys.values.size());
            const double s0 = sobolev_norm(u, 0.0);
            parseval = std::max(parseval, std::abs(s0 * s0 - ms) / ms);
            for (const auto& f : {multiply(u, u), gradient(u), laplacian(u), multiply(u, gradient(u)), divergence(gradient(u))}) {
                realness = std::max(realness, f.symmetry_defect() / std::max(f.max_abs(), 1e-300));
            }
        }
        c["parseval_relative"] = parseval;
        c["realness_relative"] = realness;
        c["seconds"] = seconds_since(t0);
        for (const auto& [k, v] : c.items()) csv.row("conservation", k, v.get<double>());
        ctx.measurements["conservation"] = c;
    }
    ctx.write("convergence.csv", csv);
}

}  // namespace

const char* library_version() { return "1.0.0"; }

const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids{"acw", "mixing", "lyapunov", "ergodicity", "steady", "particles", "convergence"};
    return ids;
}

namespace {

// Parses the whole config; returns the resolved JSON and a runner bound to the typed plan.
std::pair<Json, std::function<void(Context&)>> plan(const std::string& experiment, const Json& raw) {
    if (std::find(experiment_ids().begin(), experiment_ids().end(), experiment) == experiment_ids().end()) {
        throw InputError("unknown experiment '" + experiment + "'");
    }
    Section top(raw, "");
    const std::string declared = top.text("experiment", experiment, experiment_ids());
    if (declared != experiment) {
        throw InputError("experiment: config is for '" + declared + "', not '" + experiment + "'");
    }
    top.integer("seed", 1, 0);
    std::function<void(Context&)> run;
    if (experiment == "acw") {
        auto p = parse_acw(top);
        run = [p](Context& c) { run_acw(p, c); };
    } else if (experiment == "mixing") {
        auto p = parse_mixing(top);
        run = [p](Context& c) { run_mixing(p, c); };
    } else if (experiment == "lyapunov") {
        auto p = parse_lyapunov(top);
        run = [p](Context& c) { run_lyapunov(p, c); };
    } else if (experiment == "ergodicity") {
        auto p = parse_ergodicity(top);
        run = [p](Context& c) { run_ergodicity(p, c); };
    } else if (experiment == "steady") {
        auto p = parse_steady(top);
        run = [p](Context& c) { run_steady(p, c); };
    } else if (experiment == "particles") {
        auto p = parse_particles(top);
        run = [p](Context& c) { run_particles(p, c); };
    } else {
        auto p = parse_convergence(top);
        run = [p](Context& c) { run_convergence(p, c); };
    }
    return {top.finish(), run};
}

}  // namespace

Json resolve_config(const std::string& experiment, const Json& raw) { return plan(experiment, raw).first; }

Json run_experiment(const std::string& experiment, const Json& cfg, const RunOptions& options) {
    Json raw = cfg.is_null() ? Json::object() : cfg;
    if (options.seed) raw["seed"] = *options.seed;
    auto [resolved, run] = plan(experiment, raw);
    Context ctx;
    ctx.id = experiment;
    ctx.seed = resolved["seed"].get<std::uint64_t>();
    ctx.workers = options.workers;
    ctx.out = options.out_dir;
    if (!ctx.out.empty()) fs::create_directories(ctx.out);

    const auto t0 = std::chrono::steady_clock::now();
    run(ctx);
    const double wall = seconds_since(t0);

    Json manifest;
    manifest["schema_version"] = kManifestSchemaVersion;
    manifest["library_version"] = library_version();
    manifest["experiment"] = experiment;
    manifest["config"] = resolved;
    manifest["derived"] = ctx.derived;
    manifest["measurements"] = ctx.measurements;
    manifest["files"] = ctx.files;
    manifest["wall_clock_seconds"] = wall;
    manifest["workers"] = options.workers > 0 ? options.workers : default_workers();
    Json criteria = Json::array();
    for (const auto& c : check_acceptance({manifest})) {
        if (c.status == "missing") continue;
        criteria.push_back({{"id", c.id}, {"status", c.status}, {"detail", c.detail}, {"measured", c.measured}});
    }
    manifest["criteria"] = criteria;
    if (!ctx.out.empty()) {
        const auto path = ctx.out / (experiment + "_manifest.json");
        std::ofstream f(path, std::ios::binary);
        if (!f) throw InputError("cannot write " + path.string());
        f << manifest.dump(2) << "\n";
    }
    return manifest;
}

Json load_json(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw InputError("cannot open " + path.string());
    try {
        return Json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

}  // namespace tnlab
