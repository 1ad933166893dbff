#include "tnlab/lyapunov.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "tnlab/errors.hpp"
#include "tnlab/parallel.hpp"
#include "tnlab/spectral.hpp"

namespace tnlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// One renormalization window of Heun steps; returns log |X(end)| with X(start) unit.
double acw_window(const AcwSystem& sys, std::array<double, 2>& x, double dt, std::uint64_t steps,
                  const RngStream& rng, std::uint64_t& counter) {
    const double g = std::sqrt(2.0) * sys.K;
    const double sdt = std::sqrt(dt);
    // Strang splitting: exact half-step of the diagonal drift, exact rotation by the noise.
    const double ea = std::exp(0.5 * sys.a * dt), eb = std::exp(0.5 * sys.b * dt);
    double z[2] = {0.0, 0.0};
    for (std::uint64_t n = 0; n < steps; ++n) {
        if ((counter & 1) == 0) {
            auto [u, v] = rng.normals(counter >> 1, 0);
            z[0] = u;
            z[1] = v;
        }
        const double w = g * sdt * z[counter & 1];
        ++counter;
        const double c = std::cos(w), s = std::sin(w);
        const double y0 = ea * x[0], y1 = eb * x[1];
        x[0] = ea * (c * y0 + s * y1);
        x[1] = eb * (c * y1 - s * y0);
    }
    const double r = std::hypot(x[0], x[1]);
    x[0] /= r;
    x[1] /= r;
    return std::log(r);
}

}  // namespace

std::pair<double, double> mean_stderr(const std::vector<double>& xs) {
    if (xs.empty()) return {std::nan(""), std::nan("")};
    double m = 0.0;
    for (double x : xs) m += x;
    m /= static_cast<double>(xs.size());
    if (xs.size() < 2) return {m, 0.0};
    double v = 0.0;
    for (double x : xs) v += (x - m) * (x - m);
    v /= static_cast<double>(xs.size() - 1);
    return {m, std::sqrt(v / static_cast<double>(xs.size()))};
}

double acw_default_dt(double K) { return 1e-3 * std::min(1.0, 1.0 / (K * K)); }

LyapunovEstimate acw_simulate(const AcwSystem& sys, const AcwOptions& options, const RngStream& rng) {
    if (!std::isfinite(sys.a) || !std::isfinite(sys.b) || !std::isfinite(sys.K) || sys.K < 0.0) {
        throw InputError("acw_simulate: a, b must be finite and K >= 0");
    }
    if (!(options.T > 0.0) || options.ensemble == 0) throw InputError("acw_simulate: need T > 0 and a nonempty ensemble");
    const double dt = options.dt > 0.0 ? options.dt : acw_default_dt(sys.K);
    const std::uint64_t per_unit = static_cast<std::uint64_t>(std::llround(1.0 / dt));
    if (std::abs(per_unit * dt - 1.0) > 1e-9) throw InputError("acw_simulate: dt must divide the unit renormalization time");
    const std::uint64_t windows = static_cast<std::uint64_t>(std::llround(options.T));
    if (std::abs(double(windows) - options.T) > 1e-9) throw InputError("acw_simulate: T must be a whole number of time units");

    LyapunovEstimate est;
    est.horizon = options.T;
    est.ensemble = options.ensemble;
    est.members.assign(options.ensemble, 0.0);
    parallel_each(
        options.ensemble,
        [&](std::size_t i) {
            const RngStream member = rng.split(i, purpose::acw);
            std::array<double, 2> x{1.0, 0.0};
            if (options.x0) {
                x = *options.x0;
                const double r = std::hypot(x[0], x[1]);
                if (!(r > 0.0)) throw InputError("acw_simulate: zero initial vector");
                x[0] /= r;
                x[1] /= r;
            } else {
                // Angle from the initial-data purpose keeps the Brownian stream untouched.
                const double psi = kTwoPi * rng.split(i, purpose::initial_data).uniforms(0, 0).first;
                x = {std::cos(psi), std::sin(psi)};
            }
            std::uint64_t counter = 0;
            double total = 0.0;
            for (std::uint64_t w = 0; w < windows; ++w) total += acw_window(sys, x, dt, per_unit, member, counter);
            est.members[i] = total / options.T;
        },
        options.workers);
    est.renormalizations = windows * options.ensemble;
    std::tie(est.value, est.std_error) = mean_stderr(est.members);
    return est;
}

double acw_fk_quadrature(const AcwSystem& sys, int angular_resolution) {
    if (!(sys.K > 0.0)) throw InputError("acw_fk_quadrature: K must be positive");
    if (angular_resolution < 8) throw InputError("acw_fk_quadrature: resolution too small");
    const double c = (sys.a - sys.b) / (4.0 * sys.K * sys.K);
    // Shift the exponent by |c| so the weights stay bounded for small K.
    double num = 0.0, den = 0.0;
    for (int i = 0; i < angular_resolution; ++i) {
        const double psi = kTwoPi * i / angular_resolution;
        const double w = std::exp(c * std::cos(2.0 * psi) - std::abs(c));
        const double cs = std::cos(psi), sn = std::sin(psi);
        num += w * (sys.a * cs * cs + sys.b * sn * sn);
        den += w;
    }
    return num / den;
}

SpectralField random_mean_free(const TorusGrid& grid, const RngStream& rng, int kmax) {
    auto v = SpectralField::scalar(grid);
    std::uint64_t index = 0;
    for (std::size_t f = 1; f < grid.size(); ++f) {
        if (grid.is_nyquist(f) || grid.norm_squared(f) > kmax * kmax) continue;
        auto k = grid.wavevector(f);
        std::vector<int> kv(k.begin(), k.end());
        if (!is_primary(kv)) continue;
        auto [x, y] = rng.normals(0, index++);
        v.set_mode(kv, Complex(x, y));
    }
    v = dealias(v);
    const double n = l2_norm(v);
    if (!(n > 0.0)) throw InputError("random_mean_free: no admissible modes");
    v *= 1.0 / n;
    return v;
}

SpdeLyapunovResult spde_top_lyapunov(const ModelParams& params, const SpdeLyapunovOptions& options,
                                     const RngStream& stream) {
    params.validate();
    options.solver.validate();
    if (options.ensemble == 0) throw InputError("spde_top_lyapunov: empty ensemble");
    const double ratio = options.tau / options.solver.dt;
    const auto per_tau = static_cast<int>(std::llround(ratio));
    if (per_tau < 1 || std::abs(ratio - per_tau) > 1e-9 * ratio) {
        throw InputError("spde_top_lyapunov: tau must be a positive multiple of dt");
    }
    SolverConfig cfg = options.solver;
    cfg.renormalize_every = per_tau;
    cfg.record_every = std::max(cfg.record_every, per_tau);
    // The equation is linear and renormalized: only non-finite states abort.
    cfg.blowup_cap = std::numeric_limits<double>::max();
    const auto basis = make_basis(params.noise);

    SpdeLyapunovResult out;
    auto& est = out.estimate;
    est.horizon = cfg.T;
    est.ensemble = options.ensemble;
    est.members.assign(options.ensemble, 0.0);
    std::vector<std::uint64_t> renorms(options.ensemble, 0);
    parallel_each(
        options.ensemble,
        [&](std::size_t i) {
            auto v0 = random_mean_free(cfg.grid, stream.split(i, purpose::initial_data));
            auto driver = NoiseDriver::white(basis, stream.split(i, purpose::common_noise), cfg.dt);
            auto tr = run_linearized(v0, params, cfg, driver);
            est.members[i] = tr.samples.back().log_l2 / cfg.T;
            renorms[i] = tr.renormalizations;
        },
        options.workers);
    for (auto r : renorms) est.renormalizations += r;
    std::tie(est.value, est.std_error) = mean_stderr(est.members);

    out.report = stability_report(params.W, params.nu, params.noise);
    out.bound = lyapunov_bound(out.report, params.noise.intensity);
    return out;
}

}  // namespace tnlab
