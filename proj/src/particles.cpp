#include "tnlab/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "tnlab/errors.hpp"
#include "tnlab/parallel.hpp"
#include "tnlab/spectral.hpp"

namespace tnlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Complex unit(double phase) { return {std::cos(phase), std::sin(phase)}; }

// Solves F(x) = u on [0, 1] for the normalized CDF of sum_m c_m e^{2 pi i m x}.
double invert_cdf(const std::vector<std::pair<int, Complex>>& c, double c0, double u) {
    auto cdf = [&](double x) {
        double F = c0 * x;
        for (const auto& [m, cm] : c) F += (cm * (unit(kTwoPi * m * x) - 1.0) / Complex(0.0, kTwoPi * m)).real();
        return F / c0;
    };
    auto pdf = [&](double x) {
        double p = c0;
        for (const auto& [m, cm] : c) p += (cm * unit(kTwoPi * m * x)).real();
        return p / c0;
    };
    double lo = 0.0, hi = 1.0, x = u;
    for (int it = 0; it < 100; ++it) {
        const double r = cdf(x) - u;
        if (std::abs(r) < 1e-14) break;
        if (r > 0) hi = x; else lo = x;
        const double p = pdf(x);
        double next = p > 0.0 ? x - r / p : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        x = next;
        if (hi - lo < 1e-15) break;
    }
    return x;
}

}  // namespace

ParticleEnsemble draw_particles(const SpectralField& density, std::size_t N, const RngStream& rng,
                                const RngStream& idiosyncratic) {
    if (!density.is_scalar()) throw InputError("draw_particles: scalar density required");
    if (N == 0) throw InputError("draw_particles: N must be positive");
    const auto& g = density.grid();
    const int d = g.dim();
    const auto phys = to_physical(density);
    if (*std::min_element(phys.values.begin(), phys.values.end()) <= 0.0) {
        throw InputError("draw_particles: density must be positive");
    }
    // Coefficients grouped by the last nonzero coordinate: level j holds k with k_{j+1..} = 0.
    std::vector<std::vector<std::pair<std::vector<int>, Complex>>> level(d);
    for (std::size_t f = 0; f < g.size(); ++f) {
        const Complex v = density.at(f);
        if (std::abs(v) == 0.0) continue;
        auto kk = g.wavevector(f);
        std::vector<int> k(kk.begin(), kk.end());
        int last = 0;
        for (int a = 0; a < d; ++a) if (k[a] != 0) last = a;
        for (int j = last; j < d; ++j) level[j].emplace_back(k, v);
    }
    ParticleEnsemble ens;
    ens.dim = d;
    ens.idiosyncratic = idiosyncratic;
    ens.positions.assign(N * d, 0.0);
    parallel_for(N, [&](std::size_t begin, std::size_t end) {
        std::vector<std::pair<int, Complex>> coeffs;
        for (std::size_t i = begin; i < end; ++i) {
            double* x = ens.positions.data() + i * d;
            for (int j = 0; j < d; ++j) {
                // Marginal of (x_1..x_j) restricted to x_1..x_{j-1} already drawn.
                coeffs.clear();
                Complex c0{};
                for (const auto& [k, v] : level[j]) {
                    double phase = 0.0;
                    for (int a = 0; a < j; ++a) phase += k[a] * x[a];
                    const Complex c = v * unit(kTwoPi * phase);
                    if (k[j] == 0) {
                        c0 += c;
                        continue;
                    }
                    auto it = std::find_if(coeffs.begin(), coeffs.end(), [&](const auto& p) { return p.first == k[j]; });
                    if (it == coeffs.end()) coeffs.emplace_back(k[j], c); else it->second += c;
                }
                const double u = rng.uniforms(i, static_cast<std::uint64_t>(j)).first;
                x[j] = invert_cdf(coeffs, c0.real(), u);
            }
        }
    });
    wrap_points(ens.positions);
    return ens;
}

std::vector<std::vector<int>> low_modes(int dim, double kmax) {
    const int r = static_cast<int>(std::floor(kmax));
    std::vector<std::vector<int>> out{std::vector<int>(dim, 0)};
    std::vector<int> k(dim, -r);
    while (true) {
        int n2 = 0;
        bool zero = true;
        for (int v : k) {
            n2 += v * v;
            zero = zero && v == 0;
        }
        if (!zero && n2 <= kmax * kmax + 1e-12) out.push_back(k);
        int a = 0;
        while (a < dim && ++k[a] > r) k[a++] = -r;
        if (a == dim) break;
    }
    return out;
}

ModeTable empirical_modes(std::span<const double> positions, int dim, double kmax) {
    ModeTable t;
    t.dim = dim;
    t.k = low_modes(dim, kmax);
    t.values.assign(t.k.size(), Complex{});
    const std::size_t N = positions.size() / dim;
    if (N == 0) return t;
    for (std::size_t i = 0; i < N; ++i) {
        const double* x = positions.data() + i * dim;
        for (std::size_t m = 0; m < t.k.size(); ++m) {
            double phase = 0.0;
            for (int a = 0; a < dim; ++a) phase += t.k[m][a] * x[a];
            t.values[m] += unit(-kTwoPi * phase);
        }
    }
    for (auto& v : t.values) v /= static_cast<double>(N);
    t.values[0] = 1.0;
    return t;
}

ModeForce::ModeForce(const SpectralField& W) : dim_(W.grid().dim()) {
    if (!W.is_scalar()) throw InputError("ModeForce: scalar potential required");
    const auto& g = W.grid();
    for (std::size_t f = 1; f < g.size(); ++f) {
        if (std::abs(W.at(f)) == 0.0) continue;
        auto k = g.wavevector(f);
        k_.emplace_back(k.begin(), k.end());
        w_.push_back(W.at(f).real());
    }
    mu_.assign(k_.size(), Complex{});
}

void ModeForce::update(std::span<const double> positions) {
    const std::size_t N = positions.size() / dim_;
    std::fill(mu_.begin(), mu_.end(), Complex{});
    for (std::size_t i = 0; i < N; ++i) {
        const double* x = positions.data() + i * dim_;
        for (std::size_t m = 0; m < k_.size(); ++m) {
            double phase = 0.0;
            for (int a = 0; a < dim_; ++a) phase += k_[m][a] * x[a];
            mu_[m] += unit(-kTwoPi * phase);
        }
    }
    for (auto& v : mu_) v /= static_cast<double>(N);
}

void ModeForce::evaluate(std::span<const double> x, std::span<double> out) const {
    // -grad (W * mu)(x) = -sum_k 2 pi i k W(k) mu(k) e_k(x). The j = i term is grad W(0) = 0.
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t m = 0; m < k_.size(); ++m) {
        double phase = 0.0;
        for (int a = 0; a < dim_; ++a) phase += k_[m][a] * x[a];
        const Complex s = Complex(0.0, -kTwoPi) * w_[m] * mu_[m] * unit(kTwoPi * phase);
        for (int a = 0; a < dim_; ++a) out[a] += k_[m][a] * s.real();
    }
}

ParticleTrajectory simulate_particles(ParticleEnsemble& ens, const ModelParams& params, const ParticleConfig& config,
                                      const NoiseDriver& common) {
    // nu = 0 is allowed here: the particle system is defined without diffusion.
    if (params.nu == 0.0) {
        ModelParams check = params;
        check.nu = 1.0;
        check.validate();
    } else {
        params.validate();
    }
    const int d = ens.dim;
    if (params.W.grid().dim() != d || params.noise.dim != d) throw InputError("simulate_particles: dimension mismatch");
    if (ens.size() == 0) throw InputError("simulate_particles: empty ensemble");
    if (config.record_every < 1) throw InputError("simulate_particles: record_every must be positive");
    if (common.kind() == NoiseDriver::Kind::wong_zakai) throw InputError("simulate_particles: white or recorded driver required");
    if (std::abs(common.dt() - config.dt) > 1e-12 * config.dt) throw InputError("simulate_particles: driver dt differs from config dt");
    if (common.basis().modes.size() != make_basis(params.noise).modes.size()) {
        throw InputError("simulate_particles: driver basis does not match the noise spec");
    }
    const std::uint64_t steps = step_count(config.T, config.dt);
    if (common.steps_available() != 0 && common.steps_available() < steps) {
        throw InputError("simulate_particles: recorded driver is too short");
    }
    const std::size_t N = ens.size();
    const double kick = std::sqrt(2.0 * params.nu * config.dt);
    const int pairs = (d + 1) / 2;
    ModeForce force(params.W);

    ParticleTrajectory out;
    out.common_stream = common.stream();
    out.common_dt = common.dt();
    auto record = [&](double t) {
        out.times.push_back(t);
        out.modes.push_back(empirical_modes(ens.positions, d, config.kmax));
    };
    record(0.0);
    for (std::uint64_t n = 0; n < steps; ++n) {
        if (force.modes() > 0) force.update(ens.positions);
        parallel_for(N, [&](std::size_t begin, std::size_t end) {
            double F[kMaxDim];
            double z[kMaxDim + 1];
            for (std::size_t i = begin; i < end; ++i) {
                std::span<double> x(ens.positions.data() + i * d, static_cast<std::size_t>(d));
                if (force.modes() > 0) force.evaluate(x, {F, static_cast<std::size_t>(d)});
                else std::fill(F, F + d, 0.0);
                for (int p = 0; p < pairs; ++p) {
                    auto [a, b] = ens.idiosyncratic.normals(n, i * pairs + p);
                    z[2 * p] = a;
                    z[2 * p + 1] = b;
                }
                for (int a = 0; a < d; ++a) x[a] += F[a] * config.dt + kick * z[a];
            }
        }, config.workers);
        const auto inc = common.increment(n);
        const auto modes = velocity_modes(params.noise, common.basis(), inc.values);
        parallel_for(N, [&](std::size_t begin, std::size_t end) {
            flow_step(modes, d, config.common_scheme, std::span<double>(ens.positions.data() + begin * d, (end - begin) * d));
        }, config.workers);
        wrap_points(ens.positions);
        if (!std::all_of(ens.positions.begin(), ens.positions.end(), [](double v) { return std::isfinite(v); })) {
            throw SolverAbort("simulate_particles: non-finite position at t=" + std::to_string((n + 1) * config.dt));
        }
        if ((n + 1) % config.record_every == 0 || n + 1 == steps) record((n + 1) * config.dt);
    }
    return out;
}

ParticleComparison compare_to_spde(const ParticleTrajectory& particles, const Trajectory& spde,
                                   const NoiseDriver& spde_driver) {
    if (!(spde_driver.stream() == particles.common_stream) ||
        std::abs(spde_driver.dt() - particles.common_dt) > 1e-12 * particles.common_dt) {
        throw InputError("compare_to_spde: the runs do not share the common noise");
    }
    if (spde.fields.size() != spde.samples.size()) throw InputError("compare_to_spde: SPDE fields were not recorded");
    ParticleComparison c;
    for (std::size_t s = 0; s < particles.times.size(); ++s) {
        const double t = particles.times[s];
        auto it = std::find_if(spde.samples.begin(), spde.samples.end(),
                               [&](const Sample& smp) { return std::abs(smp.t - t) <= 1e-9 * std::max(1.0, t); });
        if (it == spde.samples.end()) throw InputError("compare_to_spde: no SPDE sample at a particle sample time");
        const auto& field = spde.fields[static_cast<std::size_t>(it - spde.samples.begin())];
        const auto& table = particles.modes[s];
        double worst = 0.0;
        for (std::size_t m = 1; m < table.k.size(); ++m) {
            worst = std::max(worst, std::abs(table.values[m] - field.coefficient(std::span<const int>(table.k[m]))));
        }
        c.times.push_back(t);
        c.per_sample.push_back(worst);
        c.max_error = std::max(c.max_error, worst);
    }
    return c;
}

}  // namespace tnlab
