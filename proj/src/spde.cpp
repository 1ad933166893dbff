#include "tnlab/spde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "tnlab/errors.hpp"
#include "tnlab/fft.hpp"
#include "tnlab/meanfield.hpp"
#include "tnlab/spectral.hpp"

namespace tnlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t npos = static_cast<std::size_t>(-1);

enum class Kind { nonlinear, linear, transport };

std::vector<double> wave_squared(const TorusGrid& g) {
    std::vector<double> out(g.size());
    for (std::size_t f = 0; f < g.size(); ++f) out[f] = kTwoPi * kTwoPi * g.norm_squared(f);
    return out;
}

// exp(-|2 pi k|^2 (s (nu + W(k)) + kappa) h)
std::vector<double> decay_factors(const TorusGrid& g, double nu, const SpectralField* W, double s, double kappa,
                                  double h) {
    const auto k2 = wave_squared(g);
    std::vector<double> out(g.size());
    for (std::size_t f = 0; f < g.size(); ++f) {
        const double w = W ? W->at(f).real() : 0.0;
        out[f] = std::exp(-k2[f] * (s * (nu + w) + kappa) * h);
    }
    return out;
}

// div(delta grad(W * rho)) with delta = rho - mean, dealiased. Real fields are packed
// in pairs into complex transforms: d + 1 inputs and d products.
class Interaction {
public:
    Interaction(const TorusGrid& grid, const SpectralField& W) : grid_(grid), W_(&W), fft_(thread_transform(grid)) {
        const int d = grid.dim();
        wave_.resize(static_cast<std::size_t>(d) * grid.size());
        keep_.resize(grid.size());
        for (std::size_t f = 0; f < grid.size(); ++f) {
            auto k = grid.wavevector(f);
            for (int a = 0; a < d; ++a) wave_[a * grid.size() + f] = kTwoPi * k[a];
            keep_[f] = grid.in_dealias_band(f) && !grid.is_nyquist(f);
        }
        const std::size_t inputs = static_cast<std::size_t>(d + 1);
        physical_.assign((inputs + 1) / 2, std::vector<Complex>(grid.size()));
        spectral_.resize(grid.size());
    }

    SpectralField operator()(const SpectralField& rho) {
        const int d = grid_.dim();
        const std::size_t n = grid_.size();
        auto field = [&](int index, std::size_t f) -> Complex {
            if (index == 0) return f == 0 ? Complex{} : rho.at(f);
            return Complex(0.0, wave_[(index - 1) * n + f]) * W_->at(f) * rho.at(f);
        };
        for (std::size_t pair = 0; pair < physical_.size(); ++pair) {
            const int a = static_cast<int>(2 * pair), b = a + 1;
            for (std::size_t f = 0; f < n; ++f) {
                Complex z = field(a, f);
                if (b <= d) z += Complex(0.0, 1.0) * field(b, f);
                spectral_[f] = z;
            }
            fft_.backward(spectral_, physical_[pair]);
        }
        auto real_field = [&](int index, std::size_t i) {
            const Complex z = physical_[index / 2][i];
            return index % 2 == 0 ? z.real() : z.imag();
        };
        SpectralField out = SpectralField::scalar(grid_);
        std::vector<Complex> prod(n);
        for (int a = 0; a < d; a += 2) {
            const bool two = a + 1 < d;
            for (std::size_t i = 0; i < n; ++i) {
                const double delta = real_field(0, i);
                prod[i] = Complex(delta * real_field(a + 1, i), two ? delta * real_field(a + 2, i) : 0.0);
            }
            fft_.forward(prod, spectral_);
            for (std::size_t f = 0; f < n; ++f) {
                if (!keep_[f]) continue;
                const Complex p = spectral_[f];
                const Complex q = std::conj(spectral_[grid_.mirror(f)]);
                const Complex fa = 0.5 * (p + q);
                Complex acc = Complex(0.0, wave_[a * n + f]) * fa;
                if (two) {
                    const Complex fb = Complex(0.0, -0.5) * (p - q);
                    acc += Complex(0.0, wave_[(a + 1) * n + f]) * fb;
                }
                out.at(f) += acc;
            }
        }
        return out;
    }

private:
    TorusGrid grid_;
    const SpectralField* W_;
    FourierTransform& fft_;
    std::vector<double> wave_;
    std::vector<unsigned char> keep_;
    std::vector<std::vector<Complex>> physical_;
    std::vector<Complex> spectral_;
};

bool axis_aligned(std::span<const int> k, int& axis) {
    int count = 0;
    for (std::size_t a = 0; a < k.size(); ++a) {
        if (k[a] != 0) {
            axis = static_cast<int>(a);
            ++count;
        }
    }
    return count == 1;
}

// u <- u o phi^{-1} for one shear_split step, phi the step map of transport_flow.
class ExactTransport {
public:
    ExactTransport(const TorusGrid& grid, const ModeBasis& basis) : grid_(grid) {
        aligned_ = !basis.modes.empty();
        for (const auto& m : basis.modes) {
            int axis = 0;
            if (!axis_aligned(m.k, axis)) aligned_ = false;
        }
        if (aligned_) {
            for (int a = 0; a < grid.dim(); ++a) axes_.push_back(std::make_unique<AxisTransform>(grid, a));
        }
    }

    void apply(std::span<const VelocityMode> modes, SpectralField& u) {
        const double mean = u.mean();
        if (aligned_) {
            for (std::size_t p = 0; p < modes.size(); ++p) shear_stage(modes[p], u);
            for (std::size_t p = modes.size(); p-- > 0;) shear_stage(modes[p], u);
            u.enforce_symmetry();
            u = dealias(std::move(u));
        } else {
            auto points = grid_points(grid_);
            inverse_shear_step(modes, grid_.dim(), points);
            PhysicalField samples(grid_, 1);
            PointEvaluator(u).evaluate(points, samples.component(0));
            u = dealias(to_spectral(samples));
        }
        u.at(0) = mean;
    }

private:
    // v(x) <- v(x + Re(c e_k(x))): a translation orthogonal to the single axis of k.
    void shear_stage(const VelocityMode& m, SpectralField& u) {
        const int d = grid_.dim();
        const int M = grid_.points();
        int axis = 0;
        axis_aligned(std::span<const int>(m.k.data(), d), axis);
        auto& tr = *axes_[axis];
        auto buf = tr.buffer();
        std::copy(u.component(0).begin(), u.component(0).end(), buf.begin());
        tr.backward();
        // After the axis transform, position x_a = i / M replaces the wavenumber index along `axis`.
        std::size_t stride = 1;
        for (int b = axis + 1; b < d; ++b) stride *= static_cast<std::size_t>(M);
        const int ka = m.k[axis];
        const int half = M / 2;
        const std::size_t width = static_cast<std::size_t>(M) + 1;
        // powers_[(i d + b) width + j + M/2] = e^{2 pi i j delta_b(x_i)}
        powers_.resize(static_cast<std::size_t>(M) * d * width);
        for (int i = 0; i < M; ++i) {
            const double ph = kTwoPi * ka * i / M;
            const Complex e(std::cos(ph), std::sin(ph));
            for (int b = 0; b < d; ++b) {
                if (b == axis) continue;
                const double delta = kTwoPi * (m.c[b] * e).real();
                Complex* row = powers_.data() + (static_cast<std::size_t>(i) * d + b) * width + half;
                const Complex base(std::cos(delta), std::sin(delta));
                Complex acc = 1.0;
                row[0] = acc;
                for (int j = 1; j <= half; ++j) {
                    acc = j % 16 == 0 ? Complex(std::cos(j * delta), std::sin(j * delta)) : acc * base;
                    row[j] = acc;
                    row[-j] = std::conj(acc);
                }
            }
        }
        for (std::size_t f = 0; f < grid_.size(); ++f) {
            const std::size_t i = (f / stride) % static_cast<std::size_t>(M);
            auto k = grid_.wavevector(f);
            Complex factor = 1.0;
            for (int b = 0; b < d; ++b) {
                if (b != axis) factor *= powers_[(i * d + b) * width + half + k[b]];
            }
            buf[f] *= factor;
        }
        tr.forward();
        const double scale = 1.0 / M;
        auto out = u.component(0);
        for (std::size_t f = 0; f < grid_.size(); ++f) out[f] = buf[f] * scale;
    }

    TorusGrid grid_;
    bool aligned_ = false;
    std::vector<Complex> powers_;
    std::vector<std::unique_ptr<AxisTransform>> axes_;
};

void check_state(const SpectralField& u, double t, double cap, const char* who) {
    if (!u.all_finite()) {
        std::ostringstream os;
        os << who << ": non-finite state at t=" << t;
        throw SolverAbort(os.str());
    }
    const double n = l2_norm(u);
    if (n > cap) {
        std::ostringstream os;
        os << who << ": L2 norm " << n << " exceeds the cap " << cap << " at t=" << t;
        throw SolverAbort(os.str());
    }
}

// Shared time loop for the stochastic equations.
struct Problem {
    Kind kind = Kind::nonlinear;
    double nu = 0.0;
    const SpectralField* W = nullptr;
    const NoiseSpec* noise = nullptr;
    const char* who = "run_spde";
};

Sample make_sample(const SpectralField& u, double t, double log_scale, const Problem& pb, bool free) {
    Sample s;
    s.t = t;
    s.mass = u.mean();
    const auto phys = to_physical(u);
    s.min_value = *std::min_element(phys.values.begin(), phys.values.end());
    s.hm1 = sobolev_norm(u, -1.0);
    s.l2 = pb.kind == Kind::transport ? l2_norm(u) : sobolev_norm(u, 0.0);
    s.log_hm1 = std::log(s.hm1) + log_scale;
    s.log_l2 = std::log(s.l2) + log_scale;
    if (free && pb.kind == Kind::nonlinear) {
        try {
            s.free_energy = free_energy(u, pb.nu, *pb.W);
        } catch (const InputError&) {
            // Nonpositive density: the entropy is undefined, the sample keeps NaN.
        }
    }
    return s;
}

void check_driver(const NoiseDriver& driver, const NoiseSpec& spec, const SolverConfig& cfg, std::uint64_t steps,
                  const char* who) {
    if (driver.kind() == NoiseDriver::Kind::wong_zakai) {
        throw InputError(std::string(who) + ": Wong-Zakai drivers are integrated with run_controlled");
    }
    if (driver.basis().dim != spec.dim || driver.basis().modes.size() != make_basis(spec).modes.size()) {
        throw InputError(std::string(who) + ": driver basis does not match the noise spec");
    }
    if (std::abs(driver.dt() - cfg.dt) > 1e-12 * cfg.dt) {
        throw InputError(std::string(who) + ": driver step differs from the solver step");
    }
    if (driver.steps_available() != 0 && driver.steps_available() < steps) {
        throw InputError(std::string(who) + ": driver holds fewer increments than the horizon needs");
    }
}

Trajectory integrate(SpectralField u, const Problem& pb, const SolverConfig& cfg, const NoiseDriver& driver) {
    const auto& g = cfg.grid;
    const NoiseSpec& spec = *pb.noise;
    const std::uint64_t steps = step_count(cfg.T, cfg.dt);
    check_driver(driver, spec, cfg, steps, pb.who);
    const ModeBasis& basis = driver.basis();
    const double kappa = ito_corrector(spec);
    const double s = cfg.deterministic_scale;
    const double dt = cfg.dt;

    TransportOperator op(g, basis);
    std::optional<ExactTransport> exact;
    std::vector<double> full, half, k2;
    if (cfg.scheme == Scheme::strang) {
        exact.emplace(g, basis);
        half = decay_factors(g, pb.nu, pb.W, s, 0.0, 0.5 * dt);
    } else {
        full = decay_factors(g, pb.nu, pb.W, s, kappa, dt);
        k2 = wave_squared(g);
    }
    const bool nonlinear = pb.kind == Kind::nonlinear;
    std::optional<Interaction> inter;
    if (nonlinear) inter.emplace(g, *pb.W);

    auto half_step = [&](SpectralField& v) {
        if (pb.kind == Kind::transport) return;
        if (!nonlinear) {
            apply_multiplier(v, half);
            return;
        }
        const double h = 0.5 * dt;
        auto n0 = (*inter)(v);
        n0 *= s;
        SpectralField a = v + h * n0;
        apply_multiplier(a, half);
        auto n1 = (*inter)(a);
        n1 *= s;
        apply_multiplier(v, half);
        apply_multiplier(n0, half);
        v += (0.5 * h) * (n0 + n1);
    };

    Trajectory traj;
    double log_scale = 0.0;
    auto record = [&](double t) {
        traj.samples.push_back(make_sample(u, t, log_scale, pb, cfg.record_free_energy));
        if (cfg.record_fields) traj.fields.push_back(u);
    };
    record(0.0);

    SpectralField lu = SpectralField::scalar(g), llu = SpectralField::scalar(g);
    for (std::uint64_t n = 0; n < steps; ++n) {
        const auto incr = driver.increment(n);
        const auto modes = velocity_modes(spec, basis, incr.values);
        if (cfg.scheme == Scheme::strang) {
            half_step(u);
            exact->apply(modes, u);
            half_step(u);
        } else {
            op.apply(modes, u, lu);
            SpectralField next = u + lu;
            if (nonlinear) next += (dt * s) * (*inter)(u);
            if (cfg.scheme == Scheme::ito_milstein) {
                op.apply(modes, lu, llu);
                next += 0.5 * llu;
                // - kappa Lap(u) dt
                for (std::size_t f = 0; f < g.size(); ++f) next.at(f) += kappa * dt * k2[f] * u.at(f);
            }
            apply_multiplier(next, full);
            u = std::move(next);
        }
        const double t = (n + 1) * dt;
        check_state(u, t, cfg.blowup_cap, pb.who);
        if (cfg.renormalize_every > 0 && (n + 1) % cfg.renormalize_every == 0) {
            const double norm = l2_norm(u);
            if (norm > 0.0) {
                u *= 1.0 / norm;
                log_scale += std::log(norm);
                ++traj.renormalizations;
            }
        }
        if ((n + 1) % cfg.record_every == 0 || n + 1 == steps) record(t);
    }
    traj.log_scale = log_scale;
    traj.steps = steps;
    traj.final_state = std::move(u);
    return traj;
}

void check_initial(const SpectralField& u, const SolverConfig& cfg, const char* who) {
    if (!u.is_scalar()) throw InputError(std::string(who) + ": scalar initial datum required");
    if (u.grid() != cfg.grid) throw InputError(std::string(who) + ": initial datum is on a different grid");
    if (!u.all_finite()) throw InputError(std::string(who) + ": non-finite initial datum");
    if (u.symmetry_defect() > 1e-10 * std::max(1.0, u.max_abs())) {
        throw InputError(std::string(who) + ": initial datum is not real");
    }
}

void check_params(const ModelParams& params, const SolverConfig& cfg) {
    params.validate();
    cfg.validate();
    if (params.W.grid() != cfg.grid) throw InputError("solver: potential is on a different grid");
    if (params.noise.dim != cfg.grid.dim()) throw InputError("solver: noise dimension mismatch");
}

}  // namespace

void ModelParams::validate() const {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw InputError("ModelParams: nu must be positive and finite");
    if (!W.is_scalar()) throw InputError("ModelParams: W must be scalar");
    if (!W.all_finite()) throw InputError("ModelParams: non-finite potential");
    const double scale = std::max(1.0, W.max_abs());
    const auto& g = W.grid();
    for (std::size_t f = 0; f < g.size(); ++f) {
        if (std::abs(W.at(f).imag()) > 1e-12 * scale || std::abs(W.at(f) - W.at(g.mirror(f))) > 1e-12 * scale) {
            throw InputError("ModelParams: W must have real, even Fourier coefficients");
        }
    }
    make_basis(noise);
}

void SolverConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InputError("SolverConfig: dt must be positive");
    if (!(T >= 0.0) || !std::isfinite(T)) throw InputError("SolverConfig: T must be nonnegative");
    if (record_every < 1) throw InputError("SolverConfig: record_every must be >= 1");
    if (!(blowup_cap > 0.0)) throw InputError("SolverConfig: blowup_cap must be positive");
    if (renormalize_every < 0) throw InputError("SolverConfig: renormalize_every must be >= 0");
    if (!(deterministic_scale >= 0.0) || !std::isfinite(deterministic_scale)) {
        throw InputError("SolverConfig: deterministic_scale must be nonnegative");
    }
    step_count(T, dt);
}

TransportOperator::TransportOperator(const TorusGrid& grid, const ModeBasis& basis)
    : grid_(grid), modes_(basis.modes.size()) {
    if (basis.dim != grid.dim()) throw InputError("TransportOperator: dimension mismatch");
    const int d = grid.dim();
    for (const auto& m : basis.modes) {
        for (int v : m.k) {
            if (std::abs(v) > grid.dealias_cutoff()) {
                throw InputError("TransportOperator: noise truncation exceeds the dealiased band of the grid");
            }
        }
    }
    const double cost_fft = (2.0 * d + 1.0) * std::log2(static_cast<double>(grid.size()));
    sparse_ = 2.0 * static_cast<double>(modes_) <= cost_fft;
    if (!sparse_) return;
    shift_plus_.assign(modes_ * grid.size(), npos);
    shift_minus_.assign(modes_ * grid.size(), npos);
    std::vector<int> q(d);
    for (std::size_t p = 0; p < modes_; ++p) {
        const auto& kp = basis.modes[p].k;
        for (std::size_t f = 0; f < grid.size(); ++f) {
            if (!grid.in_dealias_band(f) || grid.is_nyquist(f)) continue;
            auto k = grid.wavevector(f);
            for (int sign : {1, -1}) {
                bool ok = true;
                for (int a = 0; a < d; ++a) {
                    q[a] = k[a] - sign * kp[a];
                    if (std::abs(q[a]) > grid.dealias_cutoff()) ok = false;
                }
                if (!ok) continue;
                (sign == 1 ? shift_plus_ : shift_minus_)[p * grid.size() + f] = grid.flat_index(q);
            }
        }
    }
    band_.clear();
    for (std::size_t f = 0; f < grid.size(); ++f) {
        if (grid.in_dealias_band(f) && !grid.is_nyquist(f)) band_.push_back(f);
    }
    wavevectors_.reserve(modes_ * d);
    for (const auto& m : basis.modes) wavevectors_.insert(wavevectors_.end(), m.k.begin(), m.k.end());
}

void TransportOperator::apply(std::span<const VelocityMode> modes, const SpectralField& u, SpectralField& out) const {
    const int d = grid_.dim();
    bool match = sparse_ && modes.size() == modes_;
    for (std::size_t p = 0; match && p < modes.size(); ++p) {
        for (int a = 0; a < d; ++a) {
            if (modes[p].k[a] != wavevectors_[p * d + a]) match = false;
        }
    }
    if (!match) {
        apply_fft(modes, u, out);
        return;
    }
    if (u.grid() != grid_ || !u.is_scalar()) throw InputError("TransportOperator: field does not match the grid");
    if (out.grid() != grid_ || !out.is_scalar()) out = SpectralField::scalar(grid_);
    std::fill(out.data().begin(), out.data().end(), Complex{});
    const std::size_t n = grid_.size();
    const Complex two_pi_i(0.0, kTwoPi);
    for (std::size_t p = 0; p < modes_; ++p) {
        const auto& c = modes[p].c;
        const std::size_t* plus = shift_plus_.data() + p * n;
        const std::size_t* minus = shift_minus_.data() + p * n;
        for (std::size_t f : band_) {
            auto k = grid_.wavevector(f);
            Complex ck{};
            for (int a = 0; a < d; ++a) ck += c[a] * static_cast<double>(k[a]);
            Complex acc{};
            if (plus[f] != npos) acc += ck * u.at(plus[f]);
            if (minus[f] != npos) acc += std::conj(ck) * u.at(minus[f]);
            out.at(f) += two_pi_i * acc;
        }
    }
}

void TransportOperator::apply_fft(std::span<const VelocityMode> modes, const SpectralField& u,
                                  SpectralField& out) const {
    if (u.grid() != grid_ || !u.is_scalar()) throw InputError("TransportOperator: field does not match the grid");
    const int d = grid_.dim();
    SpectralField V = SpectralField::vector(grid_);
    for (const auto& m : modes) {
        std::span<const int> k(m.k.data(), d);
        if (!grid_.contains(k)) throw InputError("TransportOperator: velocity mode outside the grid");
        const std::size_t f = grid_.flat_index(k);
        const std::size_t g = grid_.mirror(f);
        for (int a = 0; a < d; ++a) {
            V.at(f, a) += m.c[a];
            V.at(g, a) += std::conj(m.c[a]);
        }
    }
    out = divergence(multiply(u, V));
}

double ito_corrector(const NoiseSpec& spec) { return spec.intensity * spec.intensity * covariance_scalar(spec); }

Trajectory run_spde(const SpectralField& rho0, const ModelParams& params, const SolverConfig& cfg,
                    const NoiseDriver& driver) {
    check_params(params, cfg);
    check_initial(rho0, cfg, "run_spde");
    if (std::abs(rho0.mean() - 1.0) > 1e-10) throw InputError("run_spde: initial density must have mean 1");
    if (cfg.renormalize_every != 0) throw InputError("run_spde: renormalization applies to linear equations only");
    SpectralField u = dealias(rho0);
    u.enforce_symmetry();
    u.at(0) = 1.0;
    Problem pb{Kind::nonlinear, params.nu, &params.W, &params.noise, "run_spde"};
    return integrate(std::move(u), pb, cfg, driver);
}

Trajectory run_linearized(const SpectralField& v0, const ModelParams& params, const SolverConfig& cfg,
                          const NoiseDriver& driver) {
    check_params(params, cfg);
    check_initial(v0, cfg, "run_linearized");
    if (std::abs(v0.mean()) > 1e-12) throw InputError("run_linearized: initial perturbation must be mean-free");
    SpectralField u = dealias(v0);
    u.enforce_symmetry();
    u.at(0) = 0.0;
    Problem pb{Kind::linear, params.nu, &params.W, &params.noise, "run_linearized"};
    return integrate(std::move(u), pb, cfg, driver);
}

Trajectory run_pure_transport(const SpectralField& u0, const NoiseSpec& spec, const SolverConfig& cfg,
                              const NoiseDriver& driver) {
    cfg.validate();
    make_basis(spec);
    if (spec.dim != cfg.grid.dim()) throw InputError("run_pure_transport: noise dimension mismatch");
    check_initial(u0, cfg, "run_pure_transport");
    SpectralField u = dealias(u0);
    u.enforce_symmetry();
    Problem pb{Kind::transport, 0.0, nullptr, &spec, "run_pure_transport"};
    return integrate(std::move(u), pb, cfg, driver);
}

ControlPath wong_zakai_control(const NoiseSpec& spec, const ModeBasis& basis,
                               std::shared_ptr<const WongZakaiPath> path) {
    if (!path) throw InputError("wong_zakai_control: null path");
    return [spec, basis, path](double t) {
        const int seg = std::clamp(path->segment_of(t), 0, path->segments() - 1);
        const auto slope = path->slope(seg);
        return velocity_modes(spec, basis, slope);
    };
}

namespace {

// Integrating-factor RK4 (Lawson) for d rho/dt = A rho + F(t, rho) with diagonal A.
Trajectory controlled_core(SpectralField u, const Problem& pb, const ControlPath& control, const SolverConfig& cfg,
                           const ModeBasis& basis) {
    const auto& g = cfg.grid;
    const std::uint64_t steps = step_count(cfg.T, cfg.dt);
    const double s = cfg.deterministic_scale;
    const double h = cfg.dt;
    const auto e_half = decay_factors(g, pb.nu, pb.W, s, 0.0, 0.5 * h);
    const auto e_full = decay_factors(g, pb.nu, pb.W, s, 0.0, h);
    TransportOperator op(g, basis);
    SpectralField tmp = SpectralField::scalar(g);
    std::optional<Interaction> inter;
    if (pb.kind == Kind::nonlinear) inter.emplace(g, *pb.W);

    auto rhs = [&](double t, const SpectralField& v) {
        const auto modes = control(t);
        op.apply(modes, v, tmp);
        SpectralField out = tmp;
        if (inter) out += s * (*inter)(v);
        return out;
    };
    auto scaled = [](SpectralField v, const std::vector<double>& e) {
        apply_multiplier(v, e);
        return v;
    };

    Trajectory traj;
    auto record = [&](double t) {
        traj.samples.push_back(make_sample(u, t, 0.0, pb, cfg.record_free_energy));
        if (cfg.record_fields) traj.fields.push_back(u);
    };
    record(0.0);
    for (std::uint64_t n = 0; n < steps; ++n) {
        const double t = n * h;
        // The endpoint stage is taken just inside the step, so a control that is
        // constant on step-aligned segments is never read from the next segment.
        const double t_end = t + h * (1.0 - 1e-9);
        const auto k1 = rhs(t, u);
        const auto k2 = rhs(t + 0.5 * h, scaled(u + (0.5 * h) * k1, e_half));
        const auto k3 = rhs(t + 0.5 * h, scaled(u, e_half) + (0.5 * h) * k2);
        const auto k4 = rhs(t_end, scaled(u, e_full) + h * scaled(k3, e_half));
        SpectralField next = scaled(u, e_full);
        next += (h / 6.0) * (scaled(k1, e_full) + 2.0 * scaled(k2 + k3, e_half) + k4);
        next.at(0) = u.at(0);
        u = std::move(next);
        check_state(u, t + h, cfg.blowup_cap, pb.who);
        if ((n + 1) % cfg.record_every == 0 || n + 1 == steps) record((n + 1) * h);
    }
    traj.steps = steps;
    traj.final_state = std::move(u);
    return traj;
}

}  // namespace

Trajectory run_controlled(const SpectralField& rho0, const ModelParams& params, const ControlPath& control,
                          const SolverConfig& cfg) {
    check_params(params, cfg);
    check_initial(rho0, cfg, "run_controlled");
    if (!control) throw InputError("run_controlled: empty control");
    SpectralField u = dealias(rho0);
    u.enforce_symmetry();
    Problem pb{Kind::nonlinear, params.nu, &params.W, &params.noise, "run_controlled"};
    return controlled_core(std::move(u), pb, control, cfg, make_basis(params.noise));
}

MixerResult extract_mixer(const SpectralField& u0, const NoiseSpec& spec, const SolverConfig& cfg, int level,
                          int candidates, double delta, const RngStream& stream) {
    cfg.validate();
    check_initial(u0, cfg, "extract_mixer");
    if (candidates < 1) throw InputError("extract_mixer: need at least one candidate");
    if (!(delta > 0.0)) throw InputError("extract_mixer: delta must be positive");
    const auto basis = make_basis(spec);
    SpectralField u = dealias(u0);
    u.enforce_symmetry();
    Problem pb{Kind::transport, 0.0, nullptr, &spec, "extract_mixer"};
    MixerResult r;
    double best = std::numeric_limits<double>::infinity();
    for (int c = 0; c < candidates; ++c) {
        auto path = std::make_shared<const WongZakaiPath>(basis, cfg.T, level,
                                                          stream.split(static_cast<std::uint64_t>(c), purpose::common_noise),
                                                          level);
        auto traj = controlled_core(u, pb, wong_zakai_control(spec, basis, path), cfg, basis);
        const double achieved = traj.samples.back().hm1;
        r.tried.push_back(achieved);
        if (achieved < best) {
            best = achieved;
            r.candidate = c;
        }
        if (achieved < delta) {
            r.found = true;
            break;
        }
    }
    r.achieved = best;
    return r;
}

}  // namespace tnlab
