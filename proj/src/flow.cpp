#include "tnlab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tnlab/errors.hpp"
#include "tnlab/parallel.hpp"
#include "tnlab/spectral.hpp"

namespace tnlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double phase_of(const VelocityMode& m, const double* x, int dim) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) s += m.k[a] * x[a];
    return kTwoPi * s;
}

// V(x) = sum_p 2 Re(c_p e_k(x)); optionally DV(x) row-major.
void evaluate_velocity(std::span<const VelocityMode> modes, int dim, const double* x, double* v, double* dv) {
    std::fill(v, v + dim, 0.0);
    if (dv) std::fill(dv, dv + dim * dim, 0.0);
    for (const auto& m : modes) {
        const double ph = phase_of(m, x, dim);
        const double c = std::cos(ph), s = std::sin(ph);
        for (int a = 0; a < dim; ++a) {
            const double re = m.c[a].real(), im = m.c[a].imag();
            v[a] += 2.0 * (re * c - im * s);
            if (dv) {
                // d/dx_b 2 Re(c e) = 2 Re(2 pi i k_b c e) = -2 * 2pi k_b (re s + im c)
                const double g = -2.0 * kTwoPi * (re * s + im * c);
                for (int b = 0; b < dim; ++b) dv[a * dim + b] += g * m.k[b];
            }
        }
    }
}

// x <- x - sign * weight * 2 Re(c e_k(x)); k.x is invariant so the update is exact.
void shear(const VelocityMode& m, int dim, double weight, double* x, double* jac, double* det) {
    const double ph = phase_of(m, x, dim);
    const double c = std::cos(ph), s = std::sin(ph);
    double u[kMaxDim];
    double ku = 0.0;
    for (int a = 0; a < dim; ++a) {
        const double re = m.c[a].real(), im = m.c[a].imag();
        x[a] -= weight * 2.0 * (re * c - im * s);
        u[a] = -weight * 2.0 * kTwoPi * (re * s + im * c);
        ku += m.k[a] * u[a];
    }
    if (jac) {
        // D = I - u k^T; J <- D J.
        double kj[kMaxDim];
        for (int b = 0; b < dim; ++b) {
            kj[b] = 0.0;
            for (int a = 0; a < dim; ++a) kj[b] += m.k[a] * jac[a * dim + b];
        }
        for (int a = 0; a < dim; ++a) {
            for (int b = 0; b < dim; ++b) jac[a * dim + b] -= u[a] * kj[b];
        }
    }
    if (det) *det *= 1.0 - ku;
}

double small_determinant(const double* m, int dim) {
    double a[kMaxDim * kMaxDim];
    std::copy(m, m + dim * dim, a);
    double det = 1.0;
    for (int col = 0; col < dim; ++col) {
        int piv = col;
        for (int r = col + 1; r < dim; ++r) {
            if (std::abs(a[r * dim + col]) > std::abs(a[piv * dim + col])) piv = r;
        }
        if (a[piv * dim + col] == 0.0) return 0.0;
        if (piv != col) {
            for (int b = 0; b < dim; ++b) std::swap(a[piv * dim + b], a[col * dim + b]);
            det = -det;
        }
        det *= a[col * dim + col];
        for (int r = col + 1; r < dim; ++r) {
            const double f = a[r * dim + col] / a[col * dim + col];
            for (int b = col; b < dim; ++b) a[r * dim + b] -= f * a[col * dim + b];
        }
    }
    return det;
}

void left_multiply(const double* step, double* jac, int dim) {
    double out[kMaxDim * kMaxDim] = {};
    for (int a = 0; a < dim; ++a) {
        for (int c = 0; c < dim; ++c) {
            for (int b = 0; b < dim; ++b) out[a * dim + b] += step[a * dim + c] * jac[c * dim + b];
        }
    }
    std::copy(out, out + dim * dim, jac);
}

void identity(double* m, int dim) {
    std::fill(m, m + dim * dim, 0.0);
    for (int a = 0; a < dim; ++a) m[a * dim + a] = 1.0;
}

void check_finite(std::span<const double> points) {
    for (double v : points) {
        if (!std::isfinite(v)) throw SolverAbort("characteristics: non-finite position");
    }
}

// One RK4 step of x' = -V(x), J' = -DV(x) J with J starting at the identity.
void rk4_step(std::span<const VelocityMode> modes, int dim, double h, double* x, double* prop) {
    double k[4][kMaxDim], dk[4][kMaxDim * kMaxDim];
    double xs[kMaxDim], js[kMaxDim * kMaxDim], dv[kMaxDim * kMaxDim], v[kMaxDim];
    const double w[4] = {0.0, 0.5, 0.5, 1.0};
    for (int stage = 0; stage < 4; ++stage) {
        for (int a = 0; a < dim; ++a) xs[a] = x[a] + (stage ? w[stage] * h * k[stage - 1][a] : 0.0);
        identity(js, dim);
        if (prop && stage) {
            for (int i = 0; i < dim * dim; ++i) js[i] += w[stage] * h * dk[stage - 1][i];
        }
        evaluate_velocity(modes, dim, xs, v, prop ? dv : nullptr);
        for (int a = 0; a < dim; ++a) k[stage][a] = -v[a];
        if (prop) {
            for (int a = 0; a < dim; ++a) {
                for (int b = 0; b < dim; ++b) {
                    double s = 0.0;
                    for (int c = 0; c < dim; ++c) s += dv[a * dim + c] * js[c * dim + b];
                    dk[stage][a * dim + b] = -s;
                }
            }
        }
    }
    for (int a = 0; a < dim; ++a) x[a] += h / 6.0 * (k[0][a] + 2 * k[1][a] + 2 * k[2][a] + k[3][a]);
    if (prop) {
        identity(prop, dim);
        for (int i = 0; i < dim * dim; ++i) prop[i] += h / 6.0 * (dk[0][i] + 2 * dk[1][i] + 2 * dk[2][i] + dk[3][i]);
    }
}

std::vector<VelocityMode> scaled_modes(const NoiseSpec& spec, const ModeBasis& basis, std::span<const Complex> incr,
                                       double scale) {
    return velocity_modes(spec, basis, incr, scale);
}

void check_driver(const NoiseSpec& spec, const NoiseDriver& driver) {
    if (driver.basis().dim != spec.dim) throw InputError("characteristics: driver/spec dimension mismatch");
    const auto expected = make_basis(spec);
    if (expected.modes.size() != driver.basis().modes.size()) {
        throw InputError("characteristics: driver basis does not match the noise spec");
    }
}

}  // namespace

NoiseDriver NoiseDriver::white(ModeBasis basis, RngStream stream, double dt) {
    if (!(dt > 0.0)) throw InputError("NoiseDriver: dt must be positive");
    NoiseDriver d;
    d.kind_ = Kind::white;
    d.basis_ = std::move(basis);
    d.stream_ = stream;
    d.dt_ = dt;
    d.base_dt_ = dt;
    return d;
}

NoiseDriver NoiseDriver::white(ModeBasis basis, RngStream stream, double base_dt, std::uint32_t group) {
    if (group == 0) throw InputError("NoiseDriver: group must be positive");
    NoiseDriver d = white(std::move(basis), stream, base_dt);
    d.group_ = group;
    d.dt_ = base_dt * group;
    return d;
}

NoiseDriver NoiseDriver::recorded(ModeBasis basis, std::vector<NoiseIncrement> increments) {
    if (increments.empty()) throw InputError("NoiseDriver: empty increment list");
    NoiseDriver d;
    d.kind_ = Kind::recorded;
    d.dt_ = increments.front().dt;
    for (const auto& inc : increments) {
        if (inc.values.size() != basis.channels()) throw InputError("NoiseDriver: increment size mismatch");
        if (std::abs(inc.dt - d.dt_) > 1e-14 * d.dt_) throw InputError("NoiseDriver: non-uniform increments");
    }
    d.basis_ = std::move(basis);
    d.recorded_ = std::move(increments);
    return d;
}

NoiseDriver NoiseDriver::wong_zakai(ModeBasis basis, std::shared_ptr<const WongZakaiPath> path) {
    if (!path) throw InputError("NoiseDriver: null path");
    if (path->channels() != basis.channels()) throw InputError("NoiseDriver: path/basis mismatch");
    NoiseDriver d;
    d.kind_ = Kind::wong_zakai;
    d.basis_ = std::move(basis);
    d.dt_ = path->segment_length();
    d.path_ = std::move(path);
    return d;
}

std::uint64_t NoiseDriver::steps_available() const {
    switch (kind_) {
        case Kind::white: return 0;
        case Kind::recorded: return recorded_.size();
        case Kind::wong_zakai: return static_cast<std::uint64_t>(path_->segments());
    }
    return 0;
}

NoiseIncrement NoiseDriver::increment(std::uint64_t step) const {
    switch (kind_) {
        case Kind::white: {
            if (group_ == 1) return sample_increment(basis_, dt_, stream_, step);
            NoiseIncrement sum;
            sum.dt = dt_;
            sum.values.assign(basis_.channels(), Complex{});
            for (std::uint32_t g = 0; g < group_; ++g) {
                const auto inc = sample_increment(basis_, base_dt_, stream_, step * group_ + g);
                for (std::size_t c = 0; c < sum.values.size(); ++c) sum.values[c] += inc.values[c];
            }
            return sum;
        }
        case Kind::recorded:
            if (step >= recorded_.size()) throw InputError("NoiseDriver: step beyond recorded increments");
            return recorded_[step];
        case Kind::wong_zakai: {
            const int s = static_cast<int>(step);
            if (s >= path_->segments()) throw InputError("NoiseDriver: step beyond Wong-Zakai horizon");
            NoiseIncrement inc;
            inc.dt = dt_;
            auto a = path_->breakpoint(s), b = path_->breakpoint(s + 1);
            inc.values.resize(a.size());
            for (std::size_t c = 0; c < a.size(); ++c) inc.values[c] = b[c] - a[c];
            return inc;
        }
    }
    return {};
}

std::span<const double> FlowMap::jacobian(std::size_t i) const {
    if (jacobians.empty()) throw InputError("FlowMap: Jacobian tracking was not enabled");
    const std::size_t dd = static_cast<std::size_t>(dim) * dim;
    return {jacobians.data() + i * dd, dd};
}

double FlowMap::determinant(std::size_t i) const { return small_determinant(jacobian(i).data(), dim); }

double FlowMap::max_volume_defect() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < size(); ++i) worst = std::max(worst, std::abs(determinant(i) - 1.0));
    return worst;
}

void wrap_points(std::span<double> points) {
    for (double& v : points) {
        v -= std::floor(v);
        if (v >= 1.0) v = 0.0;
    }
}

double torus_sup_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw InputError("torus_sup_distance: size mismatch");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        d -= std::round(d);
        worst = std::max(worst, std::abs(d));
    }
    return worst;
}

std::vector<double> grid_points(const TorusGrid& grid) {
    std::vector<double> pts(grid.size() * grid.dim());
    for (std::size_t n = 0; n < grid.size(); ++n) {
        for (int a = 0; a < grid.dim(); ++a) pts[n * grid.dim() + a] = grid.coordinate(n, a);
    }
    return pts;
}

std::uint64_t step_count(double t_end, double dt) {
    if (!(dt > 0.0) || !(t_end >= 0.0)) throw InputError("step_count: need dt > 0 and t_end >= 0");
    const double r = t_end / dt;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-8 * std::max(1.0, r)) throw InputError("step_count: dt must divide t_end");
    return static_cast<std::uint64_t>(n);
}

void flow_step(std::span<const VelocityMode> modes, int dim, FlowScheme scheme, std::span<double> points,
               std::span<double> jacobians, std::span<double> dets) {
    const std::size_t n = points.size() / dim;
    const bool jac = !jacobians.empty();
    const std::size_t dd = static_cast<std::size_t>(dim) * dim;
    for (std::size_t i = 0; i < n; ++i) {
        double* x = points.data() + i * dim;
        double* J = jac ? jacobians.data() + i * dd : nullptr;
        double* det = dets.empty() ? nullptr : dets.data() + i;
        switch (scheme) {
            case FlowScheme::shear_split:
                for (std::size_t p = 0; p < modes.size(); ++p) shear(modes[p], dim, 0.5, x, J, det);
                for (std::size_t p = modes.size(); p-- > 0;) shear(modes[p], dim, 0.5, x, J, det);
                break;
            case FlowScheme::euler_maruyama: {
                double v[kMaxDim], dv[kMaxDim * kMaxDim];
                evaluate_velocity(modes, dim, x, v, jac ? dv : nullptr);
                for (int a = 0; a < dim; ++a) x[a] -= v[a];
                if (jac) {
                    double step[kMaxDim * kMaxDim];
                    for (std::size_t q = 0; q < dd; ++q) step[q] = -dv[q];
                    for (int a = 0; a < dim; ++a) step[a * dim + a] += 1.0;
                    left_multiply(step, J, dim);
                    if (det) *det *= small_determinant(step, dim);
                }
                break;
            }
            case FlowScheme::heun: {
                double v0[kMaxDim], v1[kMaxDim], dv0[kMaxDim * kMaxDim], dv1[kMaxDim * kMaxDim], xp[kMaxDim];
                evaluate_velocity(modes, dim, x, v0, jac ? dv0 : nullptr);
                for (int a = 0; a < dim; ++a) xp[a] = x[a] - v0[a];
                evaluate_velocity(modes, dim, xp, v1, jac ? dv1 : nullptr);
                for (int a = 0; a < dim; ++a) x[a] -= 0.5 * (v0[a] + v1[a]);
                if (jac) {
                    // D = I - (DV(x) + DV(x*) (I - DV(x))) / 2
                    double step[kMaxDim * kMaxDim];
                    for (int a = 0; a < dim; ++a) {
                        for (int b = 0; b < dim; ++b) {
                            double s = dv0[a * dim + b] + dv1[a * dim + b];
                            for (int c = 0; c < dim; ++c) s -= dv1[a * dim + c] * dv0[c * dim + b];
                            step[a * dim + b] = (a == b ? 1.0 : 0.0) - 0.5 * s;
                        }
                    }
                    left_multiply(step, J, dim);
                    if (det) *det *= small_determinant(step, dim);
                }
                break;
            }
        }
    }
}

void inverse_shear_step(std::span<const VelocityMode> modes, int dim, std::span<double> points) {
    const std::size_t n = points.size() / dim;
    for (std::size_t i = 0; i < n; ++i) {
        double* x = points.data() + i * dim;
        for (std::size_t p = 0; p < modes.size(); ++p) shear(modes[p], dim, -0.5, x, nullptr, nullptr);
        for (std::size_t p = modes.size(); p-- > 0;) shear(modes[p], dim, -0.5, x, nullptr, nullptr);
    }
}

FlowMap integrate_characteristics(const NoiseSpec& spec, const NoiseDriver& driver, std::vector<double> points,
                                  double t_end, const FlowOptions& options, std::uint64_t first_step) {
    check_driver(spec, driver);
    const int dim = spec.dim;
    if (points.size() % dim != 0) throw InputError("characteristics: point array not a multiple of dim");
    check_finite(points);
    FlowMap map;
    map.dim = dim;
    map.t = t_end;
    map.points = std::move(points);
    const std::size_t n = map.size();
    const std::size_t dd = static_cast<std::size_t>(dim) * dim;
    if (options.track_jacobian) {
        map.jacobians.assign(n * dd, 0.0);
        for (std::size_t i = 0; i < n; ++i) identity(map.jacobians.data() + i * dd, dim);
        map.step_determinants.assign(n, 1.0);
    }
    const ModeBasis& basis = driver.basis();

    if (driver.kind() == NoiseDriver::Kind::wong_zakai) {
        const auto& path = driver.path();
        if (t_end > path.horizon() + 1e-12) throw InputError("characteristics: Wong-Zakai horizon too short");
        const double h = options.ode_dt > 0.0 ? options.ode_dt : path.segment_length() / 16.0;
        const std::uint64_t per_segment = step_count(path.segment_length(), h);
        const std::uint64_t total = step_count(t_end, h);
        parallel_for(n, [&](std::size_t begin, std::size_t end) {
            double prop[kMaxDim * kMaxDim];
            int current = -1;
            std::vector<VelocityMode> modes;
            for (std::uint64_t s = 0; s < total; ++s) {
                const int seg = static_cast<int>(s / per_segment);
                if (seg != current) {
                    modes = scaled_modes(spec, basis, path.slope(seg), 1.0);
                    current = seg;
                }
                for (std::size_t i = begin; i < end; ++i) {
                    double* x = map.points.data() + i * dim;
                    if (options.track_jacobian) {
                        rk4_step(modes, dim, h, x, prop);
                        left_multiply(prop, map.jacobians.data() + i * dd, dim);
                        map.step_determinants[i] *= small_determinant(prop, dim);
                    } else {
                        rk4_step(modes, dim, h, x, nullptr);
                    }
                }
            }
        });
    } else {
        const std::uint64_t steps = step_count(t_end, driver.dt());
        if (driver.steps_available() && first_step + steps > driver.steps_available()) {
            throw InputError("characteristics: driver horizon too short");
        }
        parallel_for(n, [&](std::size_t begin, std::size_t end) {
            auto pts = std::span<double>(map.points).subspan(begin * dim, (end - begin) * dim);
            auto jac = options.track_jacobian
                           ? std::span<double>(map.jacobians).subspan(begin * dd, (end - begin) * dd)
                           : std::span<double>();
            auto det = options.track_jacobian ? std::span<double>(map.step_determinants).subspan(begin, end - begin)
                                              : std::span<double>();
            for (std::uint64_t s = 0; s < steps; ++s) {
                const auto incr = driver.increment(first_step + s);
                const auto modes = velocity_modes(spec, basis, incr.values);
                flow_step(modes, dim, options.scheme, pts, jac, det);
            }
        });
    }
    check_finite(map.points);
    wrap_points(map.points);
    return map;
}

FlowMap integrate_backward(const NoiseSpec& spec, const NoiseDriver& driver, std::vector<double> points,
                           double t_end, FlowScheme scheme, std::uint64_t first_step) {
    check_driver(spec, driver);
    const int dim = spec.dim;
    if (points.size() % dim != 0) throw InputError("characteristics: point array not a multiple of dim");
    check_finite(points);
    FlowMap map;
    map.dim = dim;
    map.t = t_end;
    map.backward = true;
    map.points = std::move(points);
    const std::size_t n = map.size();
    const ModeBasis& basis = driver.basis();

    if (driver.kind() == NoiseDriver::Kind::wong_zakai) {
        const auto& path = driver.path();
        const double h = path.segment_length() / 16.0;
        const std::uint64_t per_segment = 16;
        const std::uint64_t total = step_count(t_end, h);
        parallel_for(n, [&](std::size_t begin, std::size_t end) {
            int current = -1;
            std::vector<VelocityMode> modes;
            for (std::uint64_t s = total; s-- > 0;) {
                const int seg = static_cast<int>(s / per_segment);
                if (seg != current) {
                    modes = scaled_modes(spec, basis, path.slope(seg), 1.0);
                    current = seg;
                }
                for (std::size_t i = begin; i < end; ++i) rk4_step(modes, dim, -h, map.points.data() + i * dim, nullptr);
            }
        });
    } else {
        const std::uint64_t steps = step_count(t_end, driver.dt());
        if (driver.steps_available() && first_step + steps > driver.steps_available()) {
            throw InputError("characteristics: driver horizon too short");
        }
        parallel_for(n, [&](std::size_t begin, std::size_t end) {
            auto pts = std::span<double>(map.points).subspan(begin * dim, (end - begin) * dim);
            for (std::uint64_t s = steps; s-- > 0;) {
                const auto incr = driver.increment(first_step + s);
                if (scheme == FlowScheme::shear_split) {
                    inverse_shear_step(velocity_modes(spec, basis, incr.values), dim, pts);
                } else {
                    flow_step(velocity_modes(spec, basis, incr.values, -1.0), dim, scheme, pts);
                }
            }
        });
    }
    check_finite(map.points);
    wrap_points(map.points);
    return map;
}

SpectralField transport_scalar(const SpectralField& u0, const NoiseSpec& spec, const NoiseDriver& driver,
                               double t_end, FlowScheme scheme) {
    if (!u0.is_scalar()) throw InputError("transport_scalar: scalar field required");
    const auto& g = u0.grid();
    if (g.dim() != spec.dim) throw InputError("transport_scalar: dimension mismatch");
    auto pre = integrate_backward(spec, driver, grid_points(g), t_end, scheme);
    PointEvaluator eval(u0);
    PhysicalField samples(g, 1);
    parallel_for(g.size(), [&](std::size_t begin, std::size_t end) {
        eval.evaluate(std::span<const double>(pre.points).subspan(begin * g.dim(), (end - begin) * g.dim()),
                      samples.component(0).subspan(begin, end - begin));
    });
    return to_spectral(samples);
}

}  // namespace tnlab
