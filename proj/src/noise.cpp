#include "tnlab/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tnlab/errors.hpp"

namespace tnlab {

double Coloring::theta(int k_squared) const {
    if (k_squared <= 0) return 0.0;
    if (kind == Kind::power_law) return amplitude * std::pow(static_cast<double>(k_squared), -0.5 * exponent);
    for (const auto& [k2, value] : table) {
        if (k2 == k_squared) return value;
    }
    return 0.0;
}

Coloring Coloring::shells(std::vector<std::pair<int, double>> entries) {
    Coloring c;
    c.kind = Kind::table;
    c.table = std::move(entries);
    return c;
}

Coloring Coloring::power_law(double amplitude, double exponent) {
    Coloring c;
    c.kind = Kind::power_law;
    c.amplitude = amplitude;
    c.exponent = exponent;
    return c;
}

NoiseSpec NoiseSpec::uniform_shells(int dim, int radius_squared, double value, double intensity) {
    NoiseSpec spec;
    spec.dim = dim;
    std::vector<std::pair<int, double>> entries;
    for (int k2 = 1; k2 <= radius_squared; ++k2) entries.emplace_back(k2, value);
    spec.coloring = Coloring::shells(std::move(entries));
    spec.truncation = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(radius_squared)) - 1e-12));
    spec.intensity = intensity;
    return spec;
}

namespace {

template <class Fn>
void for_each_active(const NoiseSpec& spec, Fn&& fn) {
    const int d = spec.dim;
    const int n = spec.truncation;
    std::vector<int> k(d, -n);
    while (true) {
        int k2 = 0;
        for (int v : k) k2 += v * v;
        if (k2 > 0 && k2 <= n * n) {
            const double theta = spec.coloring.theta(k2);
            if (theta != 0.0) fn(std::span<const int>(k), k2, theta);
        }
        int a = d - 1;
        while (a >= 0 && k[a] == n) {
            k[a] = -n;
            --a;
        }
        if (a < 0) break;
        ++k[a];
    }
}

void validate(const NoiseSpec& spec) {
    if (spec.dim < 2 || spec.dim > kMaxDim) throw InputError("NoiseSpec: dimension out of range");
    if (spec.truncation < 1) throw InputError("NoiseSpec: truncation radius must be >= 1");
    if (!(spec.intensity >= 0.0) || !std::isfinite(spec.intensity)) {
        throw InputError("NoiseSpec: intensity must be finite and nonnegative");
    }
}

}  // namespace

std::vector<double> perpendicular_basis(std::span<const int> k) {
    const int d = static_cast<int>(k.size());
    std::vector<double> out;
    double norm = 0.0;
    for (int v : k) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw InputError("perpendicular_basis: zero wavevector");

    // Orientation fixed on the primary representative so that a_{-k} = a_k.
    std::vector<double> unit(d);
    const double sign = is_primary(k) ? 1.0 : -1.0;
    for (int a = 0; a < d; ++a) unit[a] = sign * k[a] / norm;

    if (d == 2) {
        out = {-unit[1], unit[0]};
        return out;
    }

    std::vector<int> axes(d);
    std::iota(axes.begin(), axes.end(), 0);
    std::stable_sort(axes.begin(), axes.end(), [&](int a, int b) { return std::abs(k[a]) < std::abs(k[b]); });

    std::vector<std::vector<double>> accepted{unit};
    for (int axis : axes) {
        if (static_cast<int>(accepted.size()) == d) break;
        std::vector<double> v(d, 0.0);
        v[axis] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& b : accepted) {
                double dot = 0.0;
                for (int a = 0; a < d; ++a) dot += v[a] * b[a];
                for (int a = 0; a < d; ++a) v[a] -= dot * b[a];
            }
        }
        double vn = 0.0;
        for (double x : v) vn += x * x;
        vn = std::sqrt(vn);
        if (vn < 1e-8) continue;
        for (double& x : v) x /= vn;
        accepted.push_back(v);
    }
    for (std::size_t j = 1; j < accepted.size(); ++j) out.insert(out.end(), accepted[j].begin(), accepted[j].end());
    return out;
}

ModeBasis make_basis(const NoiseSpec& spec) {
    validate(spec);
    ModeBasis basis;
    basis.dim = spec.dim;
    for_each_active(spec, [&](std::span<const int> k, int, double theta) {
        if (!is_primary(k)) return;
        NoiseMode m;
        m.k.assign(k.begin(), k.end());
        m.theta = theta;
        m.basis = perpendicular_basis(k);
        basis.modes.push_back(std::move(m));
    });
    return basis;
}

NoiseIncrement sample_increment(const ModeBasis& basis, double dt, const RngStream& stream, std::uint64_t step) {
    if (dt < 0.0) throw InputError("sample_increment: negative time step");
    NoiseIncrement incr;
    incr.dt = dt;
    incr.values.resize(basis.channels());
    if (dt == 0.0) return incr;
    const double scale = std::sqrt(0.5 * dt);
    for (std::size_t ch = 0; ch < incr.values.size(); ++ch) {
        const auto [re, im] = stream.normals(step, ch);
        incr.values[ch] = Complex(scale * re, scale * im);
    }
    return incr;
}

std::vector<VelocityMode> velocity_modes(const NoiseSpec& spec, const ModeBasis& basis,
                                         std::span<const Complex> increments, double scale) {
    const int d = basis.dim;
    const double prefactor = std::sqrt(2.0) * spec.intensity * scale;
    std::vector<VelocityMode> out(basis.modes.size());
    for (std::size_t p = 0; p < basis.modes.size(); ++p) {
        const auto& mode = basis.modes[p];
        auto& vm = out[p];
        for (int a = 0; a < d; ++a) vm.k[a] = mode.k[a];
        for (int j = 0; j < d - 1; ++j) {
            const Complex db = increments[p * (d - 1) + j] * (prefactor * mode.theta);
            auto vec = mode.vector(j, d);
            for (int a = 0; a < d; ++a) vm.c[a] += db * vec[a];
        }
    }
    return out;
}

SpectralField velocity_field(const NoiseSpec& spec, const ModeBasis& basis, const NoiseIncrement& incr,
                             const TorusGrid& grid) {
    if (grid.dim() != spec.dim) throw InputError("velocity_field: dimension mismatch");
    for (const auto& mode : basis.modes) {
        for (int v : mode.k) {
            if (std::abs(v) > grid.dealias_cutoff()) {
                throw InputError("velocity_field: grid too small for truncation radius");
            }
        }
    }
    SpectralField v = SpectralField::vector(grid);
    const auto modes = velocity_modes(spec, basis, incr.values);
    std::vector<int> k(spec.dim);
    for (const auto& m : modes) {
        for (int a = 0; a < spec.dim; ++a) k[a] = m.k[a];
        for (int a = 0; a < spec.dim; ++a) v.set_mode(k, m.c[a], a);
    }
    return v;
}

std::vector<double> covariance_matrix(const NoiseSpec& spec) {
    validate(spec);
    const int d = spec.dim;
    std::vector<double> q(static_cast<std::size_t>(d) * d, 0.0);
    for_each_active(spec, [&](std::span<const int> k, int k2, double theta) {
        const double t2 = theta * theta;
        for (int a = 0; a < d; ++a) {
            for (int b = 0; b < d; ++b) {
                const double proj = (a == b ? 1.0 : 0.0) - static_cast<double>(k[a]) * k[b] / k2;
                q[a * d + b] += t2 * proj;
            }
        }
    });
    return q;
}

double covariance_scalar(const NoiseSpec& spec) {
    const auto q = covariance_matrix(spec);
    double trace = 0.0;
    for (int a = 0; a < spec.dim; ++a) trace += q[a * spec.dim + a];
    return trace / spec.dim;
}

double h_norm_squared(const NoiseSpec& spec, double alpha) {
    validate(spec);
    double total = 0.0;
    for_each_active(spec, [&](std::span<const int>, int k2, double theta) {
        total += std::pow(static_cast<double>(k2), alpha) * theta * theta;
    });
    return total;
}

WongZakaiPath::WongZakaiPath(const ModeBasis& basis, double horizon, int level, const RngStream& stream,
                             int base_level)
    : level_(level), base_level_(base_level), horizon_(horizon), segment_(std::ldexp(1.0, -level)),
      channels_(basis.channels()) {
    if (!(horizon > 0.0)) throw InputError("wong_zakai: horizon must be positive");
    if (level < 0 || base_level < level) throw InputError("wong_zakai: need 0 <= level <= base_level");
    const int segments = static_cast<int>(std::ceil(horizon / segment_ - 1e-9));
    const std::uint64_t per_segment = std::uint64_t{1} << (base_level - level);
    const double base_dt = std::ldexp(1.0, -base_level);
    breakpoints_.assign(segments + 1, std::vector<Complex>(channels_));
    std::uint64_t step = 0;
    for (int s = 1; s <= segments; ++s) {
        breakpoints_[s] = breakpoints_[s - 1];
        for (std::uint64_t i = 0; i < per_segment; ++i, ++step) {
            const auto incr = sample_increment(basis, base_dt, stream, step);
            for (std::size_t ch = 0; ch < channels_; ++ch) breakpoints_[s][ch] += incr.values[ch];
        }
    }
}

int WongZakaiPath::segment_of(double t) const {
    const int s = static_cast<int>(std::floor(t / segment_));
    return std::clamp(s, 0, segments() - 1);
}

std::vector<Complex> WongZakaiPath::value(double t) const {
    const int s = segment_of(t);
    const double frac = (t - s * segment_) / segment_;
    std::vector<Complex> out(channels_);
    for (std::size_t ch = 0; ch < channels_; ++ch) {
        out[ch] = (1.0 - frac) * breakpoints_[s][ch] + frac * breakpoints_[s + 1][ch];
    }
    return out;
}

std::vector<Complex> WongZakaiPath::slope(int segment) const {
    std::vector<Complex> out(channels_);
    for (std::size_t ch = 0; ch < channels_; ++ch) {
        out[ch] = (breakpoints_[segment + 1][ch] - breakpoints_[segment][ch]) / segment_;
    }
    return out;
}

WongZakaiPath wong_zakai(const ModeBasis& basis, double horizon, int level, const RngStream& stream,
                         int base_level) {
    return WongZakaiPath(basis, horizon, level, stream, base_level);
}

}  // namespace tnlab
