#include "tnlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tnlab/errors.hpp"
#include "tnlab/fft.hpp"

namespace tnlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_same_grid(const SpectralField& a, const SpectralField& b, const char* what) {
    if (a.grid() != b.grid()) throw InputError(std::string(what) + ": grid mismatch");
}

}  // namespace

double sobolev_norm(const SpectralField& u, double s) {
    if (!u.all_finite()) throw InputError("sobolev_norm: non-finite coefficients");
    const auto& g = u.grid();
    double total = 0.0;
    for (std::size_t f = 1; f < g.size(); ++f) {
        const int k2 = g.norm_squared(f);
        if (k2 == 0) continue;
        double mag2 = 0.0;
        for (int c = 0; c < u.components(); ++c) mag2 += std::norm(u.at(f, c));
        if (mag2 == 0.0) continue;
        total += std::pow(kTwoPi * kTwoPi * k2, s) * mag2;
    }
    return std::sqrt(total);
}

double l2_norm(const SpectralField& u) {
    double total = 0.0;
    for (const auto& z : u.data()) total += std::norm(z);
    return std::sqrt(total);
}

double inner_product(const SpectralField& a, const SpectralField& b) {
    require_same_grid(a, b, "inner_product");
    if (a.components() != b.components()) throw InputError("inner_product: rank mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) total += (a.data()[i] * std::conj(b.data()[i])).real();
    return total;
}

SpectralField convolve(const SpectralField& W, const SpectralField& rho) {
    require_same_grid(W, rho, "convolve");
    if (!W.is_scalar()) throw InputError("convolve: potential must be scalar");
    SpectralField out(rho.grid(), rho.components());
    for (int c = 0; c < rho.components(); ++c) {
        auto dst = out.component(c);
        auto src = rho.component(c);
        auto w = W.component(0);
        for (std::size_t f = 0; f < dst.size(); ++f) dst[f] = w[f] * src[f];
    }
    return out;
}

SpectralField gradient(const SpectralField& u) {
    if (!u.is_scalar()) throw InputError("gradient: scalar field required");
    const auto& g = u.grid();
    SpectralField out = SpectralField::vector(g);
    auto src = u.component(0);
    for (int a = 0; a < g.dim(); ++a) {
        auto dst = out.component(a);
        for (std::size_t f = 0; f < g.size(); ++f) {
            if (g.is_nyquist(f)) continue;
            dst[f] = Complex(0.0, kTwoPi * g.wavevector(f)[a]) * src[f];
        }
    }
    return out;
}

SpectralField divergence(const SpectralField& v) {
    const auto& g = v.grid();
    if (v.components() != g.dim()) throw InputError("divergence: vector field required");
    SpectralField out = SpectralField::scalar(g);
    auto dst = out.component(0);
    for (int a = 0; a < g.dim(); ++a) {
        auto src = v.component(a);
        for (std::size_t f = 0; f < g.size(); ++f) {
            if (g.is_nyquist(f)) continue;
            dst[f] += Complex(0.0, kTwoPi * g.wavevector(f)[a]) * src[f];
        }
    }
    return out;
}

SpectralField laplacian(const SpectralField& u) {
    const auto& g = u.grid();
    SpectralField out(g, u.components());
    for (int c = 0; c < u.components(); ++c) {
        auto dst = out.component(c);
        auto src = u.component(c);
        for (std::size_t f = 0; f < g.size(); ++f) {
            if (g.is_nyquist(f)) continue;
            dst[f] = -kTwoPi * kTwoPi * g.norm_squared(f) * src[f];
        }
    }
    return out;
}

SpectralField dealias(SpectralField u) {
    const auto& g = u.grid();
    for (int c = 0; c < u.components(); ++c) {
        auto comp = u.component(c);
        for (std::size_t f = 0; f < g.size(); ++f) {
            if (!g.in_dealias_band(f)) comp[f] = 0.0;
        }
    }
    return u;
}

void zero_nyquist(SpectralField& u) {
    const auto& g = u.grid();
    for (int c = 0; c < u.components(); ++c) {
        auto comp = u.component(c);
        for (std::size_t f = 0; f < g.size(); ++f) {
            if (g.is_nyquist(f)) comp[f] = 0.0;
        }
    }
}

PhysicalField to_physical(const SpectralField& u) {
    const double scale = u.max_abs();
    if (u.symmetry_defect() > 1e-10 * std::max(scale, 1e-300)) {
        throw InputError("to_physical: coefficients are not conjugate-symmetric");
    }
    const auto& g = u.grid();
    auto& fft = thread_transform(g);
    PhysicalField out(g, u.components());
    std::vector<Complex> buf(g.size());
    for (int c = 0; c < u.components(); ++c) {
        fft.backward(u.component(c), buf);
        auto dst = out.component(c);
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] = buf[i].real();
    }
    return out;
}

SpectralField to_spectral(const PhysicalField& samples) {
    const auto& g = samples.grid;
    auto& fft = thread_transform(g);
    SpectralField out(g, samples.components);
    std::vector<Complex> buf(g.size());
    for (int c = 0; c < samples.components; ++c) {
        auto src = samples.component(c);
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] = src[i];
        fft.forward(buf, out.component(c));
    }
    out.enforce_symmetry();
    return out;
}

SpectralField multiply(const SpectralField& scalar, const SpectralField& other) {
    require_same_grid(scalar, other, "multiply");
    if (!scalar.is_scalar()) throw InputError("multiply: first factor must be scalar");
    const auto a = to_physical(scalar);
    auto b = to_physical(other);
    auto sa = a.component(0);
    for (int c = 0; c < b.components; ++c) {
        auto sb = b.component(c);
        for (std::size_t i = 0; i < sb.size(); ++i) sb[i] *= sa[i];
    }
    return dealias(to_spectral(b));
}

void apply_multiplier(SpectralField& u, std::span<const double> factor) {
    for (int c = 0; c < u.components(); ++c) {
        auto comp = u.component(c);
        for (std::size_t f = 0; f < comp.size(); ++f) comp[f] *= factor[f];
    }
}

PointEvaluator::PointEvaluator(const SpectralField& u, int component)
    : dim_(u.grid().dim()), kmax_(0), mean_(u.at(0, component).real()) {
    const auto& g = u.grid();
    auto comp = u.component(component);
    for (std::size_t f = 0; f < g.size(); ++f) {
        if (comp[f] == Complex{} || g.is_nyquist(f)) continue;
        auto k = g.wavevector(f);
        if (!is_primary(k)) continue;
        for (int a = 0; a < dim_; ++a) kmax_ = std::max(kmax_, std::abs(k[a]));
        modes_.insert(modes_.end(), k.begin(), k.end());
        coeffs_.push_back(comp[f]);
    }
}

double PointEvaluator::operator()(std::span<const double> x) const {
    double out = 0.0;
    evaluate(x, std::span<double>(&out, 1));
    return out;
}

void PointEvaluator::evaluate(std::span<const double> points, std::span<double> out) const {
    const std::size_t count = points.size() / dim_;
    const int width = 2 * kmax_ + 1;
    std::vector<Complex> table(static_cast<std::size_t>(dim_) * width);
    for (std::size_t p = 0; p < count; ++p) {
        for (int a = 0; a < dim_; ++a) {
            Complex* row = table.data() + a * width + kmax_;
            const double phase = kTwoPi * points[p * dim_ + a];
            const Complex base(std::cos(phase), std::sin(phase));
            row[0] = 1.0;
            Complex acc = 1.0;
            for (int k = 1; k <= kmax_; ++k) {
                acc = k % 16 == 0 ? Complex(std::cos(k * phase), std::sin(k * phase)) : acc * base;
                row[k] = acc;
                row[-k] = std::conj(acc);
            }
        }
        double sum = 0.0;
        for (std::size_t m = 0; m < coeffs_.size(); ++m) {
            const int* k = modes_.data() + m * dim_;
            Complex e = table[kmax_ + k[0]];
            for (int a = 1; a < dim_; ++a) e *= table[a * width + kmax_ + k[a]];
            sum += (coeffs_[m] * e).real();
        }
        out[p] = mean_ + 2.0 * sum;
    }
}

}  // namespace tnlab
