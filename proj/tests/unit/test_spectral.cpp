#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tnlab/errors.hpp"
#include "tnlab/rng.hpp"
#include "tnlab/spectral.hpp"

using namespace tnlab;

namespace {

constexpr double kPi = std::numbers::pi;

// Random real band-limited field with max |k_i| <= band.
SpectralField random_field(const TorusGrid& g, int band, unsigned seed, double mean = 0.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n01;
    SpectralField u = SpectralField::scalar(g);
    for (std::size_t f = 1; f < g.size(); ++f) {
        auto k = g.wavevector(f);
        if (!is_primary(k) || g.is_nyquist(f)) continue;
        bool inside = true;
        for (int v : k) inside = inside && std::abs(v) <= band;
        if (inside) u.set_mode(k, Complex(n01(gen), n01(gen)));
    }
    u.at(0) = mean;
    return u;
}

// Quadrature of f against e_{-k} on an N^2 midpoint grid.
Complex quadrature_coefficient_2d(double (*f)(double, double), int k1, int k2, int n = 64) {
    Complex sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double x = (i + 0.5) / n, y = (j + 0.5) / n;
            sum += f(x, y) * std::exp(Complex(0.0, -2.0 * kPi * (k1 * x + k2 * y)));
        }
    }
    return sum / static_cast<double>(n * n);
}

double cos_product(double x, double y) { return -2.0 * std::cos(2 * kPi * x) * std::cos(2 * kPi * y); }

}  // namespace

TEST_CASE("grid validation and index arithmetic") {
    CHECK_THROWS_AS(TorusGrid(1, 8), std::invalid_argument);
    CHECK_THROWS_AS(TorusGrid(2, 7), std::invalid_argument);
    CHECK_THROWS_AS(TorusGrid(2, 2), std::invalid_argument);
    TorusGrid g(2, 8);
    CHECK(g.size() == 64);
    for (std::size_t f = 0; f < g.size(); ++f) {
        auto k = g.wavevector(f);
        if (!g.is_nyquist(f)) {
            CHECK(g.flat_index(k) == f);
            auto m = g.wavevector(g.mirror(f));
            CHECK(m[0] == -k[0]);
            CHECK(m[1] == -k[1]);
        }
    }
    const int nyq[2] = {4, 0};
    CHECK_THROWS_AS(g.flat_index(nyq), std::out_of_range);
}

TEST_CASE("sobolev norms of cos(2 pi x1)") {
    TorusGrid g(2, 16);
    SpectralField zero = SpectralField::scalar(g);
    for (double s : {-1.0, 0.0, 1.5}) CHECK(sobolev_norm(zero, s) == 0.0);

    SpectralField u = SpectralField::scalar(g);
    u.set_mode({1, 0}, 0.5);
    CHECK(sobolev_norm(u, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
    // Direct sum over the two modes: 2 * (1/4) / (2 pi)^2.
    const double hm1 = 2.0 * 0.25 / (4.0 * kPi * kPi);
    CHECK(sobolev_norm(u, -1.0) * sobolev_norm(u, -1.0) == doctest::Approx(hm1).epsilon(1e-14));
    CHECK(hm1 == doctest::Approx(0.0126651).epsilon(1e-5));

    // Mean mode ignored.
    u.at(0) = 3.0;
    CHECK(sobolev_norm(u, 0.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));

    u.at(5) = Complex(std::nan(""), 0.0);
    CHECK_THROWS_AS(sobolev_norm(u, 0.0), InputError);
}

TEST_CASE("Parseval against physical mean square") {
    TorusGrid g(2, 32);
    for (unsigned seed = 1; seed <= 5; ++seed) {
        auto u = random_field(g, 10, seed, 0.7);
        const auto phys = to_physical(u);
        double mean = 0.0;
        for (double v : phys.values) mean += v;
        mean /= static_cast<double>(g.size());
        double ms = 0.0;
        for (double v : phys.values) ms += (v - mean) * (v - mean);
        ms /= static_cast<double>(g.size());
        const double n = sobolev_norm(u, 0.0);
        CHECK(n * n == doctest::Approx(ms).epsilon(1e-10));
    }
}

TEST_CASE("convolution with the single-mode cosine product") {
    TorusGrid g(2, 16);
    // Quadrature oracle for the potential's Fourier coefficients.
    const Complex w11 = quadrature_coefficient_2d(cos_product, 1, 1);
    CHECK(w11.real() == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(std::abs(quadrature_coefficient_2d(cos_product, 1, 0)) < 1e-12);

    SpectralField W = SpectralField::scalar(g);
    for (int a : {-1, 1}) {
        for (int b : {-1, 1}) W.set_mode({a, b}, quadrature_coefficient_2d(cos_product, a, b).real());
    }
    SpectralField rho = SpectralField::constant(g, 1.0);
    rho.set_mode({1, 1}, 0.05);
    auto c = convolve(W, rho);
    CHECK(c.coefficient({1, 1}).real() == doctest::Approx(-0.5 * 0.05).epsilon(1e-12));
    CHECK(std::abs(c.at(0)) == 0.0);

    auto zero = convolve(SpectralField::scalar(g), rho);
    CHECK(zero.max_abs() == 0.0);

    SpectralField W2 = W;
    W2.at(0) = 0.3;
    auto cst = convolve(W2, SpectralField::constant(g, 1.0));
    CHECK(cst.at(0).real() == doctest::Approx(0.3));
    cst.at(0) = 0.0;
    CHECK(cst.max_abs() == 0.0);

    CHECK_THROWS_AS(convolve(W, SpectralField::constant(TorusGrid(2, 8), 1.0)), InputError);
}

TEST_CASE("differential operators") {
    TorusGrid g(2, 16);
    SpectralField u = SpectralField::scalar(g);
    u.set_mode({1, 0}, 0.5);
    auto lap = laplacian(u);
    CHECK(lap.coefficient({1, 0}).real() == doctest::Approx(-4 * kPi * kPi * 0.5).epsilon(1e-14));

    CHECK(gradient(SpectralField::constant(g, 2.0)).max_abs() == 0.0);

    for (unsigned seed = 10; seed < 13; ++seed) {
        auto v = random_field(g, 5, seed);
        auto dg = divergence(gradient(v));
        auto l = laplacian(v);
        double scale = l.max_abs();
        for (std::size_t f = 0; f < g.size(); ++f) CHECK(std::abs(dg.at(f) - l.at(f)) <= 1e-12 * scale);
        CHECK(dg.symmetry_defect() <= 1e-14 * scale);
        // Commutation of derivatives coefficientwise.
        auto gl = gradient(laplacian(v));
        auto lg = laplacian(gradient(v));
        for (int c = 0; c < 2; ++c) {
            for (std::size_t f = 0; f < g.size(); ++f) CHECK(std::abs(gl.at(f, c) - lg.at(f, c)) <= 1e-12 * gl.max_abs());
        }
    }
}

TEST_CASE("transform roundtrips") {
    TorusGrid g(2, 32);
    auto u = random_field(g, 15, 3, 1.0);
    auto back = to_spectral(to_physical(u));
    for (std::size_t f = 0; f < g.size(); ++f) CHECK(std::abs(back.at(f) - u.at(f)) <= 1e-12);

    auto c = to_spectral(to_physical(SpectralField::constant(g, 2.5)));
    CHECK(c.at(0).real() == doctest::Approx(2.5).epsilon(1e-14));
    c.at(0) = 0.0;
    CHECK(c.max_abs() < 1e-15);

    SpectralField bad = SpectralField::scalar(g);
    bad.at(1) = Complex(1.0, 0.0);  // no conjugate partner
    CHECK_THROWS_AS(to_physical(bad), InputError);
}

TEST_CASE("spike roundtrip against a direct DFT on M=8") {
    TorusGrid g(2, 8);
    PhysicalField spike(g, 1);
    spike.values[9] = 1.0;  // node (1, 1)
    // Direct DFT oracle: coefficient k = M^-2 exp(-2 pi i k.x).
    auto spec = to_spectral(spike);
    for (std::size_t f = 0; f < g.size(); ++f) {
        if (g.is_nyquist(f)) {
            CHECK(std::abs(spec.at(f)) == 0.0);
            continue;
        }
        auto k = g.wavevector(f);
        const Complex dft = std::exp(Complex(0.0, -2.0 * kPi * (k[0] + k[1]) / 8.0)) / 64.0;
        CHECK(std::abs(spec.at(f) - dft) < 1e-15);
    }
    // With Nyquist planes removed the roundtrip equals the same direct sum.
    auto phys = to_physical(spec);
    for (std::size_t n = 0; n < g.size(); ++n) {
        double direct = 0.0;
        const double x0 = g.coordinate(n, 0), x1 = g.coordinate(n, 1);
        for (std::size_t f = 0; f < g.size(); ++f) {
            auto k = g.wavevector(f);
            if (g.is_nyquist(f)) continue;
            direct += std::cos(2 * kPi * (k[0] * (x0 - 1.0 / 8) + k[1] * (x1 - 1.0 / 8))) / 64.0;
        }
        CHECK(phys.values[n] == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("dealiasing") {
    TorusGrid g(2, 12);
    SpectralField u = SpectralField::scalar(g);
    u.set_mode({5, 0}, 1.0);
    u.set_mode({4, 0}, 1.0);
    auto d = dealias(u);
    CHECK(std::abs(d.coefficient({5, 0})) == 0.0);
    CHECK(std::abs(d.coefficient({4, 0})) == 1.0);
    auto dd = dealias(d);
    for (std::size_t f = 0; f < g.size(); ++f) CHECK(dd.at(f) == d.at(f));

    auto band = random_field(g, 4, 7);
    auto kept = dealias(band);
    for (std::size_t f = 0; f < g.size(); ++f) CHECK(kept.at(f) == band.at(f));
}

TEST_CASE("realness of products and norm monotonicity") {
    TorusGrid g(2, 24);
    auto a = random_field(g, 6, 21, 1.0);
    auto b = random_field(g, 6, 22);
    auto p = multiply(a, gradient(b));
    CHECK(p.symmetry_defect() <= 1e-12 * p.max_abs());

    auto u = random_field(g, 7, 23);
    double prev = 0.0;
    for (double s : {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0}) {
        const double n = sobolev_norm(u, s);
        CHECK(n >= prev);
        prev = n;
    }
}

TEST_CASE("point evaluation matches grid samples") {
    TorusGrid g(2, 16);
    auto u = random_field(g, 5, 31, 0.4);
    const auto phys = to_physical(u);
    PointEvaluator ev(u);
    for (std::size_t n = 0; n < g.size(); n += 7) {
        const double x[2] = {g.coordinate(n, 0), g.coordinate(n, 1)};
        CHECK(ev(x) == doctest::Approx(phys.values[n]).epsilon(1e-12));
    }
}

TEST_CASE("Philox4x32-10 known answers and stream contract") {
    const auto zero = philox4x32({0, 0, 0, 0}, {0, 0});
    CHECK(zero[0] == 0x6627e8d5u);
    CHECK(zero[1] == 0xe169c58du);
    CHECK(zero[2] == 0xbc57ac4cu);
    CHECK(zero[3] == 0x9b00dbd8u);
    const auto ones = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
    CHECK(ones[0] == 0x408f276du);
    CHECK(ones[1] == 0x41c83b0eu);
    CHECK(ones[2] == 0xa20bc7c6u);
    CHECK(ones[3] == 0x6d5451fdu);

    RngStream s(42, 7);
    CHECK(s.normals(3, 4) == s.normals(3, 4));
    CHECK(s.normals(3, 4) != s.normals(4, 3));
    CHECK(s.split(0, purpose::common_noise) != s.split(0, purpose::idiosyncratic));
    CHECK(s.split(1, purpose::common_noise) != s.split(0, purpose::common_noise));

    double sum = 0.0, sum2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        auto [z1, z2] = s.normals(0, i);
        sum += z1 + z2;
        sum2 += z1 * z1 + z2 * z2;
    }
    CHECK(std::abs(sum / (2 * n)) < 4.0 / std::sqrt(2.0 * n));
    CHECK(sum2 / (2 * n) == doctest::Approx(1.0).epsilon(0.02));
}
