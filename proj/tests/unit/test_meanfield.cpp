#include <doctest.h>

#include <cmath>
#include <numbers>

#include "tnlab/errors.hpp"
#include "tnlab/meanfield.hpp"
#include "tnlab/spectral.hpp"

using namespace tnlab;

namespace {

constexpr double pi = std::numbers::pi;

// Rectangle-rule Fourier coefficient of a trigonometric polynomial (exact for low modes).
double quadrature_coefficient(const std::function<double(double, double)>& f, int k1, int k2, int n = 32) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double x = double(i) / n, y = double(j) / n;
            s += f(x, y) * std::cos(2 * pi * (k1 * x + k2 * y));
        }
    }
    return s / (n * n);
}

double quadrature_l2(const std::function<double(double, double)>& f, int n = 32) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) s += f(double(i) / n, double(j) / n) * f(double(i) / n, double(j) / n);
    }
    return std::sqrt(s / (n * n));
}

SpectralField single_mode_W(const TorusGrid& g) { return fourier_potential(PotentialSpec::single_mode({1, 1}), g); }

}  // namespace

TEST_CASE("single-mode potential matches the cosine product") {
    TorusGrid g(2, 16);
    auto W = single_mode_W(g);
    auto f = [](double x, double y) { return -2.0 * std::cos(2 * pi * x) * std::cos(2 * pi * y); };
    for (auto [a, b] : {std::pair{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}) {
        CHECK(W.coefficient({a, b}).real() == doctest::Approx(quadrature_coefficient(f, a, b)).epsilon(1e-13));
        CHECK(W.coefficient({a, b}).real() == doctest::Approx(-0.5).epsilon(1e-14));
    }
    CHECK(W.coefficient({1, 0}) == Complex{});
    CHECK(quadrature_l2(f) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(l2_norm(W) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(normalization_constant(PotentialSpec::single_mode({1, 1}), 2) == doctest::Approx(2.0));
    for (std::size_t f2 = 0; f2 < g.size(); ++f2) CHECK(W.at(f2) == W.at(g.mirror(f2)));
}

TEST_CASE("two-mode potential has unit norm and a shared normalization") {
    TorusGrid g(2, 16);
    auto W = fourier_potential(PotentialSpec::two_mode({1, 1}), g);
    const double N = std::sqrt(2.0);
    auto f = [N](double x, double y) {
        return -N * (std::cos(2 * pi * x) * std::cos(2 * pi * y) + std::cos(4 * pi * x) * std::cos(4 * pi * y));
    };
    CHECK(quadrature_l2(f) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(l2_norm(W) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(W.coefficient({1, -1}).real() == doctest::Approx(quadrature_coefficient(f, 1, -1)).epsilon(1e-13));
    CHECK(W.coefficient({2, 2}).real() == doctest::Approx(quadrature_coefficient(f, 2, 2)).epsilon(1e-13));
    CHECK(W.coefficient({2, 2}).real() == doctest::Approx(-N / 4).epsilon(1e-14));
}

TEST_CASE("potential inputs are validated") {
    TorusGrid g(2, 8);
    CHECK_THROWS_AS(fourier_potential(PotentialSpec::single_mode({1, 0}), g), InputError);
    CHECK_THROWS_AS(fourier_potential(PotentialSpec::single_mode({1, 1, 1}), g), InputError);
    CHECK_THROWS_AS(fourier_potential(PotentialSpec::two_mode({2, 2}), g), InputError);
    PotentialSpec table;
    table.form = PotentialSpec::Form::explicit_table;
    table.table = {{{1, 0}, 0.25}};
    auto W = fourier_potential(table, g);
    CHECK(W.coefficient({-1, 0}).real() == 0.25);
}

TEST_CASE("phase transition criterion") {
    TorusGrid g(2, 8);
    CHECK_FALSE(phase_transition_criterion(SpectralField::scalar(g)).has_negative_mode);
    auto W = single_mode_W(g);
    auto r = phase_transition_criterion(W);
    CHECK(r.has_negative_mode);
    CHECK(r.witnesses.size() == 4);
    W *= -1.0;
    CHECK_FALSE(phase_transition_criterion(W).has_negative_mode);
}

TEST_CASE("spectrum of the linearized operator") {
    TorusGrid g(2, 8);
    auto zero = SpectralField::scalar(g);
    for (const auto& e : spectrum_L(zero, 1.0, 1.0)) {
        CHECK(e.lambda == doctest::Approx(-4 * pi * pi));
    }
    auto W = single_mode_W(g);
    auto spec = spectrum_L(W, 0.3, 2.0);
    bool seen = false;
    for (const auto& e : spec) {
        if (e.k == std::vector<int>{1, 1}) {
            CHECK(e.lambda == doctest::Approx(8 * pi * pi * 0.2).epsilon(1e-12));
            CHECK(e.lambda == doctest::Approx(15.791).epsilon(1e-4));
            seen = true;
        } else if (std::abs(e.k[0]) != 1 || std::abs(e.k[1]) != 1) {
            CHECK(e.lambda < 0.0);
        }
    }
    CHECK(seen);
    CHECK(max_eigenvalue(W, 0.3) == doctest::Approx(8 * pi * pi * 0.2));
    CHECK(linear_instability_threshold(W) == doctest::Approx(0.5));
    CHECK_THROWS_AS(spectrum_L(W, 0.0, 2.0), InputError);
}

TEST_CASE("free energy") {
    TorusGrid g(2, 16);
    auto one = SpectralField::constant(g, 1.0);
    auto W = single_mode_W(g);
    CHECK(free_energy(one, 0.3, W) == doctest::Approx(0.0).scale(1.0));
    auto Wc = W;
    Wc.at(0) = 0.7;
    CHECK(free_energy(one, 0.3, Wc) == doctest::Approx(0.35));
    auto bad = one;
    bad.set_mode({1, 0}, 0.8);
    CHECK_THROWS_AS(free_energy(bad, 0.3, W), InputError);
}

TEST_CASE("fixed points across the single-mode transition") {
    TorusGrid g(2, 32);
    auto W = single_mode_W(g);
    auto init = SpectralField::constant(g, 1.0);
    init.set_mode({1, 1}, 0.1);
    init.set_mode({1, -1}, 0.1);

    auto above = steady_state_fixed_point(0.6, W, init);
    CHECK(above.converged);
    CHECK(std::abs(above.rho.coefficient({1, 1})) < 1e-6);

    auto below = steady_state_fixed_point(0.3, W, init);
    CHECK(below.converged);
    CHECK(std::abs(below.rho.coefficient({1, 1})) > 0.05);
    CHECK(below.rho.mean() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(free_energy(below.rho, 0.3, W) < free_energy(SpectralField::constant(g, 1.0), 0.3, W));

    // Self-consistency: the converged state reproduces itself under the Gibbs map.
    auto again = steady_state_fixed_point(0.3, W, below.rho, 1.0, 1e-9, 1);
    CHECK(again.residual < 1e-9);
}

TEST_CASE("dimension constants") {
    CHECK(dimension_constant(2) == doctest::Approx(1.0 / 64));
    CHECK(dimension_constant(3) == doctest::Approx(1.0 / 80));
    CHECK(dimension_constant(4) == doctest::Approx(0.75 / 120));
    CHECK_THROWS_AS(dimension_constant(1), InputError);
}

TEST_CASE("stability report for the single-mode potential") {
    TorusGrid g(2, 16);
    auto W = single_mode_W(g);
    auto noise = NoiseSpec::uniform_shells(2, 1, 1.0, 1.0);
    CHECK(h_norm_squared(noise, -1.0) == doctest::Approx(4.0));

    // nu' = 0.25: C_W = 2 * 0.25 = 0.5, K^2 = (0.5 - 0.05) / (4 / 64) = 7.2
    auto p = split_point(W, 0.3, 0.25, 4.0, 1.0 / 64);
    CHECK(p.C_W == doctest::Approx(0.5));
    CHECK(p.unstable.size() == 4);
    CHECK(p.K_squared == doctest::Approx(7.2));
    CHECK(std::sqrt(p.K_squared) == doctest::Approx(2.683).epsilon(1e-3));

    auto r = stability_report(W, 0.3, noise);
    CHECK(std::isfinite(r.K_crit));
    CHECK(r.K_crit > 0.0);
    CHECK(r.K_crit <= std::sqrt(7.2) + 1e-12);
    // For nu' < 1/2: C_W = 1 - 2 nu', so K^2(nu') = 16 (0.7 - nu'), smallest at the largest scanned nu'.
    CHECK(r.best.K_squared == doctest::Approx(16.0 * (0.7 - r.best.nu_prime)).epsilon(1e-12));
    CHECK(r.best.nu_prime == doctest::Approx(0.3 * 200.0 / 201.0).epsilon(1e-2));
    CHECK(r.K_crit == doctest::Approx(2.535).epsilon(2e-3));
    CHECK(gamma_star(r, r.K_crit) >= -1e-9);
    CHECK(lyapunov_bound(r, 1.5 * r.K_crit) < lyapunov_bound(r, r.K_crit));

    // Above the deterministic threshold nothing is unstable.
    auto stable = stability_report(W, 0.6, noise);
    CHECK(stable.K_crit == 0.0);
    CHECK(stable.best.unstable.empty());
    CHECK(stable.max_eigenvalue < 0.0);

    // K_crit grows as nu decreases.
    CHECK(stability_report(W, 0.2, noise).K_crit > r.K_crit);
}
