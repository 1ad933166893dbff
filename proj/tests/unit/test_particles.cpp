#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tnlab/errors.hpp"
#include "tnlab/meanfield.hpp"
#include "tnlab/particles.hpp"
#include "tnlab/spectral.hpp"

using namespace tnlab;

namespace {

constexpr double pi = std::numbers::pi;

// W(x) = -2 cos(2 pi x) cos(2 pi y) and its gradient written out directly.
std::array<double, 2> grad_single_mode(double x, double y) {
    return {4 * pi * std::sin(2 * pi * x) * std::cos(2 * pi * y), 4 * pi * std::cos(2 * pi * x) * std::sin(2 * pi * y)};
}

ModelParams model(const TorusGrid& g, double nu, double K, bool interacting) {
    ModelParams p;
    p.nu = nu;
    p.W = interacting ? fourier_potential(PotentialSpec::single_mode({1, 1}), g) : SpectralField::scalar(g);
    p.noise = NoiseSpec::uniform_shells(2, 1, 1.0, K);
    return p;
}

ParticleEnsemble cloud(std::vector<double> pts) {
    ParticleEnsemble e;
    e.positions = std::move(pts);
    e.idiosyncratic = RngStream(9, 9);
    return e;
}

SpectralField smooth_density(const TorusGrid& g) {
    auto rho = SpectralField::constant(g, 1.0);
    rho.set_mode({1, 1}, 0.2);
    rho.set_mode({1, 0}, Complex(0.1, -0.1));
    rho.set_mode({0, 2}, 0.1);
    return rho;
}

}  // namespace

TEST_CASE("empirical modes of special clouds") {
    auto at_zero = empirical_modes(std::vector<double>(20, 0.0), 2, 2.0);
    CHECK(at_zero.k.size() == 13);
    for (auto v : at_zero.values) CHECK(std::abs(v - 1.0) <= 1e-15);

    const int M = 8;
    std::vector<double> lattice;
    for (int i = 0; i < M; ++i) {
        for (int j = 0; j < M; ++j) {
            lattice.push_back(double(i) / M);
            lattice.push_back(double(j) / M);
        }
    }
    auto grid = empirical_modes(lattice, 2, 3.0);
    CHECK(grid.values[0] == Complex(1.0));
    for (std::size_t m = 1; m < grid.k.size(); ++m) CHECK(std::abs(grid.values[m]) <= 1e-14);

    // Uniform random points: |mu(k)|^2 is asymptotically exponential with mean 1/N.
    const std::size_t N = 4000;
    RngStream rng(3, 4);
    std::size_t below = 0, total = 0;
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> pts(2 * N);
        for (std::size_t i = 0; i < N; ++i) std::tie(pts[2 * i], pts[2 * i + 1]) = rng.uniforms(rep, i);
        auto t = empirical_modes(pts, 2, 2.0);
        for (std::size_t m = 1; m < t.k.size(); ++m) {
            ++total;
            if (std::abs(t.values[m]) < 2.0 / std::sqrt(double(N))) ++below;
        }
    }
    CHECK(double(below) / total >= 0.95);
}

TEST_CASE("mode-sum force agrees with the direct pairwise gradient") {
    TorusGrid g(2, 16);
    ModeForce force(fourier_potential(PotentialSpec::single_mode({1, 1}), g));
    CHECK(force.modes() == 4);
    std::vector<double> pts{0.1, 0.2, 0.7, 0.35, 0.43, 0.9, 0.05, 0.6};
    force.update(pts);
    const std::size_t N = pts.size() / 2;
    for (std::size_t i = 0; i < N; ++i) {
        double direct[2] = {0.0, 0.0};
        for (std::size_t j = 0; j < N; ++j) {
            if (j == i) continue;
            auto gw = grad_single_mode(pts[2 * i] - pts[2 * j], pts[2 * i + 1] - pts[2 * j + 1]);
            direct[0] -= gw[0] / N;
            direct[1] -= gw[1] / N;
        }
        double F[2];
        force.evaluate({pts.data() + 2 * i, 2}, F);
        CHECK(F[0] == doctest::Approx(direct[0]).epsilon(1e-12).scale(1.0));
        CHECK(F[1] == doctest::Approx(direct[1]).epsilon(1e-12).scale(1.0));
    }
    // A single particle feels nothing.
    std::vector<double> one{0.3, 0.8};
    force.update(one);
    double F[2];
    force.evaluate(one, F);
    CHECK(std::abs(F[0]) <= 1e-15);
    CHECK(std::abs(F[1]) <= 1e-15);
}

TEST_CASE("force-balanced pair stays fixed without noise") {
    TorusGrid g(2, 16);
    auto p = model(g, 0.0, 0.0, true);
    // grad W(1/2, 1/2) = 0 by the direct formula.
    auto gw = grad_single_mode(0.5, 0.5);
    CHECK(std::abs(gw[0]) + std::abs(gw[1]) <= 1e-14);
    auto e = cloud({0.2, 0.3, 0.7, 0.8});
    const auto start = e.positions;
    ParticleConfig cfg;
    cfg.T = 0.2;
    auto drv = NoiseDriver::white(make_basis(p.noise), RngStream(1, 1), cfg.dt);
    simulate_particles(e, p, cfg, drv);
    CHECK(torus_sup_distance(e.positions, start) <= 1e-12);
}

TEST_CASE("Brownian scaling without interaction or transport") {
    TorusGrid g(2, 8);
    auto p = model(g, 0.3, 0.0, false);
    const std::size_t N = 10000;
    auto e = cloud(std::vector<double>(2 * N, 0.5));
    ParticleConfig cfg;
    cfg.T = 0.01;
    cfg.dt = 1e-3;
    auto drv = NoiseDriver::white(make_basis(p.noise), RngStream(1, 1), cfg.dt);
    simulate_particles(e, p, cfg, drv);
    for (int a = 0; a < 2; ++a) {
        double v = 0.0;
        for (std::size_t i = 0; i < N; ++i) v += std::pow(e.positions[2 * i + a] - 0.5, 2);
        v /= N;
        CHECK(v == doctest::Approx(2 * 0.3 * 0.01).epsilon(0.05));
    }
}

TEST_CASE("inverse-CDF sampling reproduces the initial law") {
    TorusGrid g(2, 16);
    auto rho = smooth_density(g);
    const std::size_t N = 40000;
    auto e = draw_particles(rho, N, RngStream(2, 0), RngStream(2, 1));
    CHECK(e.size() == N);
    auto t = empirical_modes(e.positions, 2, 2.0);
    for (std::size_t m = 0; m < t.k.size(); ++m) {
        CHECK(std::abs(t.values[m] - rho.coefficient(std::span<const int>(t.k[m]))) <= 4.0 / std::sqrt(double(N)));
    }
    auto again = draw_particles(rho, N, RngStream(2, 0), RngStream(2, 1));
    CHECK(again.positions == e.positions);
    auto bad = rho;
    bad.set_mode({1, 0}, 0.8);
    CHECK_THROWS_AS(draw_particles(bad, 10, RngStream(2, 0), RngStream(2, 1)), InputError);
}

TEST_CASE("exchangeability of the deterministic particle flow") {
    TorusGrid g(2, 16);
    auto p = model(g, 0.0, 1.0, true);
    auto e = draw_particles(smooth_density(g), 200, RngStream(4, 0), RngStream(4, 1));
    auto perm = e;
    std::reverse(perm.positions.begin(), perm.positions.end());
    for (std::size_t i = 0; i < perm.size(); ++i) std::swap(perm.positions[2 * i], perm.positions[2 * i + 1]);
    ParticleConfig cfg;
    cfg.T = 0.1;
    auto drv = NoiseDriver::white(make_basis(p.noise), RngStream(4, 2), cfg.dt);
    auto a = simulate_particles(e, p, cfg, drv);
    auto b = simulate_particles(perm, p, cfg, drv);
    for (std::size_t s = 0; s < a.times.size(); ++s) {
        CHECK(a.modes[s].values[0] == Complex(1.0));
        for (std::size_t m = 0; m < a.modes[s].values.size(); ++m) {
            CHECK(std::abs(a.modes[s].values[m] - b.modes[s].values[m]) <= 1e-12);
        }
    }
}

TEST_CASE("particles track the SPDE driven by the same common noise") {
    TorusGrid g(2, 32);
    auto p = model(g, 0.3, 1.0, true);
    auto rho = smooth_density(g);
    ParticleConfig cfg;
    cfg.T = 0.2;
    // Same discrete transport map as the strang solver, so only the N-dependence remains.
    cfg.common_scheme = FlowScheme::shear_split;
    auto drv = NoiseDriver::white(make_basis(p.noise), RngStream(6, 0), cfg.dt);
    SolverConfig sc;
    sc.grid = g;
    sc.dt = cfg.dt;
    sc.T = cfg.T;
    sc.scheme = Scheme::strang;
    sc.record_every = cfg.record_every;
    sc.record_fields = true;
    auto spde = run_spde(rho, p, sc, drv);
    const std::size_t N = 16000;
    auto e = draw_particles(rho, N, RngStream(6, 1), RngStream(6, 2));
    auto run = simulate_particles(e, p, cfg, drv);
    auto cmp = compare_to_spde(run, spde, drv);
    CHECK(cmp.per_sample.size() == 21);
    CHECK(cmp.max_error <= 3.0 / std::sqrt(double(N)));
    auto other = NoiseDriver::white(make_basis(p.noise), RngStream(6, 7), cfg.dt);
    CHECK_THROWS_AS(compare_to_spde(run, spde, other), InputError);
}
