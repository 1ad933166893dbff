#include <cmath>

#include "doctest.h"
#include "tnlab/errors.hpp"
#include "tnlab/flow.hpp"
#include "tnlab/spectral.hpp"

using namespace tnlab;

namespace {

std::vector<double> cloud(int n, unsigned seed) {
    RngStream s(seed, 99);
    std::vector<double> pts;
    for (int i = 0; i < n; ++i) {
        auto [a, b] = s.uniforms(0, i);
        pts.push_back(a);
        pts.push_back(b);
    }
    return pts;
}

}  // namespace

TEST_CASE("identity maps") {
    auto spec = NoiseSpec::uniform_shells(2, 1, 1.0, 0.0);
    auto basis = make_basis(spec);
    auto pts = cloud(50, 1);
    auto driver = NoiseDriver::white(basis, RngStream(1, 2), 1e-2);
    for (auto scheme : {FlowScheme::shear_split, FlowScheme::heun, FlowScheme::euler_maruyama}) {
        FlowOptions opt;
        opt.scheme = scheme;
        opt.track_jacobian = true;
        auto map = integrate_characteristics(spec, driver, pts, 0.5, opt);
        CHECK(map.points == pts);
        for (std::size_t i = 0; i < map.size(); ++i) {
            auto J = map.jacobian(i);
            CHECK(J[0] == 1.0);
            CHECK(J[1] == 0.0);
            CHECK(J[2] == 0.0);
            CHECK(J[3] == 1.0);
        }
    }

    auto active = NoiseSpec::uniform_shells(2, 2, 1.0, 1.0);
    auto b2 = make_basis(active);
    std::vector<NoiseIncrement> zeros(10, sample_increment(b2, 0.0, RngStream(), 0));
    for (auto& z : zeros) z.dt = 0.1;
    auto zd = NoiseDriver::recorded(b2, zeros);
    CHECK(integrate_characteristics(active, zd, pts, 1.0).points == pts);

    auto no_jac = integrate_characteristics(active, zd, pts, 1.0);
    CHECK_THROWS_AS(no_jac.jacobian(0), InputError);
    CHECK_THROWS_AS(integrate_characteristics(active, zd, pts, 1.05), InputError);
}

TEST_CASE("Ito and Stratonovich one-step schemes converge together") {
    auto spec = NoiseSpec::uniform_shells(2, 1, 1.0, 0.1);
    auto basis = make_basis(spec);
    auto pts = cloud(256, 2);
    // Same Brownian path at every resolution: coarse increments are sums of fine ones.
    const int finest = 14;
    std::vector<NoiseIncrement> fine;
    const RngStream stream(31, 4);
    for (int s = 0; s < (1 << finest) / 2; ++s) fine.push_back(sample_increment(basis, std::ldexp(1.0, -finest), stream, s));
    auto coarsen = [&](int level) {
        const int group = 1 << (finest - level);
        std::vector<NoiseIncrement> out;
        for (std::size_t s = 0; s < fine.size(); s += group) {
            NoiseIncrement inc;
            inc.dt = std::ldexp(1.0, -level);
            inc.values.assign(basis.channels(), 0.0);
            for (int g = 0; g < group; ++g) {
                for (std::size_t c = 0; c < inc.values.size(); ++c) inc.values[c] += fine[s + g].values[c];
            }
            out.push_back(inc);
        }
        return out;
    };
    // Pathwise the two schemes differ by mean-zero second-order terms, so the
    // gap shrinks like dt^{1/2} for this non-commutative noise.
    std::vector<double> levels, gaps;
    for (int level : {6, 7, 8, 9, 10, 11}) {
        auto driver = NoiseDriver::recorded(basis, coarsen(level));
        FlowOptions em, heun;
        em.scheme = FlowScheme::euler_maruyama;
        heun.scheme = FlowScheme::heun;
        auto a = integrate_characteristics(spec, driver, pts, 0.5, em);
        auto b = integrate_characteristics(spec, driver, pts, 0.5, heun);
        double ms = 0.0;
        for (std::size_t i = 0; i < a.points.size(); ++i) {
            double d = a.points[i] - b.points[i];
            d -= std::round(d);
            ms += d * d;
        }
        levels.push_back(level);
        gaps.push_back(std::sqrt(ms / a.points.size()));
    }
    // Least-squares slope of log2(gap) against log2(dt) = -level.
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        mx += -levels[i];
        my += std::log2(gaps[i]);
    }
    mx /= gaps.size();
    my /= gaps.size();
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < gaps.size(); ++i) {
        sxy += (-levels[i] - mx) * (std::log2(gaps[i]) - my);
        sxx += (-levels[i] - mx) * (-levels[i] - mx);
    }
    const double order = sxy / sxx;
    CHECK(order > 0.35);
    CHECK(order < 0.8);
    CHECK(gaps.back() < 0.4 * gaps.front());
}

TEST_CASE("volume preservation and Jacobian product rule") {
    auto spec = NoiseSpec::uniform_shells(2, 1, 1.0, 0.3);
    auto basis = make_basis(spec);
    auto pts = cloud(200, 3);
    auto driver = NoiseDriver::white(basis, RngStream(8, 0), 1e-3);
    FlowOptions opt;
    opt.track_jacobian = true;
    auto map = integrate_characteristics(spec, driver, pts, 1.0, opt);
    CHECK(map.max_volume_defect() <= 1e-6);
    for (double d : map.step_determinants) CHECK(std::abs(d - 1.0) <= 1e-12);

    // D phi(t+s)(x) = D phi_s(phi_t(x)) D phi_t(x) for a two-leg run.
    auto leg1 = integrate_characteristics(spec, driver, pts, 0.4, opt);
    auto leg2 = integrate_characteristics(spec, driver, leg1.points, 0.6, opt, 400);
    CHECK(torus_sup_distance(leg2.points, map.points) < 1e-9);
    for (std::size_t i = 0; i < map.size(); ++i) {
        auto A = leg2.jacobian(i), B = leg1.jacobian(i), C = map.jacobian(i);
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                const double prod = A[a * 2] * B[b] + A[a * 2 + 1] * B[2 + b];
                CHECK(prod == doctest::Approx(C[a * 2 + b]).epsilon(1e-8).scale(1.0));
            }
        }
    }
}

TEST_CASE("Heun Jacobian tracks the variational equation") {
    // Finite-difference check of the tracked Jacobian.
    auto spec = NoiseSpec::uniform_shells(2, 2, 1.0, 0.3);
    auto basis = make_basis(spec);
    auto driver = NoiseDriver::white(basis, RngStream(4, 4), 1e-3);
    std::vector<double> x = {0.31, 0.72};
    FlowOptions opt;
    opt.scheme = FlowScheme::heun;
    opt.track_jacobian = true;
    auto map = integrate_characteristics(spec, driver, x, 0.2, opt);
    const double h = 1e-6;
    for (int b = 0; b < 2; ++b) {
        auto xp = x, xm = x;
        xp[b] += h;
        xm[b] -= h;
        auto p = integrate_characteristics(spec, driver, xp, 0.2, opt).points;
        auto m = integrate_characteristics(spec, driver, xm, 0.2, opt).points;
        for (int a = 0; a < 2; ++a) {
            double d = p[a] - m[a];
            d -= std::round(d);
            CHECK(d / (2 * h) == doctest::Approx(map.jacobian(0)[a * 2 + b]).epsilon(1e-6));
        }
    }
}

TEST_CASE("backward integration inverts the forward shear flow") {
    auto spec = NoiseSpec::uniform_shells(2, 4, 1.0, 0.2);
    auto basis = make_basis(spec);
    auto driver = NoiseDriver::white(basis, RngStream(11, 0), 1e-3);
    auto pts = cloud(100, 5);
    auto fwd = integrate_characteristics(spec, driver, pts, 0.5);
    auto back = integrate_backward(spec, driver, fwd.points, 0.5);
    CHECK(torus_sup_distance(back.points, pts) < 1e-9);
}

TEST_CASE("pull-back transport") {
    TorusGrid g(2, 64);
    auto spec = NoiseSpec::uniform_shells(2, 4, 1.0, 0.05);
    auto basis = make_basis(spec);
    auto driver = NoiseDriver::white(basis, RngStream(12, 0), 1e-3);

    SpectralField u0 = SpectralField::constant(g, 0.0);
    u0.set_mode({1, 0}, 0.5);
    u0.set_mode({0, 2}, Complex(0.1, 0.2));
    u0.set_mode({1, -1}, 0.25);

    auto zero_spec = NoiseSpec::uniform_shells(2, 4, 1.0, 0.0);
    auto still = transport_scalar(u0, zero_spec, driver, 0.2);
    for (std::size_t f = 0; f < g.size(); ++f) CHECK(std::abs(still.at(f) - u0.at(f)) < 1e-14);

    auto c = transport_scalar(SpectralField::constant(g, 2.0), spec, driver, 0.2);
    CHECK(c.at(0).real() == doctest::Approx(2.0).epsilon(1e-14));
    c.at(0) = 0.0;
    CHECK(c.max_abs() < 1e-14);

    auto u1 = transport_scalar(u0, spec, driver, 1.0);
    const double ratio = l2_norm(u1) / l2_norm(u0);
    CHECK(std::abs(ratio - 1.0) <= 1e-3);
    // Extremes preserved up to evaluation error.
    auto p0 = to_physical(u0), p1 = to_physical(u1);
    const auto [lo0, hi0] = std::minmax_element(p0.values.begin(), p0.values.end());
    const auto [lo1, hi1] = std::minmax_element(p1.values.begin(), p1.values.end());
    CHECK(*hi1 <= *hi0 + 1e-2);
    CHECK(*lo1 >= *lo0 - 1e-2);
}

TEST_CASE("Wong-Zakai flows approach the Stratonovich flow") {
    auto spec = NoiseSpec::uniform_shells(2, 1, 1.0, 0.1);
    auto basis = make_basis(spec);
    const RngStream stream(21, 6);
    const int base = 12;
    auto pts = cloud(64, 6);
    auto reference = integrate_characteristics(spec, NoiseDriver::white(basis, stream, std::ldexp(1.0, -base)), pts, 0.5);
    std::vector<double> gaps;
    for (int m : {4, 6, 8}) {
        auto path = std::make_shared<WongZakaiPath>(basis, 0.5, m, stream, base);
        FlowOptions opt;
        opt.ode_dt = std::ldexp(1.0, -base);
        auto wz = integrate_characteristics(spec, NoiseDriver::wong_zakai(basis, path), pts, 0.5, opt);
        gaps.push_back(torus_sup_distance(wz.points, reference.points));
    }
    CHECK(gaps[1] < gaps[0]);
    CHECK(gaps[2] < gaps[1]);
}
