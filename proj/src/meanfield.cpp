#include "tnlab/meanfield.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tnlab/errors.hpp"
#include "tnlab/spectral.hpp"

namespace tnlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kZeroTol = 1e-12;

void add_cosine_product(SpectralField& W, const std::vector<int>& k, double amplitude) {
    const int d = static_cast<int>(k.size());
    // prod_i cos(2 pi k_i x_i) = 2^{-d} sum over sign patterns of e_{(s_i k_i)}.
    const double coeff = amplitude * std::ldexp(1.0, -d);
    std::vector<int> pattern(d);
    for (int mask = 0; mask < (1 << d); ++mask) {
        for (int i = 0; i < d; ++i) pattern[i] = (mask >> i & 1) ? -k[i] : k[i];
        if (!W.grid().contains(pattern)) throw InputError("fourier_potential: mode outside the grid");
        W.at(W.grid().flat_index(pattern)) += coeff;
    }
}

void require_product_vector(const std::vector<int>& k, int dim) {
    if (static_cast<int>(k.size()) != dim) throw InputError("potential: wavevector dimension mismatch");
    for (int v : k) {
        if (v == 0) throw InputError("potential: named forms need every k_i != 0");
    }
}

SpectralField gibbs(const SpectralField& rho, double nu, const SpectralField& W) {
    auto phys = to_physical(convolve(W, rho));
    auto vals = phys.component(0);
    const double lo = *std::min_element(vals.begin(), vals.end());
    double sum = 0.0;
    for (double& v : vals) {
        v = std::exp(-(v - lo) / nu);
        sum += v;
    }
    const double mean = sum / static_cast<double>(vals.size());
    for (double& v : vals) v /= mean;
    auto out = to_spectral(phys);
    out.at(0) = 1.0;
    return out;
}

}  // namespace

PotentialSpec PotentialSpec::single_mode(std::vector<int> k) {
    PotentialSpec s;
    s.form = Form::single_mode;
    s.k = std::move(k);
    return s;
}

PotentialSpec PotentialSpec::two_mode(std::vector<int> l) {
    PotentialSpec s;
    s.form = Form::two_mode;
    s.k = std::move(l);
    return s;
}

double normalization_constant(const PotentialSpec& spec, int dim) {
    switch (spec.form) {
        case PotentialSpec::Form::single_mode: return std::pow(2.0, 0.5 * dim);
        case PotentialSpec::Form::two_mode: return std::pow(2.0, 0.5 * (dim - 1));
        case PotentialSpec::Form::explicit_table: return 1.0;
    }
    return 1.0;
}

SpectralField fourier_potential(const PotentialSpec& spec, const TorusGrid& grid) {
    const int d = grid.dim();
    SpectralField W = SpectralField::scalar(grid);
    switch (spec.form) {
        case PotentialSpec::Form::single_mode:
            require_product_vector(spec.k, d);
            add_cosine_product(W, spec.k, -normalization_constant(spec, d));
            break;
        case PotentialSpec::Form::two_mode: {
            require_product_vector(spec.k, d);
            std::vector<int> k2(spec.k);
            for (int& v : k2) v *= 2;
            const double N = normalization_constant(spec, d);
            add_cosine_product(W, spec.k, -N);
            add_cosine_product(W, k2, -N);
            break;
        }
        case PotentialSpec::Form::explicit_table:
            for (const auto& [k, value] : spec.table) {
                if (static_cast<int>(k.size()) != d) throw InputError("potential: table wavevector dimension mismatch");
                if (!std::isfinite(value)) throw InputError("potential: non-finite coefficient");
                if (!grid.contains(k)) throw InputError("potential: table mode outside the grid");
                W.set_mode(k, value);
            }
            break;
    }
    return W;
}

CriterionResult phase_transition_criterion(const SpectralField& W) {
    CriterionResult r;
    const auto& g = W.grid();
    for (std::size_t f = 1; f < g.size(); ++f) {
        if (W.at(f).real() < -kZeroTol) {
            auto k = g.wavevector(f);
            r.witnesses.emplace_back(k.begin(), k.end());
        }
    }
    r.has_negative_mode = !r.witnesses.empty();
    return r;
}

std::vector<Eigenpair> spectrum_L(const SpectralField& W, double nu, double kmax) {
    if (!(nu > 0.0)) throw InputError("spectrum_L: nu must be positive");
    const auto& g = W.grid();
    std::vector<Eigenpair> out;
    for (std::size_t f = 1; f < g.size(); ++f) {
        if (g.is_nyquist(f)) continue;
        const int k2 = g.norm_squared(f);
        if (k2 > kmax * kmax) continue;
        auto k = g.wavevector(f);
        out.push_back({{k.begin(), k.end()}, -kTwoPi * kTwoPi * k2 * (nu + W.at(f).real())});
    }
    return out;
}

double max_eigenvalue(const SpectralField& W, double nu) {
    const auto& g = W.grid();
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t f = 1; f < g.size(); ++f) {
        if (g.is_nyquist(f)) continue;
        best = std::max(best, -kTwoPi * kTwoPi * g.norm_squared(f) * (nu + W.at(f).real()));
    }
    return best;
}

double linear_instability_threshold(const SpectralField& W) {
    double t = 0.0;
    for (std::size_t f = 1; f < W.grid().size(); ++f) t = std::max(t, -W.at(f).real());
    return t;
}

double free_energy(const SpectralField& rho, double nu, const SpectralField& W) {
    if (!rho.is_scalar() || !W.is_scalar()) throw InputError("free_energy: scalar fields required");
    if (rho.grid() != W.grid()) throw InputError("free_energy: grid mismatch");
    const auto phys = to_physical(rho);
    double entropy = 0.0;
    for (double v : phys.values) {
        if (!(v > 0.0)) throw InputError("free_energy: density must be positive at every node");
        entropy += v * std::log(std::max(v, 1e-12));
    }
    entropy /= static_cast<double>(phys.values.size());
    double interaction = 0.0;
    for (std::size_t f = 0; f < W.grid().size(); ++f) interaction += W.at(f).real() * std::norm(rho.at(f));
    return nu * entropy + 0.5 * interaction;
}

FixedPointResult steady_state_fixed_point(double nu, const SpectralField& W, const SpectralField& rho_init,
                                          double damping, double tol, int max_iter) {
    if (!(nu > 0.0)) throw InputError("fixed point: nu must be positive");
    if (!(damping > 0.0 && damping <= 1.0)) throw InputError("fixed point: damping must lie in (0, 1]");
    if (rho_init.grid() != W.grid()) throw InputError("fixed point: grid mismatch");
    FixedPointResult r{rho_init, false, 0, std::numeric_limits<double>::infinity()};
    for (int it = 1; it <= max_iter; ++it) {
        auto next = gibbs(r.rho, nu, W);
        next *= damping;
        next += (1.0 - damping) * r.rho;
        r.residual = l2_norm(next - r.rho);
        r.rho = std::move(next);
        r.iterations = it;
        if (!std::isfinite(r.residual)) break;
        if (r.residual < tol) {
            r.converged = true;
            break;
        }
    }
    return r;
}

double dimension_constant(int dim) {
    if (dim < 2) throw InputError("dimension_constant: d >= 2 required");
    const double pre = (dim - 1.0) / dim;
    if (dim == 2) return pre / 32.0;
    if (dim == 3) return pre * 3.0 / 160.0;
    return pre * (dim - 3.0) / (10.0 * dim * (dim - 1.0));
}

SplitPoint split_point(const SpectralField& W, double nu, double nu_prime, double theta_hm1_squared, double C_d) {
    SplitPoint p;
    p.nu_prime = nu_prime;
    const auto& g = W.grid();
    for (std::size_t f = 1; f < g.size(); ++f) {
        const double shifted = nu_prime + W.at(f).real();
        if (shifted < 0.0) {
            auto k = g.wavevector(f);
            p.unstable.emplace_back(k.begin(), k.end());
            p.C_W = std::max(p.C_W, -shifted * g.norm_squared(f));
        }
    }
    const double denom = theta_hm1_squared * C_d;
    const double excess = p.C_W - (nu - nu_prime);
    if (excess <= 0.0) {
        p.K_squared = 0.0;
    } else {
        p.K_squared = denom > 0.0 ? excess / denom : std::numeric_limits<double>::infinity();
    }
    return p;
}

StabilityReport stability_report(const SpectralField& W, double nu, const NoiseSpec& noise) {
    if (!(nu > 0.0)) throw InputError("stability_report: nu must be positive");
    StabilityReport r;
    r.nu = nu;
    r.dim = W.grid().dim();
    if (noise.dim != r.dim) throw InputError("stability_report: noise dimension mismatch");
    r.C_d = dimension_constant(r.dim);
    r.theta_hm1_squared = h_norm_squared(noise, -1.0);

    constexpr int kPoints = 200;
    for (int i = 1; i <= kPoints; ++i) {
        r.scan.push_back(split_point(W, nu, nu * i / (kPoints + 1.0), r.theta_hm1_squared, r.C_d));
    }
    auto argmin = [&] {
        std::size_t best = 0;
        for (std::size_t i = 1; i < r.scan.size(); ++i) {
            const auto& a = r.scan[i];
            const auto& b = r.scan[best];
            // Ties go to the larger nu', which has the smaller unstable set.
            if (a.K_squared < b.K_squared || (a.K_squared == b.K_squared && a.nu_prime > b.nu_prime)) best = i;
        }
        return best;
    };
    const std::size_t coarse = argmin();
    const double lo = r.scan[coarse].nu_prime - nu / (kPoints + 1.0);
    const double hi = r.scan[coarse].nu_prime + nu / (kPoints + 1.0);
    for (int i = 1; i <= kPoints; ++i) {
        const double np = lo + (hi - lo) * i / (kPoints + 1.0);
        if (np > 0.0 && np < nu) r.scan.push_back(split_point(W, nu, np, r.theta_hm1_squared, r.C_d));
    }
    r.best = r.scan[argmin()];
    r.K_crit = std::sqrt(r.best.K_squared);
    r.spectrum = spectrum_L(W, nu, std::sqrt(2.0) * W.grid().points());
    r.max_eigenvalue = max_eigenvalue(W, nu);
    return r;
}

double gamma_star(const StabilityReport& report, double K) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& p : report.scan) {
        best = std::max(best, -p.C_W + (report.nu - p.nu_prime) + report.theta_hm1_squared * report.C_d * K * K);
    }
    return best;
}

double lyapunov_bound(const StabilityReport& report, double K) { return -kTwoPi * kTwoPi * gamma_star(report, K); }

}  // namespace tnlab
