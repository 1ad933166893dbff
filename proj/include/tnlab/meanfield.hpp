#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "tnlab/noise.hpp"

namespace tnlab {

/// Named interaction potentials, normalised to unit L2 norm.
struct PotentialSpec {
    enum class Form { single_mode, two_mode, explicit_table };

    Form form = Form::single_mode;
    /// single_mode: the wavevector k; two_mode: the wavevector l (the second mode is 2l).
    std::vector<int> k;
    /// explicit_table: (wavevector, real coefficient) pairs; the -k entries are implied.
    std::vector<std::pair<std::vector<int>, double>> table;

    static PotentialSpec single_mode(std::vector<int> k);
    static PotentialSpec two_mode(std::vector<int> l);
};

/// N such that W = -N sum of the cosine products has unit L2 norm:
/// 2^{d/2} for a single product, 2^{(d-1)/2} for two.
double normalization_constant(const PotentialSpec& spec, int dim);

/// Exact Fourier coefficients of the potential on `grid`.
SpectralField fourier_potential(const PotentialSpec& spec, const TorusGrid& grid);

struct CriterionResult {
    bool has_negative_mode = false;
    std::vector<std::vector<int>> witnesses;
};

/// True iff some W(k) < -1e-12 for k != 0.
CriterionResult phase_transition_criterion(const SpectralField& W);

struct Eigenpair {
    std::vector<int> k;
    double lambda = 0.0;
};

/// lambda_k = -|2 pi k|^2 (nu + W(k)) for 0 < |k| <= kmax, in grid order.
std::vector<Eigenpair> spectrum_L(const SpectralField& W, double nu, double kmax);

/// Largest eigenvalue over the retained band.
double max_eigenvalue(const SpectralField& W, double nu);

/// Smallest nu for which every lambda_k <= 0: max_k (-W(k)), or 0.
double linear_instability_threshold(const SpectralField& W);

/// E[rho] = nu int rho log rho + 1/2 sum_k W(k) |rho(k)|^2. Throws InputError when
/// rho is not strictly positive at the grid nodes.
double free_energy(const SpectralField& rho, double nu, const SpectralField& W);

struct FixedPointResult {
    SpectralField rho;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

/// rho <- (1 - damping) rho + damping exp(-(W * rho)/nu) / Z until the L2 step is below tol.
FixedPointResult steady_state_fixed_point(double nu, const SpectralField& W, const SpectralField& rho_init,
                                          double damping = 0.5, double tol = 1e-10, int max_iter = 10000);

/// ((d-1)/d) * {1/32, 3/160, (d-3)/(10 d (d-1))} for d = 2, 3, >= 4.
double dimension_constant(int dim);

struct SplitPoint {
    double nu_prime = 0.0;
    std::vector<std::vector<int>> unstable;
    double C_W = 0.0;
    /// max(0, (C_W - (nu - nu')) / (||theta||^2_{h^-1} C_d))
    double K_squared = 0.0;
};

struct StabilityReport {
    double nu = 0.0;
    int dim = 2;
    double C_d = 0.0;
    double theta_hm1_squared = 0.0;
    /// Grid points nu' = nu i / 201 followed by one refinement around the minimiser.
    std::vector<SplitPoint> scan;
    SplitPoint best;
    double K_crit = 0.0;
    std::vector<Eigenpair> spectrum;
    double max_eigenvalue = 0.0;
};

/// Unstable set, growth constant and the noise-intensity threshold over a nu' grid.
StabilityReport stability_report(const SpectralField& W, double nu, const NoiseSpec& noise);

/// Split point for a single nu' (the grid-independent formula).
SplitPoint split_point(const SpectralField& W, double nu, double nu_prime, double theta_hm1_squared, double C_d);

/// gamma*(K) = max over the scanned nu' of -C_W + (nu - nu') + ||theta||^2_{h^-1} C_d K^2.
double gamma_star(const StabilityReport& report, double K);

/// Upper bound -(2 pi)^2 gamma*(K) on the top Lyapunov exponent.
double lyapunov_bound(const StabilityReport& report, double K);

}  // namespace tnlab
