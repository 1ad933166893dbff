#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "tnlab/meanfield.hpp"
#include "tnlab/rng.hpp"
#include "tnlab/spde.hpp"

namespace tnlab {

/// dX = diag(a, b) X dt + sqrt(2) K R X o dB on R^2, R = ((0, 1), (-1, 0)).
struct AcwSystem {
    double a = 1.0;
    double b = -2.0;
    double K = 0.0;
};

struct LyapunovEstimate {
    double value = 0.0;
    double std_error = 0.0;
    double horizon = 0.0;
    std::uint64_t renormalizations = 0;
    std::size_t ensemble = 0;
    /// Per-member growth rates.
    std::vector<double> members;
};

struct AcwOptions {
    double T = 200.0;
    /// 0 selects 1e-3 min(1, 1/K^2).
    double dt = 0.0;
    std::size_t ensemble = 32;
    /// Fixed initial vector; otherwise a uniformly random direction per member.
    std::optional<std::array<double, 2>> x0;
    int workers = 0;
};

double acw_default_dt(double K);

/// Heun integration with unit-time renormalization; member i uses rng.split(i, purpose::acw).
LyapunovEstimate acw_simulate(const AcwSystem& sys, const AcwOptions& options, const RngStream& rng);

/// Furstenberg-Khasminskii value: the angle psi = arg X solves
/// d psi = ((b - a)/2) sin(2 psi) dt - sqrt(2) K dB, whose stationary density is
/// proportional to exp(c cos 2 psi) with c = (a - b) / (4 K^2). Returns the
/// trapezoid quadrature of (a cos^2 + b sin^2) against it. Throws for K = 0.
double acw_fk_quadrature(const AcwSystem& sys, int angular_resolution = 4096);

struct SpdeLyapunovOptions {
    SolverConfig solver;
    std::size_t ensemble = 16;
    /// Renormalization period tau (a multiple of solver.dt).
    double tau = 1.0;
    int workers = 0;
};

struct SpdeLyapunovResult {
    LyapunovEstimate estimate;
    /// -(2 pi)^2 gamma* for the truncated noise of the run.
    double bound = 0.0;
    StabilityReport report;
};

/// Random mean-free unit-L2 direction built from the dealiased band (member stream).
SpectralField random_mean_free(const TorusGrid& grid, const RngStream& rng, int kmax = 4);

/// Growth rate of run_linearized around rho = 1, per member: log ||v(T)|| / T
/// with v0 = random_mean_free(.., stream.split(i, initial_data)) and white noise
/// from stream.split(i, common_noise).
SpdeLyapunovResult spde_top_lyapunov(const ModelParams& params, const SpdeLyapunovOptions& options,
                                     const RngStream& stream);

/// Mean and standard error of a sample.
std::pair<double, double> mean_stderr(const std::vector<double>& xs);

}  // namespace tnlab
