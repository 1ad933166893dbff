#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tnlab/flow.hpp"
#include "tnlab/spde.hpp"

namespace tnlab {

struct ParticleEnsemble {
    int dim = 2;
    /// N points in [0,1)^d, dim per point.
    std::vector<double> positions;
    /// Independent kicks sqrt(2 nu) dB^i.
    RngStream idiosyncratic;

    std::size_t size() const { return positions.size() / static_cast<std::size_t>(dim); }
};

/// N particles drawn from a positive density by inverse CDF, coordinate by coordinate
/// (marginal of x_1, then x_2 given x_1, ...). Deterministic given `rng`.
ParticleEnsemble draw_particles(const SpectralField& density, std::size_t N, const RngStream& rng,
                                const RngStream& idiosyncratic);

/// Fourier table mu(k) = (1/N) sum_i e_{-k}(X^i) for all |k| <= kmax.
struct ModeTable {
    int dim = 2;
    std::vector<std::vector<int>> k;
    std::vector<Complex> values;
};

/// The wavevectors with |k| <= kmax in a fixed order (zero first).
std::vector<std::vector<int>> low_modes(int dim, double kmax);

ModeTable empirical_modes(std::span<const double> positions, int dim, double kmax);

struct ParticleConfig {
    double T = 0.5;
    double dt = 1e-3;
    int record_every = 10;
    double kmax = 2.0;
    /// Scheme for the common transport kick.
    FlowScheme common_scheme = FlowScheme::heun;
    int workers = 0;
};

struct ParticleTrajectory {
    std::vector<double> times;
    std::vector<ModeTable> modes;
    /// Identity of the common-noise driver the run used.
    RngStream common_stream;
    double common_dt = 0.0;
};

/// Interaction force -(grad W * mu)(x) from the nonzero coefficients of W.
class ModeForce {
public:
    explicit ModeForce(const SpectralField& W);
    /// Updates the empirical coefficients the force depends on.
    void update(std::span<const double> positions);
    /// Force at x (d components written to out).
    void evaluate(std::span<const double> x, std::span<double> out) const;
    std::size_t modes() const { return k_.size(); }

private:
    int dim_;
    std::vector<std::vector<int>> k_;
    std::vector<double> w_;
    std::vector<Complex> mu_;
};

/// dX^i = -(1/N) sum_{j != i} grad W(X^i - X^j) dt + sqrt(2 nu) dB^i + transport kick from the
/// common driver (the same velocity modes the SPDE solvers use). Drift and idiosyncratic
/// noise take an Euler step; the common kick uses config.common_scheme.
ParticleTrajectory simulate_particles(ParticleEnsemble& ens, const ModelParams& params, const ParticleConfig& config,
                                      const NoiseDriver& common);

struct ParticleComparison {
    /// max over samples and 0 < |k| <= kmax of |mu(t, k) - rho(t, k)|.
    double max_error = 0.0;
    std::vector<double> times;
    std::vector<double> per_sample;
};

/// The SPDE run must have recorded fields at the particle sample times and been
/// driven by `spde_driver`; throws InputError when the common streams differ.
ParticleComparison compare_to_spde(const ParticleTrajectory& particles, const Trajectory& spde,
                                   const NoiseDriver& spde_driver);

}  // namespace tnlab
