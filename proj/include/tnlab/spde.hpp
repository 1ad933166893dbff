#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tnlab/flow.hpp"

namespace tnlab {

/// Diffusivity, interaction potential and noise: the full problem definition.
struct ModelParams {
    double nu = 1.0;
    /// Real, even scalar potential on the solver grid.
    SpectralField W = SpectralField::scalar(TorusGrid(2, 8));
    NoiseSpec noise;

    /// Throws InputError unless nu > 0 and W is real, even and finite.
    void validate() const;
};

enum class Scheme {
    /// Ito Euler-Maruyama with an integrating factor for the linear diffusion.
    ito_em,
    /// ito_em plus the symmetrised second-order noise term 1/2 L(L u) - kappa Laplacian(u) dt.
    ito_milstein,
    /// Deterministic half-steps around an exact-transport step (shear characteristics).
    strang,
};

struct SolverConfig {
    TorusGrid grid{2, 64};
    double dt = 1e-3;
    Scheme scheme = Scheme::ito_em;
    double T = 1.0;
    /// Record diagnostics every this many steps (the initial state is always recorded).
    int record_every = 10;
    /// Abort when the L2 norm exceeds this cap.
    double blowup_cap = 1e3;
    bool record_fields = false;
    bool record_free_energy = false;
    /// Linear equations only: rescale the state to unit L2 norm every this many steps (0 = never).
    int renormalize_every = 0;
    /// Multiplies the deterministic part (time-rescaled skeleton).
    double deterministic_scale = 1.0;

    void validate() const;
};

struct Sample {
    double t = 0.0;
    /// Mean mode rho(0).
    double mass = 0.0;
    /// Minimum over grid nodes.
    double min_value = 0.0;
    /// ||rho - 1||_{H^-1} (or ||v||_{H^-1}) of the stored, possibly renormalized, state.
    double hm1 = 0.0;
    double l2 = 0.0;
    /// Logarithms of the true norms, including all renormalization factors.
    double log_hm1 = 0.0;
    double log_l2 = 0.0;
    double free_energy = std::numeric_limits<double>::quiet_NaN();
};

struct Trajectory {
    std::vector<Sample> samples;
    std::vector<SpectralField> fields;
    /// Accumulated log of the renormalization factors at the end of the run.
    double log_scale = 0.0;
    std::uint64_t steps = 0;
    /// Number of renormalizations performed.
    std::uint64_t renormalizations = 0;
    /// Final state (renormalized when renormalization is on).
    std::optional<SpectralField> final_state;
};

/// Linear transport operator u -> V . grad u for one set of velocity modes, restricted
/// to the dealiased band. Uses direct mode convolution when the velocity has few modes
/// and FFT products otherwise; both compute the same dealiased product.
class TransportOperator {
public:
    TransportOperator(const TorusGrid& grid, const ModeBasis& basis);

    /// out = V . grad u where V = sum_p 2 Re(c_p e_{k_p}).
    void apply(std::span<const VelocityMode> modes, const SpectralField& u, SpectralField& out) const;
    void apply_fft(std::span<const VelocityMode> modes, const SpectralField& u, SpectralField& out) const;
    bool sparse() const { return sparse_; }

private:
    TorusGrid grid_;
    bool sparse_;
    std::size_t modes_;
    // For mode p: flat index of k - k_p (plus) and k + k_p (minus), or npos.
    std::vector<std::size_t> shift_plus_;
    std::vector<std::size_t> shift_minus_;
    std::vector<std::size_t> band_;
    std::vector<int> wavevectors_;
};

/// Ito corrector kappa = K^2 q from the covariance of the truncated noise.
double ito_corrector(const NoiseSpec& spec);

/// d rho = [nu Lap rho + div(rho grad W * rho)] dt + sqrt(2) K div(rho o dxi).
Trajectory run_spde(const SpectralField& rho0, const ModelParams& params, const SolverConfig& cfg,
                    const NoiseDriver& driver);

/// d v = [nu Lap v + Lap W * v] dt + sqrt(2) K grad v o dxi, for mean-free v.
Trajectory run_linearized(const SpectralField& v0, const ModelParams& params, const SolverConfig& cfg,
                          const NoiseDriver& driver);

/// Velocity modes (per unit time) of a deterministic divergence-free control at time t.
using ControlPath = std::function<std::vector<VelocityMode>(double t)>;

/// Control given by the derivative of a Wong-Zakai path: frozen noise realization.
ControlPath wong_zakai_control(const NoiseSpec& spec, const ModeBasis& basis, std::shared_ptr<const WongZakaiPath> path);

/// d rho/dt = s [nu Lap rho + div(rho grad W * rho)] + div(rho h), with s = cfg.deterministic_scale.
/// Integrated with an integrating-factor fourth-order Runge-Kutta scheme.
Trajectory run_controlled(const SpectralField& rho0, const ModelParams& params, const ControlPath& control,
                          const SolverConfig& cfg);

/// d u = sqrt(2) K div(u o dxi): transport only.
Trajectory run_pure_transport(const SpectralField& u0, const NoiseSpec& spec, const SolverConfig& cfg,
                              const NoiseDriver& driver);

struct MixerResult {
    bool found = false;
    int candidate = -1;
    double achieved = 0.0;
    std::vector<double> tried;
};

/// Searches frozen Wong-Zakai realizations (level m, candidates drawn from `stream`)
/// for one whose controlled pure-transport run brings ||u(t1)||_{H^-1} below delta.
MixerResult extract_mixer(const SpectralField& u0, const NoiseSpec& spec, const SolverConfig& cfg, int level,
                          int candidates, double delta, const RngStream& stream);

}  // namespace tnlab
