#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "tnlab/noise.hpp"

namespace tnlab {

/// Source of Brownian increments for the characteristics and the solvers.
///
/// White drivers draw step n from a counter-based stream, so any step can be
/// regenerated on demand (backward integration, shared realizations). Recorded
/// drivers replay a fixed list. Wong-Zakai drivers wrap a piecewise-linear path.
class NoiseDriver {
public:
    enum class Kind { white, recorded, wong_zakai };

    static NoiseDriver white(ModeBasis basis, RngStream stream, double dt);
    /// White driver whose step n is the sum of base steps n*group ... n*group+group-1
    /// of a driver with step base_dt, so drivers with different groups share one path.
    static NoiseDriver white(ModeBasis basis, RngStream stream, double base_dt, std::uint32_t group);
    static NoiseDriver recorded(ModeBasis basis, std::vector<NoiseIncrement> increments);
    static NoiseDriver wong_zakai(ModeBasis basis, std::shared_ptr<const WongZakaiPath> path);

    Kind kind() const { return kind_; }
    const ModeBasis& basis() const { return basis_; }
    /// Step length of white/recorded drivers; segment length of Wong-Zakai drivers.
    double dt() const { return dt_; }
    /// Number of available steps, or 0 for unbounded white drivers.
    std::uint64_t steps_available() const;
    NoiseIncrement increment(std::uint64_t step) const;
    const WongZakaiPath& path() const { return *path_; }
    const RngStream& stream() const { return stream_; }

private:
    Kind kind_ = Kind::white;
    ModeBasis basis_;
    RngStream stream_;
    double dt_ = 0.0;
    double base_dt_ = 0.0;
    std::uint32_t group_ = 1;
    std::vector<NoiseIncrement> recorded_;
    std::shared_ptr<const WongZakaiPath> path_;
};

/// One-step schemes for dX = -sqrt(2) K sum theta a e_k(X) o dB.
enum class FlowScheme {
    /// Symmetric composition of the exact per-mode shear flows (Stratonovich, volume preserving).
    shear_split,
    /// Predictor-corrector (Stratonovich).
    heun,
    /// Euler-Maruyama (Ito); agrees in law because the Ito-Stratonovich drift vanishes.
    euler_maruyama,
};

struct FlowOptions {
    FlowScheme scheme = FlowScheme::shear_split;
    bool track_jacobian = false;
    /// Integration step for Wong-Zakai drivers (must divide the segment length).
    double ode_dt = 0.0;
};

/// Time-t map sampled at material points.
struct FlowMap {
    int dim = 2;
    double t = 0.0;
    bool backward = false;
    /// Positions in [0,1)^d, dim per point.
    std::vector<double> points;
    /// Row-major d x d Jacobians per point (empty unless tracked).
    std::vector<double> jacobians;
    /// Product of per-step Jacobian determinants (Liouville accumulation).
    std::vector<double> step_determinants;

    std::size_t size() const { return points.size() / static_cast<std::size_t>(dim); }
    bool has_jacobian() const { return !jacobians.empty(); }
    std::span<const double> point(std::size_t i) const { return {points.data() + i * dim, static_cast<std::size_t>(dim)}; }
    std::span<const double> jacobian(std::size_t i) const;
    /// det of the accumulated Jacobian matrix at point i.
    double determinant(std::size_t i) const;
    /// max_i |det D phi - 1|.
    double max_volume_defect() const;
};

/// Wraps every coordinate into [0, 1).
void wrap_points(std::span<double> points);

/// Torus distance max over points and coordinates of the periodic difference.
double torus_sup_distance(std::span<const double> a, std::span<const double> b);

/// Grid nodes of `grid` as a flat point list.
std::vector<double> grid_points(const TorusGrid& grid);

/// Advances `points` by one step with the given velocity modes (the increment
/// already folded in). With `jacobians` non-empty the per-point matrices are
/// left-multiplied by the step Jacobian and `dets` by its determinant.
void flow_step(std::span<const VelocityMode> modes, int dim, FlowScheme scheme, std::span<double> points,
               std::span<double> jacobians = {}, std::span<double> dets = {});

/// Exact inverse of a shear_split step.
void inverse_shear_step(std::span<const VelocityMode> modes, int dim, std::span<double> points);

/// phi(t_end, .) at the points. White and recorded drivers take steps of driver.dt();
/// t_end must be a multiple of it. `first_step` offsets the driver's step counter.
FlowMap integrate_characteristics(const NoiseSpec& spec, const NoiseDriver& driver, std::vector<double> points,
                                  double t_end, const FlowOptions& options = {}, std::uint64_t first_step = 0);

/// phi(t_end, .)^{-1} at the points, integrating the steps in reverse order.
/// shear_split inverts each step exactly; other schemes use the time-reversed increment.
FlowMap integrate_backward(const NoiseSpec& spec, const NoiseDriver& driver, std::vector<double> points,
                           double t_end, FlowScheme scheme = FlowScheme::shear_split, std::uint64_t first_step = 0);

/// u_t = u0 o phi_t^{-1} on the grid of u0, by trigonometric evaluation at the preimages.
SpectralField transport_scalar(const SpectralField& u0, const NoiseSpec& spec, const NoiseDriver& driver,
                               double t_end, FlowScheme scheme = FlowScheme::shear_split);

/// Number of driver steps covering t_end; throws InputError if t_end is not a multiple of dt.
std::uint64_t step_count(double t_end, double dt);

}  // namespace tnlab
