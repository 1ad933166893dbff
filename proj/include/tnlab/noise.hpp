#pragma once

#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

#include "tnlab/field.hpp"
#include "tnlab/rng.hpp"

namespace tnlab {

/// Radial coloring theta as a function of the integer |k|^2.
struct Coloring {
    enum class Kind { table, power_law };

    Kind kind = Kind::table;
    /// (|k|^2, theta) pairs; shells not listed carry theta = 0.
    std::vector<std::pair<int, double>> table;
    /// theta_k = amplitude * |k|^{-exponent}
    double amplitude = 0.0;
    double exponent = 0.0;

    double theta(int k_squared) const;

    static Coloring shells(std::vector<std::pair<int, double>> entries);
    static Coloring power_law(double amplitude, double exponent);
};

/// Divergence-free transport noise: coloring, truncation radius n and intensity K.
/// Modes with 0 < |k| <= n and theta_k != 0 are active.
struct NoiseSpec {
    int dim = 2;
    Coloring coloring;
    int truncation = 1;
    double intensity = 0.0;
    /// Regularity the coloring is meant to have (theta in h^alpha); recorded, not enforced.
    double declared_alpha = 0.0;

    /// theta = value on every shell with |k|^2 <= radius_squared.
    static NoiseSpec uniform_shells(int dim, int radius_squared, double value, double intensity);
};

/// One active primary mode with its orthonormal basis of k-perp.
struct NoiseMode {
    std::vector<int> k;
    double theta = 0.0;
    /// d-1 unit vectors, each of length d, row-major.
    std::vector<double> basis;

    std::span<const double> vector(int j, int dim) const {
        return {basis.data() + static_cast<std::size_t>(j) * dim, static_cast<std::size_t>(dim)};
    }
};

/// Orthonormal bases a_k^(j) on the primary half-lattice; a_{-k} = a_k by reflection.
struct ModeBasis {
    int dim = 2;
    std::vector<NoiseMode> modes;

    std::size_t channels() const { return modes.size() * static_cast<std::size_t>(dim - 1); }
};

ModeBasis make_basis(const NoiseSpec& spec);

/// Orthonormal basis of k-perp following the library convention.
std::vector<double> perpendicular_basis(std::span<const int> k);

/// Complex Brownian increments dB^(j)(k) on primary modes over one step.
/// The values on -k are the conjugates and are never stored.
struct NoiseIncrement {
    double dt = 0.0;
    std::vector<Complex> values;  // modes.size() * (d-1), index p * (d-1) + j
};

NoiseIncrement sample_increment(const ModeBasis& basis, double dt, const RngStream& stream, std::uint64_t step);

/// Complex velocity amplitude of one primary mode: v(x) = 2 Re(c e_k(x)).
inline constexpr int kMaxDim = 6;

struct VelocityMode {
    std::array<int, kMaxDim> k{};
    std::array<Complex, kMaxDim> c{};
};

/// Mode amplitudes sqrt(2) K theta_k sum_j a_k^(j) dB^(j)(k), scaled by `scale`.
std::vector<VelocityMode> velocity_modes(const NoiseSpec& spec, const ModeBasis& basis,
                                         std::span<const Complex> increments, double scale = 1.0);

/// Real divergence-free field sqrt(2) K sum_k sum_j theta_k a_k^(j) e_k dB^(j)(k).
/// Throws InputError if some active mode lies outside the grid's dealiased band.
SpectralField velocity_field(const NoiseSpec& spec, const ModeBasis& basis, const NoiseIncrement& incr,
                             const TorusGrid& grid);

/// Q = sum over active k (both signs) of theta_k^2 (I - k k^T / |k|^2), row-major d x d.
std::vector<double> covariance_matrix(const NoiseSpec& spec);

/// Isotropic part q with Q = q I for radial colorings: ((d-1)/d) ||theta||^2_{l2}.
double covariance_scalar(const NoiseSpec& spec);

/// sum over active k of |k|^{2 alpha} theta_k^2.
double h_norm_squared(const NoiseSpec& spec, double alpha);
inline double h_norm(const NoiseSpec& spec, double alpha);

/// Dyadic piecewise-linear interpolation of the Brownian motions with breakpoints
/// {0} U 2^{-m} N, built from the same increments sample_increment produces at the
/// base resolution 2^{-base_level}.
class WongZakaiPath {
public:
    WongZakaiPath(const ModeBasis& basis, double horizon, int level, const RngStream& stream, int base_level);

    int level() const { return level_; }
    int base_level() const { return base_level_; }
    double horizon() const { return horizon_; }
    double segment_length() const { return segment_; }
    int segments() const { return static_cast<int>(breakpoints_.size()) - 1; }
    std::size_t channels() const { return channels_; }

    std::span<const Complex> breakpoint(int i) const { return breakpoints_[i]; }
    /// B_m(t) for every channel.
    std::vector<Complex> value(double t) const;
    /// Constant derivative on segment i.
    std::vector<Complex> slope(int segment) const;
    int segment_of(double t) const;

private:
    int level_;
    int base_level_;
    double horizon_;
    double segment_;
    std::size_t channels_;
    std::vector<std::vector<Complex>> breakpoints_;
};

WongZakaiPath wong_zakai(const ModeBasis& basis, double horizon, int level, const RngStream& stream,
                         int base_level);

inline double h_norm(const NoiseSpec& spec, double alpha) {
    return std::sqrt(h_norm_squared(spec, alpha));
}

}  // namespace tnlab
