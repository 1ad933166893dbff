#pragma once

#include <span>
#include <vector>

#include "tnlab/field.hpp"

namespace tnlab {

/// Homogeneous Sobolev norm (sum_{k != 0} |2 pi k|^{2s} |u(k)|^2)^{1/2}, summed over components.
/// The mean mode is ignored. Throws InputError on non-finite coefficients.
double sobolev_norm(const SpectralField& u, double s);

/// Full L^2 norm including the mean mode.
double l2_norm(const SpectralField& u);

/// Real L^2 inner product of two fields of the same rank.
double inner_product(const SpectralField& a, const SpectralField& b);

/// Coefficientwise product W(k) rho(k): the torus convolution W * rho.
SpectralField convolve(const SpectralField& W, const SpectralField& rho);

SpectralField gradient(const SpectralField& u);
SpectralField divergence(const SpectralField& v);
SpectralField laplacian(const SpectralField& u);

/// Zeroes every coefficient with some |k_i| > M/3. Idempotent.
SpectralField dealias(SpectralField u);
/// Zeroes Nyquist coefficients.
void zero_nyquist(SpectralField& u);

/// Point samples on the grid nodes. Throws InputError if the coefficients are
/// not conjugate-symmetric to 1e-10 relative.
PhysicalField to_physical(const SpectralField& u);
/// Fourier coefficients of real samples, symmetrised with Nyquist modes zeroed.
SpectralField to_spectral(const PhysicalField& samples);

/// Dealiased pointwise product of a scalar field with a scalar or vector field.
SpectralField multiply(const SpectralField& scalar, const SpectralField& other);

/// Multiplies every coefficient u(k) by factor(k) given as a per-flat-index table.
void apply_multiplier(SpectralField& u, std::span<const double> factor);

/// Evaluates a real scalar trigonometric series at arbitrary points of the torus
/// by direct summation over its nonzero modes.
class PointEvaluator {
public:
    explicit PointEvaluator(const SpectralField& u, int component = 0);

    double operator()(std::span<const double> x) const;
    /// Evaluates at `count` points stored contiguously (x0_0..x0_{d-1}, x1_0, ...).
    void evaluate(std::span<const double> points, std::span<double> out) const;

    std::size_t mode_count() const { return coeffs_.size(); }

private:
    int dim_;
    int kmax_;
    double mean_;
    std::vector<int> modes_;        // half-lattice wavevectors, dim_ per mode
    std::vector<Complex> coeffs_;   // matching coefficients
};

}  // namespace tnlab
