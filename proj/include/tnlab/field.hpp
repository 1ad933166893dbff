#pragma once

#include <span>
#include <vector>

#include "tnlab/grid.hpp"

namespace tnlab {

/// Real scalar or vector field on the torus, stored as Fourier coefficients.
///
/// Every component holds the full complex tensor over the grid's index set.
/// Realness is encoded by conjugate symmetry u(-k) = conj(u(k)); it is
/// enforced by the writers below, never assumed.
class SpectralField {
public:
    SpectralField(TorusGrid grid, int components);

    static SpectralField scalar(const TorusGrid& grid) { return SpectralField(grid, 1); }
    static SpectralField vector(const TorusGrid& grid) { return SpectralField(grid, grid.dim()); }
    /// Constant scalar field c.
    static SpectralField constant(const TorusGrid& grid, double c);

    const TorusGrid& grid() const { return grid_; }
    int components() const { return components_; }
    bool is_scalar() const { return components_ == 1; }

    std::span<Complex> component(int c) {
        return {data_.data() + static_cast<std::size_t>(c) * grid_.size(), grid_.size()};
    }
    std::span<const Complex> component(int c) const {
        return {data_.data() + static_cast<std::size_t>(c) * grid_.size(), grid_.size()};
    }
    Complex& at(std::size_t flat, int c = 0) { return data_[static_cast<std::size_t>(c) * grid_.size() + flat]; }
    Complex at(std::size_t flat, int c = 0) const { return data_[static_cast<std::size_t>(c) * grid_.size() + flat]; }

    /// Coefficient at wavevector k (zero when k is outside the retained set).
    Complex coefficient(std::span<const int> k, int c = 0) const;
    /// Sets u(k) = value and u(-k) = conj(value). For k = 0 only the real part is kept.
    void set_mode(std::span<const int> k, Complex value, int c = 0);
    void set_mode(std::initializer_list<int> k, Complex value, int c = 0) {
        std::vector<int> kv(k);
        set_mode(std::span<const int>(kv), value, c);
    }
    Complex coefficient(std::initializer_list<int> k, int c = 0) const {
        std::vector<int> kv(k);
        return coefficient(std::span<const int>(kv), c);
    }

    /// Mean value (real part of the zero mode) of component c.
    double mean(int c = 0) const { return at(0, c).real(); }

    /// Projects onto real fields: averages u(k) with conj(u(-k)) and zeroes Nyquist modes.
    void enforce_symmetry();
    /// Largest |u(k) - conj(u(-k))| over all components.
    double symmetry_defect() const;
    /// Largest |u(k)| over all components.
    double max_abs() const;
    bool all_finite() const;

    std::vector<Complex>& data() { return data_; }
    const std::vector<Complex>& data() const { return data_; }

    SpectralField& operator+=(const SpectralField& other);
    SpectralField& operator-=(const SpectralField& other);
    SpectralField& operator*=(double s);

    friend SpectralField operator+(SpectralField a, const SpectralField& b) { return a += b; }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) { return a -= b; }
    friend SpectralField operator*(double s, SpectralField a) { return a *= s; }

private:
    void check_compatible(const SpectralField& other) const;

    TorusGrid grid_;
    int components_;
    std::vector<Complex> data_;
};

/// Point samples of a real field on the grid nodes, component-major.
struct PhysicalField {
    TorusGrid grid;
    int components = 1;
    std::vector<double> values;

    PhysicalField(TorusGrid g, int comps)
        : grid(std::move(g)), components(comps), values(grid.size() * comps, 0.0) {}

    std::span<double> component(int c) { return {values.data() + c * grid.size(), grid.size()}; }
    std::span<const double> component(int c) const { return {values.data() + c * grid.size(), grid.size()}; }
};

}  // namespace tnlab
