#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace tnlab {

using Complex = std::complex<double>;

/// Uniform grid on the unit torus T^d with M points per axis.
///
/// Coefficients are stored in FFT order: axis index j carries the wavenumber
/// j for j <= M/2 and j - M otherwise, so the retained index set per axis is
/// {-M/2+1, ..., M/2}. The Nyquist plane (any k_i = M/2) is kept at zero by
/// every operation in the library. Axis 0 is the slowest-varying index.
class TorusGrid {
public:
    TorusGrid(int dim, int points);

    int dim() const { return dim_; }
    int points() const { return points_; }
    std::size_t size() const { return size_; }

    int wavenumber(int axis_index) const {
        return axis_index <= points_ / 2 ? axis_index : axis_index - points_;
    }

    /// Wavevector of a flat coefficient index (dim() integers).
    std::span<const int> wavevector(std::size_t flat) const {
        return {tables_->wavevectors.data() + flat * dim_, static_cast<std::size_t>(dim_)};
    }
    /// Integer |k|^2.
    int norm_squared(std::size_t flat) const { return tables_->norm_squared[flat]; }
    bool is_nyquist(std::size_t flat) const { return tables_->nyquist[flat] != 0; }
    /// True when max_i |k_i| <= M/3 (2/3-rule band).
    bool in_dealias_band(std::size_t flat) const { return tables_->dealias[flat] != 0; }
    /// Flat index of -k (Nyquist entries map to themselves).
    std::size_t mirror(std::size_t flat) const { return tables_->mirror[flat]; }

    /// True when every |k_i| < M/2, i.e. k is a non-Nyquist retained mode.
    bool contains(std::span<const int> k) const;
    /// Flat index of a retained wavevector; throws std::out_of_range otherwise.
    std::size_t flat_index(std::span<const int> k) const;

    /// Physical coordinate of sample point `flat` along `axis`.
    double coordinate(std::size_t flat, int axis) const;

    int dealias_cutoff() const { return points_ / 3; }

    bool operator==(const TorusGrid& other) const {
        return dim_ == other.dim_ && points_ == other.points_;
    }
    bool operator!=(const TorusGrid& other) const { return !(*this == other); }

private:
    struct Tables {
        std::vector<int> wavevectors;
        std::vector<int> norm_squared;
        std::vector<unsigned char> nyquist;
        std::vector<unsigned char> dealias;
        std::vector<std::size_t> mirror;
    };

    int dim_;
    int points_;
    std::size_t size_;
    std::shared_ptr<const Tables> tables_;
};

/// Canonical half-lattice: k is primary when its first nonzero coordinate is positive.
inline bool is_primary(std::span<const int> k) {
    for (int v : k) {
        if (v != 0) return v > 0;
    }
    return false;
}

}  // namespace tnlab
