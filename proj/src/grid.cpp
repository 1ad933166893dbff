#include "tnlab/grid.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace tnlab {

TorusGrid::TorusGrid(int dim, int points) : dim_(dim), points_(points), size_(1) {
    if (dim < 2) {
        throw std::invalid_argument("TorusGrid: dimension must be >= 2, got " + std::to_string(dim));
    }
    if (points < 4 || points % 2 != 0) {
        throw std::invalid_argument("TorusGrid: points per axis must be even and >= 4, got " +
                                    std::to_string(points));
    }
    for (int i = 0; i < dim; ++i) size_ *= static_cast<std::size_t>(points);

    auto tables = std::make_shared<Tables>();
    tables->wavevectors.resize(size_ * dim);
    tables->norm_squared.resize(size_);
    tables->nyquist.resize(size_);
    tables->dealias.resize(size_);
    tables->mirror.resize(size_);

    const int half = points / 2;
    const int cutoff = points / 3;
    std::vector<int> idx(dim, 0);
    for (std::size_t flat = 0; flat < size_; ++flat) {
        int k2 = 0;
        bool nyq = false;
        bool band = true;
        std::size_t mirror = 0;
        for (int a = 0; a < dim; ++a) {
            const int k = wavenumber(idx[a]);
            tables->wavevectors[flat * dim + a] = k;
            k2 += k * k;
            nyq = nyq || k == half;
            band = band && std::abs(k) <= cutoff;
            const int mirror_idx = idx[a] == 0 ? 0 : points - idx[a];
            mirror = mirror * points + static_cast<std::size_t>(mirror_idx);
        }
        tables->norm_squared[flat] = k2;
        tables->nyquist[flat] = nyq ? 1 : 0;
        tables->dealias[flat] = band ? 1 : 0;
        tables->mirror[flat] = nyq ? flat : mirror;

        for (int a = dim - 1; a >= 0; --a) {
            if (++idx[a] < points) break;
            idx[a] = 0;
        }
    }
    tables_ = std::move(tables);
}

bool TorusGrid::contains(std::span<const int> k) const {
    if (static_cast<int>(k.size()) != dim_) return false;
    for (int v : k) {
        if (std::abs(v) >= points_ / 2) return false;
    }
    return true;
}

std::size_t TorusGrid::flat_index(std::span<const int> k) const {
    if (!contains(k)) throw std::out_of_range("TorusGrid: wavevector outside retained index set");
    std::size_t flat = 0;
    for (int a = 0; a < dim_; ++a) {
        const int idx = k[a] >= 0 ? k[a] : k[a] + points_;
        flat = flat * points_ + static_cast<std::size_t>(idx);
    }
    return flat;
}

double TorusGrid::coordinate(std::size_t flat, int axis) const {
    std::size_t stride = 1;
    for (int a = dim_ - 1; a > axis; --a) stride *= points_;
    const auto idx = (flat / stride) % static_cast<std::size_t>(points_);
    return static_cast<double>(idx) / points_;
}

}  // namespace tnlab
