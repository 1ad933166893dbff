#include "tnlab/field.hpp"

#include <algorithm>
#include <cmath>

#include "tnlab/errors.hpp"

namespace tnlab {

SpectralField::SpectralField(TorusGrid grid, int components)
    : grid_(std::move(grid)), components_(components) {
    if (components != 1 && components != grid_.dim()) {
        throw InputError("SpectralField: components must be 1 or the grid dimension");
    }
    data_.assign(grid_.size() * static_cast<std::size_t>(components), Complex{});
}

SpectralField SpectralField::constant(const TorusGrid& grid, double c) {
    SpectralField f(grid, 1);
    f.at(0) = c;
    return f;
}

Complex SpectralField::coefficient(std::span<const int> k, int c) const {
    if (!grid_.contains(k)) return {};
    return at(grid_.flat_index(k), c);
}

void SpectralField::set_mode(std::span<const int> k, Complex value, int c) {
    const auto flat = grid_.flat_index(k);
    const auto mirror = grid_.mirror(flat);
    if (flat == mirror) {
        at(flat, c) = value.real();
        return;
    }
    at(flat, c) = value;
    at(mirror, c) = std::conj(value);
}

void SpectralField::enforce_symmetry() {
    for (int c = 0; c < components_; ++c) {
        auto comp = component(c);
        for (std::size_t f = 0; f < grid_.size(); ++f) {
            if (grid_.is_nyquist(f)) {
                comp[f] = 0.0;
                continue;
            }
            const auto m = grid_.mirror(f);
            if (m < f) continue;
            if (m == f) {
                comp[f] = comp[f].real();
                continue;
            }
            const Complex avg = 0.5 * (comp[f] + std::conj(comp[m]));
            comp[f] = avg;
            comp[m] = std::conj(avg);
        }
    }
}

double SpectralField::symmetry_defect() const {
    double worst = 0.0;
    for (int c = 0; c < components_; ++c) {
        auto comp = component(c);
        for (std::size_t f = 0; f < grid_.size(); ++f) {
            worst = std::max(worst, std::abs(comp[f] - std::conj(comp[grid_.mirror(f)])));
        }
    }
    return worst;
}

double SpectralField::max_abs() const {
    double worst = 0.0;
    for (const auto& z : data_) worst = std::max(worst, std::abs(z));
    return worst;
}

bool SpectralField::all_finite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

void SpectralField::check_compatible(const SpectralField& other) const {
    if (grid_ != other.grid_ || components_ != other.components_) {
        throw InputError("SpectralField: grid or rank mismatch");
    }
}

SpectralField& SpectralField::operator+=(const SpectralField& other) {
    check_compatible(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

SpectralField& SpectralField::operator-=(const SpectralField& other) {
    check_compatible(other);
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

SpectralField& SpectralField::operator*=(double s) {
    for (auto& z : data_) z *= s;
    return *this;
}

}  // namespace tnlab
