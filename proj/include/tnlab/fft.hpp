#pragma once

#include <span>

#include "tnlab/grid.hpp"

namespace tnlab {

/// FFTW-backed complex transform of size M^d with owned, aligned buffers.
///
/// Instances are not shared between threads. Plan creation is serialised
/// internally; execution is independent per instance.
class FourierTransform {
public:
    explicit FourierTransform(const TorusGrid& grid);
    ~FourierTransform();
    FourierTransform(const FourierTransform&) = delete;
    FourierTransform& operator=(const FourierTransform&) = delete;

    /// samples[x] = sum_k coeffs[k] e^{2 pi i k.x}
    void backward(std::span<const Complex> coeffs, std::span<Complex> samples);
    /// coeffs[k] = M^{-d} sum_x samples[x] e^{-2 pi i k.x}
    void forward(std::span<const Complex> samples, std::span<Complex> coeffs);

    const TorusGrid& grid() const { return grid_; }

private:
    TorusGrid grid_;
    void* in_ = nullptr;
    void* out_ = nullptr;
    void* plan_forward_ = nullptr;
    void* plan_backward_ = nullptr;
};

/// In-place one-dimensional transforms along a single axis of an M^d array,
/// batched over the remaining axes. Unnormalised in both directions.
class AxisTransform {
public:
    AxisTransform(const TorusGrid& grid, int axis);
    ~AxisTransform();
    AxisTransform(const AxisTransform&) = delete;
    AxisTransform& operator=(const AxisTransform&) = delete;

    std::span<Complex> buffer() { return {reinterpret_cast<Complex*>(data_), grid_.size()}; }
    /// buffer <- sum_j buffer[j] e^{+2 pi i j x} along the axis.
    void backward();
    /// buffer <- sum_x buffer[x] e^{-2 pi i j x} along the axis.
    void forward();

    int axis() const { return axis_; }

private:
    TorusGrid grid_;
    int axis_;
    void* data_ = nullptr;
    void* plan_forward_ = nullptr;
    void* plan_backward_ = nullptr;
};

/// Per-thread cached transform for a grid.
FourierTransform& thread_transform(const TorusGrid& grid);

}  // namespace tnlab
