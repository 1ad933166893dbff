#include "tnlab/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace tnlab {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

FourierTransform::FourierTransform(const TorusGrid& grid) : grid_(grid) {
    const auto n = grid.size();
    auto* in = fftw_alloc_complex(n);
    auto* out = fftw_alloc_complex(n);
    std::vector<int> dims(grid.dim(), grid.points());
    std::lock_guard lock(planner_mutex());
    plan_forward_ = fftw_plan_dft(grid.dim(), dims.data(), in, out, FFTW_FORWARD, FFTW_ESTIMATE);
    plan_backward_ = fftw_plan_dft(grid.dim(), dims.data(), in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
    in_ = in;
    out_ = out;
}

FourierTransform::~FourierTransform() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_backward_));
    fftw_free(in_);
    fftw_free(out_);
}

void FourierTransform::backward(std::span<const Complex> coeffs, std::span<Complex> samples) {
    auto* in = reinterpret_cast<Complex*>(in_);
    auto* out = reinterpret_cast<Complex*>(out_);
    std::copy(coeffs.begin(), coeffs.end(), in);
    fftw_execute(static_cast<fftw_plan>(plan_backward_));
    std::copy(out, out + grid_.size(), samples.begin());
}

void FourierTransform::forward(std::span<const Complex> samples, std::span<Complex> coeffs) {
    auto* in = reinterpret_cast<Complex*>(in_);
    auto* out = reinterpret_cast<Complex*>(out_);
    std::copy(samples.begin(), samples.end(), in);
    fftw_execute(static_cast<fftw_plan>(plan_forward_));
    const double scale = 1.0 / static_cast<double>(grid_.size());
    for (std::size_t i = 0; i < grid_.size(); ++i) coeffs[i] = out[i] * scale;
}

AxisTransform::AxisTransform(const TorusGrid& grid, int axis) : grid_(grid), axis_(axis) {
    const int d = grid.dim();
    const int M = grid.points();
    auto stride = [&](int a) {
        int s = 1;
        for (int b = a + 1; b < d; ++b) s *= M;
        return s;
    };
    fftw_iodim dim{M, stride(axis), stride(axis)};
    std::vector<fftw_iodim> batch;
    for (int a = 0; a < d; ++a) {
        if (a != axis) batch.push_back({M, stride(a), stride(a)});
    }
    auto* data = fftw_alloc_complex(grid.size());
    std::lock_guard lock(planner_mutex());
    plan_forward_ = fftw_plan_guru_dft(1, &dim, static_cast<int>(batch.size()), batch.data(), data, data,
                                       FFTW_FORWARD, FFTW_ESTIMATE);
    plan_backward_ = fftw_plan_guru_dft(1, &dim, static_cast<int>(batch.size()), batch.data(), data, data,
                                        FFTW_BACKWARD, FFTW_ESTIMATE);
    data_ = data;
}

AxisTransform::~AxisTransform() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
    fftw_destroy_plan(static_cast<fftw_plan>(plan_backward_));
    fftw_free(data_);
}

void AxisTransform::backward() { fftw_execute(static_cast<fftw_plan>(plan_backward_)); }
void AxisTransform::forward() { fftw_execute(static_cast<fftw_plan>(plan_forward_)); }

FourierTransform& thread_transform(const TorusGrid& grid) {
    thread_local std::map<std::pair<int, int>, std::unique_ptr<FourierTransform>> cache;
    auto& slot = cache[{grid.dim(), grid.points()}];
    if (!slot) slot = std::make_unique<FourierTransform>(grid);
    return *slot;
}

}  // namespace tnlab
