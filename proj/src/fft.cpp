#include "sirenflow/fft.hpp"

#include <mutex>

#include <fftw3.h>

#include "sirenflow/error.hpp"

namespace sirenflow {

namespace {

// FFTW's planner is not thread-safe; execution of a finished plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void transform(ComplexGrid& grid, int sign) {
    if (grid.data.size() != grid.dims[0] * grid.dims[1] * grid.dims[2] || grid.data.empty())
        throw Error(ErrorKind::InvalidArgument, "complex grid size does not match its dims");
    auto* p = reinterpret_cast<fftw_complex*>(grid.data.data());
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_3d(int(grid.dims[0]), int(grid.dims[1]), int(grid.dims[2]), p, p, sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (!plan) throw Error(ErrorKind::InvalidArgument, "FFTW could not create a plan");
    fftw_execute(plan);
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(plan);
}

} // namespace

void fft_forward(ComplexGrid& grid) { transform(grid, FFTW_FORWARD); }

void fft_inverse(ComplexGrid& grid) {
    transform(grid, FFTW_BACKWARD);
    const double scale = 1.0 / double(grid.data.size());
    for (auto& v : grid.data) v *= scale;
}

} // namespace sirenflow
