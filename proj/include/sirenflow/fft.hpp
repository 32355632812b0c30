#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

namespace sirenflow {

using cdouble = std::complex<double>;

/// Complex 3D grid, row-major over (r, c, s).
struct ComplexGrid {
    std::array<std::size_t, 3> dims{0, 0, 0};
    std::vector<cdouble> data;

    ComplexGrid() = default;
    explicit ComplexGrid(std::array<std::size_t, 3> d) : dims(d), data(d[0] * d[1] * d[2]) {}

    std::size_t size() const { return data.size(); }
    std::size_t index(std::size_t r, std::size_t c, std::size_t s) const {
        return (r * dims[1] + c) * dims[2] + s;
    }
    cdouble& operator()(std::size_t r, std::size_t c, std::size_t s) { return data[index(r, c, s)]; }
    const cdouble& operator()(std::size_t r, std::size_t c, std::size_t s) const {
        return data[index(r, c, s)];
    }
};

/// In-place 3D DFT. Forward is unnormalized; inverse is scaled by 1/N so
/// inverse(forward(x)) == x. Spectra use the unshifted FFT index order.
void fft_forward(ComplexGrid& grid);
void fft_inverse(ComplexGrid& grid);

/// Signed frequency of FFT index q on an axis of length n.
inline long fft_frequency(std::size_t q, std::size_t n) {
    return q < (n + 1) / 2 ? long(q) : long(q) - long(n);
}
/// FFT index of a signed frequency on an axis of length n.
inline std::size_t fft_index(long f, std::size_t n) {
    return static_cast<std::size_t>(f >= 0 ? f : f + long(n));
}

} // namespace sirenflow
