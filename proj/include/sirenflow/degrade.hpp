#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "sirenflow/fft.hpp"
#include "sirenflow/field.hpp"

namespace sirenflow {

struct DegradationConfig {
    int h = 1;                                              ///< temporal pooling factor
    double snr = std::numeric_limits<double>::infinity();   ///< infinite disables noise
    double s_percent = 100.0;                               ///< k-space retained (%)
    std::optional<Vec3> venc;                               ///< m/s per axis; auto when absent
    std::array<std::size_t, 3> calibration_extent{5, 5, 5};
    std::uint64_t seed = 0;

    void validate() const;

    /// Noise levels: mild (SNR 20, S 99), medium (5, 95), extreme (2, 68).
    static DegradationConfig preset(std::string_view level);
};

/// Four-point phase-contrast encoding of one frame. Channel 0 is the
/// velocity-compensated reference; channel i encodes axis i-1.
struct ComplexImage {
    std::array<std::size_t, 3> dims{0, 0, 0};
    std::array<ComplexGrid, 4> channels;
    Vec3 venc = Vec3::Ones();
};

/// Boolean k-space sampling pattern in FFT index order.
struct KspaceMask {
    std::array<std::size_t, 3> dims{0, 0, 0};
    std::vector<std::uint8_t> keep;
    double retained_fraction = 1.0;
    std::array<std::size_t, 3> calibration_extent{0, 0, 0};
    double density_sigma = 0.25; ///< Gaussian width in units of the per-axis half-width

    bool in_calibration(std::size_t r, std::size_t c, std::size_t s) const;
};

/// Decoded frame: velocity (3 per voxel, row-major) and |rho_0| per voxel.
struct DecodedFrame {
    std::array<std::size_t, 3> dims{0, 0, 0};
    std::vector<double> velocity;
    std::vector<double> magnitude;
};

/// Moving average over consecutive blocks of h frames. Output frame j carries
/// the mean of input frames [jh, jh + h) and is time-stamped at the block centre.
/// A voxel stays fluid only if it is fluid in every frame of its block.
VelocityImage temporal_downsample(const VelocityImage& frames, int h);

/// Trilinear resampling of every frame onto the target spatial grid (time axis
/// of the source is kept). Target voxels outside the source grid are zero and
/// non-fluid.
VelocityImage resample_to_grid(const VelocityImage& source, const GridGeometry& target);

/// 1.1 x the largest |v_i| over fluid voxels, per axis. An axis with no motion
/// borrows the largest axis value; a motionless field gets 1 m/s.
Vec3 auto_venc(const VelocityImage& img);

ComplexImage phase_encode(const VelocityImage& img, std::size_t frame, const Vec3& venc);
DecodedFrame phase_decode(const ComplexImage& image, const Vec3& venc);

/// Keeps the central half band of a forward spectrum, rescaled so the result
/// is the forward spectrum of the half-resolution image.
ComplexGrid kspace_truncate(const ComplexGrid& k);

/// Per-component k-space noise std giving image-space SNR `snr` for a mean
/// fluid signal magnitude `signal` on an n-voxel grid (unitary scaling of the
/// 1/N inverse transform).
double kspace_noise_sigma(double signal, double snr, std::size_t n_voxels);

/// Adds i.i.d. complex Gaussian noise (per-component std from kspace_noise_sigma).
/// Infinite snr leaves the data untouched.
void add_kspace_noise(ComplexGrid& k, double snr, double signal, std::uint64_t seed);

KspaceMask make_mask(std::array<std::size_t, 3> dims, double s_percent,
                     std::array<std::size_t, 3> calibration_extent, std::uint64_t seed);
void apply_kspace_mask(ComplexGrid& k, const KspaceMask& mask);

struct DegradeReport {
    Vec3 venc = Vec3::Ones();
    std::vector<double> signal_level;       ///< per frame
    std::vector<double> kspace_noise_sigma; ///< per frame
    std::vector<double> retained_fraction;  ///< per frame
    double mask_density_sigma = 0.25;
};

/// Full synthetic acquisition: pool in time, then per frame and channel
/// encode, FFT, truncate, add noise, mask, inverse FFT, decode. Output spacing
/// is doubled; the origin stays on the first voxel.
VelocityImage degrade(const VelocityImage& clean, const DegradationConfig& cfg,
                      DegradeReport* report = nullptr);

} // namespace sirenflow
