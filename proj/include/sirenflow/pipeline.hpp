#pragma once

#include <functional>
#include <string>
#include <vector>

#include "sirenflow/fit.hpp"
#include "sirenflow/siren.hpp"

namespace sirenflow {

/// Training rows from the voxels that are fluid in all frames plus `n_wall`
/// wall points drawn from `wall` (all of them when n_wall is 0). A
/// fluid_fraction below 1 keeps a seeded subset of the fluid voxels.
SampleSet training_set(const VelocityImage& image, const WallSurface& wall, std::size_t n_wall,
                       std::uint64_t seed, double fluid_fraction = 1.0);

/// Space-time box a model trained on `geometry` may be queried in: the voxel
/// centres padded by half a voxel, over the frame time range.
Domain model_domain(const GridGeometry& geometry);

/// Trains a SIREN on an image, recording the query domain in the model.
optim::FitResult fit_image(const VelocityImage& image, const WallSurface& wall, const FitConfig& cfg,
                           std::size_t n_wall = 0, double fluid_fraction = 1.0);

/// Points on a grid `spatial` times finer than `geometry` (same extent) and
/// `temporal` times finer in time, over the frame time range, kept where
/// `keep` accepts the position.
std::vector<Point4> oversampled_points(const GridGeometry& geometry, int spatial, int temporal,
                                       const std::function<bool(const Vec3&)>& keep);

} // namespace sirenflow

namespace sirenflow {

/// One (architecture, noise level) result of a hyperparameter sweep.
struct SweepRow {
    int depth = 0;
    int width = 0;
    std::string noise;
    double mnrmse = 0.0, vnrmse = 0.0, de = 0.0;
    int iterations = 0;
    std::string status = "ok";
};

/// Index into `rows` of the first row of the (depth, width) pair minimizing
/// the sum of mNRMSE, vNRMSE and DE over all noise levels. Pairs with a failed
/// run are skipped. Returns rows.size() when nothing qualifies.
std::size_t select_best(const std::vector<SweepRow>& rows);

} // namespace sirenflow
