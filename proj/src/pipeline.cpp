#include "sirenflow/pipeline.hpp"

#include <map>
#include <optional>

#include "sirenflow/error.hpp"

namespace sirenflow {

SampleSet training_set(const VelocityImage& image, const WallSurface& wall, std::size_t n_wall,
                       std::uint64_t seed, double fluid_fraction) {
    const auto fluid = fluid_voxel_centers(image, fluid_fraction, seed);
    const WallSurface used = n_wall == 0 || n_wall >= wall.size() ? wall : sample_wall(wall, n_wall, seed);
    return build_sample_set(image, fluid, used, nondim_for(image.geometry()));
}

Domain model_domain(const GridGeometry& g) {
    Domain d = g.domain();
    d.lo -= 0.5 * g.spacing;
    d.hi += 0.5 * g.spacing;
    return d;
}

optim::FitResult fit_image(const VelocityImage& image, const WallSurface& wall, const FitConfig& cfg,
                           std::size_t n_wall, double fluid_fraction) {
    const SampleSet samples = training_set(image, wall, n_wall, cfg.seed, fluid_fraction);
    SirenModel initial = init_model(cfg, samples.params);
    auto result = optim::fit(initial, samples, cfg);
    result.model.set_domain(model_domain(image.geometry()));
    return result;
}

std::vector<Point4> oversampled_points(const GridGeometry& g, int spatial, int temporal,
                                       const std::function<bool(const Vec3&)>& keep) {
    if (spatial < 1 || temporal < 1) throw Error(ErrorKind::InvalidArgument, "oversampling factors must be >= 1");
    const std::size_t n[3] = {(g.dims.nr - 1) * spatial + 1, (g.dims.nc - 1) * spatial + 1,
                              (g.dims.ns - 1) * spatial + 1};
    const std::size_t nt = (g.dims.nt - 1) * temporal + 1;
    const Vec3 step = g.spacing / double(spatial);
    std::vector<Vec3> xs;
    for (std::size_t r = 0; r < n[0]; ++r)
        for (std::size_t c = 0; c < n[1]; ++c)
            for (std::size_t s = 0; s < n[2]; ++s) {
                const Vec3 x = g.origin + Vec3(double(r), double(c), double(s)).cwiseProduct(step);
                if (keep(x)) xs.push_back(x);
            }
    std::vector<Point4> out;
    out.reserve(xs.size() * nt);
    for (const auto& x : xs)
        for (std::size_t j = 0; j < nt; ++j) out.push_back({x, g.t0 + double(j) * g.dt / double(temporal)});
    return out;
}

} // namespace sirenflow

namespace sirenflow {

std::size_t select_best(const std::vector<SweepRow>& rows) {
    std::vector<std::pair<int, int>> order;
    std::map<std::pair<int, int>, std::pair<double, bool>> score; // sum, all ok
    for (const auto& r : rows) {
        const auto key = std::make_pair(r.depth, r.width);
        auto [it, fresh] = score.try_emplace(key, 0.0, true);
        if (fresh) order.push_back(key);
        if (r.status != "ok") it->second.second = false;
        else it->second.first += r.mnrmse + r.vnrmse + r.de;
    }
    std::optional<std::pair<int, int>> best;
    double best_score = 0.0;
    for (const auto& key : order) {
        const auto& [sum, ok] = score[key];
        if (ok && (!best || sum < best_score)) {
            best = key;
            best_score = sum;
        }
    }
    if (!best) return rows.size();
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (rows[i].depth == best->first && rows[i].width == best->second) return i;
    return rows.size();
}

} // namespace sirenflow
