#include "sirenflow/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <ostream>

#include <CLI11.hpp>

#include "sirenflow/baselines.hpp"
#include "sirenflow/config.hpp"
#include "sirenflow/degrade.hpp"
#include "sirenflow/error.hpp"
#include "sirenflow/io.hpp"
#include "sirenflow/metrics.hpp"
#include "sirenflow/parallel.hpp"
#include "sirenflow/phantom.hpp"
#include "sirenflow/pipeline.hpp"
#include "sirenflow/rng.hpp"
#include "sirenflow/wss.hpp"

#ifndef SIRENFLOW_VERSION
#define SIRENFLOW_VERSION "0.0.0"
#endif

namespace sirenflow::cli {

namespace {

using io::Json;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr std::size_t kQueryChunk = 1 << 16;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int exit_code(ErrorKind kind) {
    switch (category(kind)) {
    case ErrorCategory::Config: return kExitConfig;
    case ErrorCategory::Numeric: return kExitNumeric;
    case ErrorCategory::Io: return kExitIo;
    }
    return kExitConfig;
}

Json vec_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

Vec3 vec_from(const std::vector<double>& v, const char* what) {
    if (v.size() == 1) return Vec3::Constant(v[0]);
    if (v.size() != 3) throw Error(ErrorKind::InvalidArgument, std::string(what) + " takes 1 or 3 values");
    return {v[0], v[1], v[2]};
}

// State shared by every subcommand: global flags, path resolution and the
// manifest being assembled.
struct Run {
    std::uint64_t seed = 0;
    unsigned threads = 1;
    std::string out_dir = ".";
    std::string input_base;
    std::vector<std::string> argv;
    std::vector<std::string> command; // argv from the subcommand name on
    std::string subcommand;

    Json config = Json::object();
    Json inputs = Json::object();
    Json outputs = Json::object();
    Json timings = Json::object();
    Json summary = Json::object();
    std::vector<std::string> timing_files;

    fs::path base() const { return input_base.empty() ? fs::current_path() : fs::path(input_base); }
    fs::path out_root() const {
        const fs::path d(out_dir);
        return d.is_absolute() ? d : base() / d;
    }

    fs::path input(const std::string& role, const std::string& path) {
        const fs::path p(path);
        const fs::path resolved = p.is_absolute() ? p : base() / p;
        inputs[role] = resolved.lexically_normal().string();
        return resolved;
    }
    fs::path output(const std::string& role, const std::string& path) {
        const fs::path p(path);
        const fs::path resolved = p.is_absolute() ? p : out_root() / p;
        outputs[role] = resolved.lexically_normal().string();
        return resolved;
    }

    // Wall-clock records: listed apart from the reproducible outputs.
    fs::path timing_output(const std::string& path) {
        const fs::path p(path);
        const fs::path resolved = p.is_absolute() ? p : out_root() / p;
        timing_files.push_back(resolved.lexically_normal().string());
        return resolved;
    }

    void write_manifest() const {
        Json m;
        m["format"] = "MANIFEST";
        m["version"] = 1;
        m["subcommand"] = subcommand;
        m["argv"] = argv;
        m["command"] = command;
        m["cwd"] = base().lexically_normal().string();
        m["out_dir"] = out_root().lexically_normal().string();
        m["code_version"] = SIRENFLOW_VERSION;
        m["seed"] = seed;
        m["threads"] = threads;
        m["config"] = config;
        m["inputs"] = inputs;
        m["outputs"] = outputs;
        m["summary"] = summary;
        m["timings"] = timings;
        m["timing_files"] = timing_files;
        io::write_json(out_root() / (subcommand + ".manifest.json"), m);
    }
};

// ---- field sources ---------------------------------------------------------

struct Source {
    std::unique_ptr<VelocitySampler> sampler;
    std::string format;
    std::optional<GridGeometry> grid;
    std::optional<PhantomSpec> phantom;
    std::optional<VelocityImage> image;
};

Source load_source(const fs::path& path) {
    Source s;
    s.format = io::sniff_format(path);
    if (s.format == "VF1") {
        s.image = io::read_vf1(path);
        s.grid = s.image->geometry();
        s.sampler = std::make_unique<LitpSampler>(*s.image);
    } else if (s.format == "SM1") {
        Json meta;
        SirenModel model = io::read_sm1(path, &meta);
        if (meta.contains("grid")) s.grid = config::grid_from_json(meta.at("grid"));
        s.sampler = std::make_unique<SirenSampler>(std::move(model));
    } else if (s.format == "PHANTOM") {
        const Json j = io::read_json(path);
        if (!j.contains("spec")) throw Error(ErrorKind::Format, "'" + path.string() + "' lacks field 'spec'");
        s.phantom = config::phantom_from_json(j.at("spec"));
        if (j.contains("grid") && !j.at("grid").is_null()) s.grid = config::grid_from_json(j.at("grid"));
        s.sampler = std::make_unique<AnalyticSampler>(*s.phantom);
    } else {
        throw Error(ErrorKind::Format, "'" + path.string() + "' has unsupported format '" + s.format + "'");
    }
    return s;
}

Json phantom_json(const PhantomSpec& spec, const GridGeometry& grid) {
    return {{"format", "PHANTOM"}, {"version", 1}, {"spec", config::to_json(spec)}, {"grid", config::to_json(grid)}};
}

// ---- evaluation point sets ---------------------------------------------------

// Oversampled grid visited in chunks without materializing all points.
struct GridWalk {
    GridGeometry g;
    std::size_t n[3] = {1, 1, 1};
    std::size_t nt = 1;
    Vec3 step;
    double tstep = 0.0;

    GridWalk(const GridGeometry& geometry, int spatial, int temporal) : g(geometry) {
        if (spatial < 1 || temporal < 1) throw Error(ErrorKind::InvalidArgument, "oversampling factors must be >= 1");
        n[0] = (g.dims.nr - 1) * spatial + 1;
        n[1] = (g.dims.nc - 1) * spatial + 1;
        n[2] = (g.dims.ns - 1) * spatial + 1;
        nt = (g.dims.nt - 1) * temporal + 1;
        step = g.spacing / double(spatial);
        tstep = g.dt / double(temporal);
    }
    std::size_t size() const { return n[0] * n[1] * n[2] * nt; }
    Point4 at(std::size_t k) const {
        const std::size_t j = k % nt;
        std::size_t q = k / nt;
        const std::size_t s = q % n[2];
        q /= n[2];
        const std::size_t c = q % n[1];
        const std::size_t r = q / n[1];
        return {g.origin + Vec3(double(r), double(c), double(s)).cwiseProduct(step), g.t0 + double(j) * tstep};
    }
};

struct PointOptions {
    std::string coords;
    std::string grid;
    int spatial = 20;
    int temporal = 10;

    void add(CLI::App* app, int default_spatial, int default_temporal) {
        spatial = default_spatial;
        temporal = default_temporal;
        app->add_option("--coords", coords, "CSV of query points (x,y,z,t)");
        app->add_option("--grid", grid, "grid JSON to oversample (default: the source's own grid)");
        app->add_option("--spatial", spatial, "spatial oversampling factor of the grid")->capture_default_str();
        app->add_option("--temporal", temporal, "temporal oversampling factor of the grid")->capture_default_str();
    }
};

// Samples `sampler` at the requested points and streams them to a prediction CSV.
void write_predictions(Run& run, const VelocitySampler& sampler, const std::optional<GridGeometry>& source_grid,
                       const PointOptions& opt, const fs::path& out) {
    io::PredictionCsvWriter writer(out);
    if (!opt.coords.empty()) {
        const auto points = io::read_coords_csv(run.input("coords", opt.coords));
        for (std::size_t a = 0; a < points.size(); a += kQueryChunk) {
            const std::span<const Point4> chunk(points.data() + a, std::min(kQueryChunk, points.size() - a));
            writer.write(chunk, sampler.sample(chunk));
        }
    } else {
        GridGeometry g;
        if (!opt.grid.empty()) g = config::grid_from_json(io::read_json(run.input("grid", opt.grid)));
        else if (source_grid) g = *source_grid;
        else throw Error(ErrorKind::InvalidArgument, "the source carries no grid; pass --coords or --grid");
        g.validate();
        const GridWalk walk(g, opt.spatial, opt.temporal);
        run.config["query_grid"] = config::to_json(g);
        run.config["spatial"] = opt.spatial;
        run.config["temporal"] = opt.temporal;
        std::vector<Point4> chunk;
        for (std::size_t a = 0; a < walk.size(); a += kQueryChunk) {
            chunk.clear();
            for (std::size_t k = a; k < std::min(walk.size(), a + kQueryChunk); ++k) chunk.push_back(walk.at(k));
            writer.write(chunk, sampler.sample(chunk));
        }
    }
    writer.close();
    run.summary["points"] = writer.rows();
}

std::vector<Point4> image_points(const VelocityImage& img) {
    std::vector<Point4> points;
    const auto& g = img.geometry();
    for (const auto& x : fluid_voxel_centers(img))
        for (std::size_t j = 0; j < g.dims.nt; ++j) points.push_back({x, g.time(j)});
    return points;
}

Json report_json(const MetricsReport& r) {
    return {{"mnrmse", r.mnrmse}, {"vnrmse", r.vnrmse},   {"de", r.de},
            {"k", r.k},           {"max_ref_speed", r.max_ref_speed}, {"de_excluded", r.de_excluded}};
}

bool is_prediction_csv(const fs::path& p) {
    std::ifstream is(p);
    std::string header;
    return is && std::getline(is, header) && header == "x,y,z,t,vx,vy,vz";
}

std::vector<double> parse_times(const std::string& spec) {
    std::vector<double> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t colon = spec.find(':', start);
        const std::string piece = spec.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
        try {
            std::size_t used = 0;
            parts.push_back(std::stod(piece, &used));
            if (used != piece.size()) throw std::invalid_argument(piece);
        } catch (const std::exception&) {
            throw Error(ErrorKind::InvalidArgument, "--times expects t0:dt:t1, got '" + spec + "'");
        }
        if (colon == std::string::npos) break;
        start = colon + 1;
    }
    if (parts.size() == 1) return parts;
    if (parts.size() != 3) throw Error(ErrorKind::InvalidArgument, "--times expects t0:dt:t1, got '" + spec + "'");
    return time_range(parts[0], parts[1], parts[2]);
}

// ---- subcommands -------------------------------------------------------------

struct PhantomCmd {
    std::string kind, spec, grid, out = "phantom.vf1", wall_out = "wall.csv", truth_out = "truth.json";
    std::optional<double> radius, minor_radius, vmax, amplitude, period, swirl;
    std::vector<std::size_t> dims{24, 24, 24, 20};
    std::vector<double> spacing{1.0}, origin;
    double dt = 0.05, t0 = 0.0;
    std::size_t wall_around = 64, wall_along = 0;

    void add(CLI::App* app) {
        app->add_option("--kind", kind, "tube or swirl")->check(CLI::IsMember({"tube", "swirl"}));
        app->add_option("--spec", spec, "phantom JSON");
        app->add_option("--radius", radius, "vessel radius (mm)");
        app->add_option("--minor-radius", minor_radius, "second semi-axis of an elliptic tube (mm)");
        app->add_option("--vmax", vmax, "mean centerline speed (m/s)");
        app->add_option("--amplitude", amplitude, "pulsatile amplitude of the centerline speed (m/s)");
        app->add_option("--period", period, "waveform period (s)");
        app->add_option("--swirl", swirl, "peak azimuthal speed of the swirl (m/s)");
        auto* g = app->add_option("--grid", grid, "grid JSON");
        app->add_option("--dims", dims, "nr nc ns nt")->expected(4)->delimiter(',')->excludes(g);
        app->add_option("--spacing", spacing, "voxel spacing (mm), 1 or 3 values")->delimiter(',')->excludes(g);
        app->add_option("--origin", origin, "first voxel center (mm); centered on the vessel by default")
            ->delimiter(',')
            ->excludes(g);
        app->add_option("--dt", dt, "frame interval (s)")->excludes(g);
        app->add_option("--t0", t0, "first frame time (s)")->excludes(g);
        app->add_option("--out", out, "clean field (VF1)")->capture_default_str();
        app->add_option("--wall-out", wall_out, "wall points CSV")->capture_default_str();
        app->add_option("--truth-out", truth_out, "analytic field description")->capture_default_str();
        app->add_option("--wall-around", wall_around, "wall points per station")->capture_default_str();
        app->add_option("--wall-along", wall_along, "wall stations along the axis (default: one per slice)");
    }

    void exec(Run& run) const {
        const auto start = Clock::now();
        PhantomSpec s;
        if (!spec.empty()) s = config::phantom_from_json(io::read_json(run.input("spec", spec)));
        if (!kind.empty()) s.kind = phantom_kind_from_string(kind);
        if (radius) s.radius = *radius;
        if (minor_radius) s.minor_radius = *minor_radius;
        if (vmax) s.axial.mean = *vmax;
        if (amplitude) s.axial.amplitude = *amplitude;
        if (period) s.axial.period = s.swirl.period = *period;
        if (swirl) s.swirl.mean = *swirl;
        s.validate();

        GridGeometry g;
        if (!grid.empty()) {
            g = config::grid_from_json(io::read_json(run.input("grid", grid)));
        } else {
            g.dims = {dims[0], dims[1], dims[2], dims[3]};
            g.spacing = vec_from(spacing, "--spacing");
            g.dt = dt;
            g.t0 = t0;
            const Vec3 extent = Vec3(double(dims[0] - 1), double(dims[1] - 1), double(dims[2] - 1));
            g.origin = origin.empty() ? Vec3(s.center - 0.5 * extent.cwiseProduct(g.spacing)) : vec_from(origin, "--origin");
        }
        g.validate();

        // Wall stations span the grid's extent along the axis.
        const auto frame = phantom_frame(s);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        const Vec3 far = g.position(g.dims.nr - 1, g.dims.nc - 1, g.dims.ns - 1);
        for (int corner = 0; corner < 8; ++corner) {
            const Vec3 p((corner & 1) ? far[0] : g.origin[0], (corner & 2) ? far[1] : g.origin[1],
                         (corner & 4) ? far[2] : g.origin[2]);
            const double a = (p - s.center).dot(frame.axis);
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
        const std::size_t along = wall_along ? wall_along : g.dims.ns;
        const WallSurface wall = phantom_wall(s, wall_around, along, lo, hi);
        const VelocityImage img = sample_on_grid(s, g);

        io::write_vf1(run.output("field", out), img, {{"phantom", config::to_json(s)}});
        io::write_wall_csv(run.output("wall", wall_out), wall);
        io::write_json(run.output("truth", truth_out), phantom_json(s, g));
        run.config["phantom"] = config::to_json(s);
        run.config["grid"] = config::to_json(g);
        run.config["wall"] = {{"around", wall_around}, {"along", along}, {"along_lo_mm", lo}, {"along_hi_mm", hi}};
        run.summary["max_speed"] = img.max_speed();
        run.summary["wall_points"] = wall.size();
        run.timings["total_s"] = seconds_since(start);
    }
};

struct DegradeCmd {
    std::string in, cfg, level = "medium", out = "degraded.vf1", report = "degrade_report.json";
    std::optional<int> h;
    std::optional<double> snr, s_percent;

    void add(CLI::App* app) {
        app->add_option("--in", in, "clean field (VF1)")->required();
        app->add_option("--cfg", cfg, "degradation JSON (overrides --level)");
        app->add_option("--level", level, "noise preset")
            ->check(CLI::IsMember({"mild", "medium", "extreme"}))
            ->capture_default_str();
        app->add_option("--h", h, "temporal pooling factor");
        app->add_option("--snr", snr, "signal-to-noise ratio");
        app->add_option("--s-percent", s_percent, "retained k-space percentage");
        app->add_option("--out", out, "degraded field (VF1)")->capture_default_str();
        app->add_option("--report", report, "acquisition report JSON")->capture_default_str();
    }

    void exec(Run& run) const {
        const auto start = Clock::now();
        DegradationConfig c = DegradationConfig::preset(level);
        c.seed = run.seed;
        if (!cfg.empty()) {
            const Json j = io::read_json(run.input("cfg", cfg));
            c = config::degradation_from_json(j);
            if (!j.contains("seed")) c.seed = run.seed;
        }
        if (h) c.h = *h;
        if (snr) c.snr = *snr;
        if (s_percent) c.s_percent = *s_percent;
        c.validate();
        const VelocityImage clean = io::read_vf1(run.input("in", in));
        DegradeReport rep;
        const VelocityImage out_img = degrade(clean, c, &rep);
        io::write_vf1(run.output("field", out), out_img, {{"degradation", config::to_json(c)}});
        Json r = {{"venc", vec_json(rep.venc)},
                  {"signal_level", rep.signal_level},
                  {"snr_definition", "mean fluid magnitude / image-space noise std per real component"},
                  {"kspace_noise_sigma", rep.kspace_noise_sigma},
                  {"retained_fraction", rep.retained_fraction},
                  {"mask_density_sigma", rep.mask_density_sigma},
                  {"config", config::to_json(c)}};
        io::write_json(run.output("report", report), r);
        run.config["degradation"] = config::to_json(c);
        run.timings["total_s"] = seconds_since(start);
    }
};

struct FitOverrides {
    std::optional<int> depth, width, max_iterations;
    std::optional<double> omega0;
    std::optional<std::string> loss;

    void add(CLI::App* app) {
        app->add_option("--depth", depth, "hidden layers");
        app->add_option("--width", width, "neurons per hidden layer");
        app->add_option("--max-iterations", max_iterations, "L-BFGS iteration cap");
        app->add_option("--omega0", omega0, "first-layer frequency");
        app->add_option("--loss", loss, "sum or mean")->check(CLI::IsMember({"sum", "mean"}));
    }
    void apply(FitConfig& c) const {
        if (depth) c.depth = *depth;
        if (width) c.width = *width;
        if (max_iterations) c.max_iterations = *max_iterations;
        if (omega0) c.omega0 = *omega0;
        if (loss) c.loss = *loss == "mean" ? LossNormalization::Mean : LossNormalization::Sum;
    }
};

FitConfig fit_config(Run& run, const std::string& cfg, const FitOverrides& over) {
    FitConfig c;
    c.seed = run.seed;
    if (!cfg.empty()) {
        const Json j = io::read_json(run.input("cfg", cfg));
        c = config::fit_from_json(j);
        if (!j.contains("seed")) c.seed = run.seed;
    }
    over.apply(c);
    c.validate();
    return c;
}

struct FitCmd {
    std::string in, wall, cfg, out = "model.sm1", trace = "trace.csv";
    std::size_t n_wall = 0;
    double fluid_fraction = 1.0;
    FitOverrides over;

    void add(CLI::App* app) {
        app->add_option("--in", in, "training field (VF1)")->required();
        app->add_option("--wall", wall, "wall points CSV")->required();
        app->add_option("--cfg", cfg, "fit JSON");
        over.add(app);
        app->add_option("--n-wall", n_wall, "wall points drawn per fit (0: all)")->capture_default_str();
        app->add_option("--fluid-fraction", fluid_fraction, "share of fluid voxels used for training")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        app->add_option("--out", out, "trained model (SM1)")->capture_default_str();
        app->add_option("--trace", trace, "per-iteration loss CSV")->capture_default_str();
    }

    void exec(Run& run) const {
        const auto start = Clock::now();
        const FitConfig c = fit_config(run, cfg, over);
        const VelocityImage img = io::read_vf1(run.input("in", in));
        const WallSurface w = io::read_wall_csv(run.input("wall", wall));
        const auto result = fit_image(img, w, c, n_wall, fluid_fraction);
        Json meta = {{"grid", config::to_json(img.geometry())},
                     {"fit", config::to_json(c)},
                     {"iterations", result.iterations},
                     {"termination", std::string(optim::to_string(result.termination))}};
        io::write_sm1(run.output("model", out), result.model, meta);
        io::write_trace_csv(run.output("trace", trace), result.trace);
        run.config["fit"] = config::to_json(c);
        run.config["n_wall"] = n_wall;
        run.config["fluid_fraction"] = fluid_fraction;
        run.summary["iterations"] = result.iterations;
        run.summary["evaluations"] = result.evaluations;
        run.summary["termination"] = std::string(optim::to_string(result.termination));
        run.summary["final_loss"] = result.trace.empty() ? 0.0 : result.trace.back().loss;
        run.timings["total_s"] = seconds_since(start);
    }
};

struct QueryCmd {
    std::string model, out = "predictions.csv";
    PointOptions points;

    void add(CLI::App* app) {
        app->add_option("--model", model, "SM1 model, VF1 field or PHANTOM description")->required();
        points.add(app, 20, 10);
        app->add_option("--out", out, "prediction CSV")->capture_default_str();
    }

    void exec(Run& run) const {
        const auto start = Clock::now();
        const Source src = load_source(run.input("model", model));
        write_predictions(run, *src.sampler, src.grid, points, run.output("predictions", out));
        run.config["source_format"] = src.format;
        run.timings["total_s"] = seconds_since(start);
    }
};

struct MetricsCmd {
    std::string ref, cand, coords, out = "metrics.json";

    void add(CLI::App* app) {
        app->add_option("--ref", ref, "reference: prediction CSV, VF1, SM1 or PHANTOM")->required();
        app->add_option("--cand", cand, "candidate: prediction CSV, VF1, SM1 or PHANTOM")->required();
        app->add_option("--coords", coords, "evaluation points CSV (default: fluid voxels of a VF1 reference)");
        app->add_option("--out", out, "report JSON")->capture_default_str();
    }

    void exec(Run& run) const {
        const auto start = Clock::now();
        const fs::path rp = run.input("ref", ref), cp = run.input("cand", cand);
        MetricsReport rep;
        if (is_prediction_csv(rp) && is_prediction_csv(cp)) {
            std::vector<Point4> pr, pc;
            const auto vr = io::read_prediction_csv(rp, &pr);
            const auto vc = io::read_prediction_csv(cp, &pc);
            if (pr.size() != pc.size())
                throw Error(ErrorKind::InvalidArgument, "prediction files have different row counts");
            for (std::size_t i = 0; i < pr.size(); ++i)
                if (pr[i].x != pc[i].x || pr[i].t != pc[i].t)
                    throw Error(ErrorKind::InvalidArgument,
                                "prediction files disagree on the coordinates of row " + std::to_string(i + 1));
            rep = compare(vr, vc);
        } else {
            const Source rs = load_source(rp), cs = load_source(cp);
            std::vector<Point4> points;
            if (!coords.empty()) points = io::read_coords_csv(run.input("coords", coords));
            else if (rs.image) points = image_points(*rs.image);
            else throw Error(ErrorKind::InvalidArgument, "pass --coords unless the reference is a VF1 field");
            rep = compare(*rs.sampler, *cs.sampler, points);
        }
        io::write_json(run.output("report", out), report_json(rep));
        run.summary = report_json(rep);
        run.timings["total_s"] = seconds_since(start);
    }
};

struct WssCmd {
    std::string model, wall, times, cfg, out = "wss.csv", tawss = "tawss.csv";
    std::optional<double> mu, delta_n;

    void add(CLI::App* app) {
        app->add_option("--model", model, "SM1 model, VF1 field or PHANTOM description")->required();
        app->add_option("--wall", wall, "wall points CSV")->required();
        app->add_option("--times", times, "t0:dt:t1 or a single time (default: the source's frames)");
        app->add_option("--cfg", cfg, "WSS JSON");
        app->add_option("--mu", mu, "dynamic viscosity (Pa s)");
        app->add_option("--delta-n", delta_n, "probe spacing along the normal (mm)");
        app->add_option("--out", out, "WSS CSV")->capture_default_str();
        app->add_option("--tawss", tawss, "time-averaged WSS CSV")->capture_default_str();
    }

    void exec(Run& run) const {
        const auto start = Clock::now();
        WssConfig c;
        if (!cfg.empty()) c = config::wss_from_json(io::read_json(run.input("cfg", cfg)));
        if (mu) c.mu = *mu;
        if (delta_n) c.delta_n = *delta_n;
        c.validate();
        const Source src = load_source(run.input("model", model));
        const WallSurface w = io::read_wall_csv(run.input("wall", wall));
        std::vector<double> ts;
        if (!times.empty()) ts = parse_times(times);
        else if (src.grid) {
            for (std::size_t j = 0; j < src.grid->dims.nt; ++j) ts.push_back(src.grid->time(j));
        } else {
            throw Error(ErrorKind::InvalidArgument, "the source carries no frame times; pass --times");
        }
        const WssField f = wss_field(*src.sampler, w, ts, c);
        io::write_wss_csv(run.output("wss", out), f);
        io::write_tawss_csv(run.output("tawss", tawss), f);
        run.config["wss"] = config::to_json(c);
        run.config["times"] = ts;
        run.summary["flagged_points"] = f.flagged_points();
        run.timings["total_s"] = seconds_since(start);
    }
};

struct BaselineCmd {
    std::string method, in, wall, cfg, out = "baseline.csv";
    bool no_mask = false;
    PointOptions points;

    void add(CLI::App* app) {
        app->add_option("--method", method, "litp or rbf4d")->required()->check(CLI::IsMember({"litp", "rbf4d"}));
        app->add_option("--in", in, "input field (VF1)")->required();
        app->add_option("--wall", wall, "wall points CSV, required by rbf4d");
        app->add_option("--cfg", cfg, "rbf4d JSON");
        app->add_flag("--no-mask", no_mask, "keep velocities outside the fluid mask");
        points.add(app, 20, 10);
        app->add_option("--out", out, "prediction CSV")->capture_default_str();
    }

    void exec(Run& run) const {
        const auto start = Clock::now();
        VelocityImage img = io::read_vf1(run.input("in", in));
        if (!no_mask) img = apply_mask(img);
        run.config["method"] = method;
        run.config["mask"] = !no_mask;
        if (method == "litp") {
            const LitpSampler sampler(img);
            write_predictions(run, sampler, img.geometry(), points, run.output("predictions", out));
        } else {
            Rbf4dConfig c;
            if (!cfg.empty()) c = config::rbf_from_json(io::read_json(run.input("cfg", cfg)));
            c.validate();
            if (wall.empty()) throw Error(ErrorKind::InvalidArgument, "rbf4d needs --wall");
            const WallSurface w = io::read_wall_csv(run.input("wall", wall));
            if (no_mask) img.clear_mask();
            const auto samples = build_sample_set(img, fluid_voxel_centers(img), w, nondim_for(img.geometry()));
            const auto model = std::make_shared<const Rbf4dModel>(samples, c);
            const Rbf4dSampler sampler(model);
            write_predictions(run, sampler, img.geometry(), points, run.output("predictions", out));
            run.config["rbf4d"] = config::to_json(c);
            run.summary["nodes"] = model->size();
            run.summary["duplicates_merged"] = model->duplicates_merged();
            run.summary["c_mq"] = model->c_mq();
            run.summary["time_scale"] = model->time_scale();
        }
        run.timings["total_s"] = seconds_since(start);
    }
};

struct SweepCmd {
    std::string clean, wall, truth, cfg, results = "results.csv", timings = "sweep_timings.csv",
                                         selection = "selection.json";
    std::vector<int> depths{4}, widths{64};
    std::vector<std::string> levels{"mild", "medium", "extreme"};
    int h = 1, spatial = 2, temporal = 4;
    std::size_t n_wall = 0;
    double fluid_fraction = 1.0;
    FitOverrides over;

    void add(CLI::App* app) {
        app->add_option("--clean", clean, "clean field (VF1)")->required();
        app->add_option("--wall", wall, "wall points CSV")->required();
        app->add_option("--truth", truth, "reference for the metrics (default: the clean field)");
        app->add_option("--cfg", cfg, "fit JSON shared by every run");
        app->add_option("--depths", depths, "hidden-layer counts")->delimiter(',')->capture_default_str();
        app->add_option("--widths", widths, "layer widths")->delimiter(',')->capture_default_str();
        app->add_option("--levels", levels, "noise presets")
            ->delimiter(',')
            ->check(CLI::IsMember({"mild", "medium", "extreme"}))
            ->capture_default_str();
        app->add_option("--h", h, "temporal pooling factor")->capture_default_str();
        app->add_option("--n-wall", n_wall, "wall points drawn per fit (0: all)")->capture_default_str();
        app->add_option("--fluid-fraction", fluid_fraction, "share of fluid voxels used for training")
            ->check(CLI::Range(0.0, 1.0))
            ->capture_default_str();
        app->add_option("--spatial", spatial, "spatial oversampling of the evaluation points")->capture_default_str();
        app->add_option("--temporal", temporal, "temporal oversampling of the evaluation points")->capture_default_str();
        app->add_option("--max-iterations", over.max_iterations, "L-BFGS iteration cap");
        app->add_option("--omega0", over.omega0, "first-layer frequency");
        app->add_option("--loss", over.loss, "sum or mean")->check(CLI::IsMember({"sum", "mean"}));
        app->add_option("--results", results, "results CSV")->capture_default_str();
        app->add_option("--timings", timings, "per-run wall-clock CSV")->capture_default_str();
        app->add_option("--selection", selection, "selected configuration JSON")->capture_default_str();
    }

    void exec(Run& run) const {
        const auto start = Clock::now();
        const FitConfig base = fit_config(run, cfg, over);
        const VelocityImage clean_img = io::read_vf1(run.input("clean", clean));
        const WallSurface w = io::read_wall_csv(run.input("wall", wall));
        const Source ref = truth.empty() ? Source{std::make_unique<LitpSampler>(apply_mask(clean_img)), "VF1",
                                                  clean_img.geometry(), std::nullopt, std::nullopt}
                                         : load_source(run.input("truth", truth));

        // Evaluation points lie inside the vessel: analytic when known,
        // otherwise where the nearest clean voxel is fluid in every frame.
        const auto& cg = clean_img.geometry();
        const std::function<bool(const Vec3&)> keep = [&](const Vec3& x) {
            if (ref.phantom) return phantom_inside(*ref.phantom, x);
            const Vec3 q = (x - cg.origin).cwiseQuotient(cg.spacing);
            const double dims[3] = {double(cg.dims.nr), double(cg.dims.nc), double(cg.dims.ns)};
            long idx[3];
            for (int a = 0; a < 3; ++a) {
                idx[a] = std::lround(q[a]);
                if (idx[a] < 0 || double(idx[a]) >= dims[a]) return false;
            }
            return clean_img.fluid_all_frames(std::size_t(idx[0]), std::size_t(idx[1]), std::size_t(idx[2]));
        };

        struct Level {
            VelocityImage image;
            std::vector<Point4> points;
            std::vector<Vec3> reference;
        };
        std::vector<Level> data;
        Json level_cfg = Json::array();
        for (std::size_t i = 0; i < levels.size(); ++i) {
            DegradationConfig dc = DegradationConfig::preset(levels[i]);
            dc.h = h;
            dc.seed = derive_seed(run.seed, {0x5eed, i});
            Level L;
            L.image = apply_mask(degrade(clean_img, dc));
            L.points = oversampled_points(L.image.geometry(), spatial, temporal, keep);
            L.reference = ref.sampler->sample(L.points);
            level_cfg.push_back(config::to_json(dc));
            data.push_back(std::move(L));
        }

        struct Job {
            std::size_t level;
            int depth, width;
        };
        std::vector<Job> jobs;
        for (int d : depths)
            for (int wd : widths)
                for (std::size_t i = 0; i < levels.size(); ++i) jobs.push_back({i, d, wd});
        std::vector<SweepRow> rows(jobs.size());
        std::vector<double> secs(jobs.size(), 0.0);
        parallel_for(jobs.size(), [&](std::size_t k) {
            const auto t = Clock::now();
            const Job& job = jobs[k];
            SweepRow& row = rows[k];
            row.depth = job.depth;
            row.width = job.width;
            row.noise = levels[job.level];
            try {
                FitConfig c = base;
                c.depth = job.depth;
                c.width = job.width;
                c.validate();
                const auto result = fit_image(data[job.level].image, w, c, n_wall, fluid_fraction);
                const SirenSampler model(result.model);
                const auto rep = compare(data[job.level].reference, model.sample(data[job.level].points));
                row.mnrmse = rep.mnrmse;
                row.vnrmse = rep.vnrmse;
                row.de = rep.de;
                row.iterations = result.iterations;
            } catch (const Error& e) {
                row.status = std::string(to_string(e.kind()));
                row.mnrmse = row.vnrmse = row.de = std::numeric_limits<double>::quiet_NaN();
            }
            secs[k] = seconds_since(t);
        });

        // Rows sorted by (depth, width, noise order given on the command line).
        std::string csv = "depth,width,noise,mnrmse,vnrmse,de,iterations,status\n";
        std::string tcsv = "depth,width,noise,seconds\n";
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const auto& r = rows[k];
            csv += std::to_string(r.depth) + "," + std::to_string(r.width) + "," + r.noise + "," +
                   io::format_double(r.mnrmse) + "," + io::format_double(r.vnrmse) + "," + io::format_double(r.de) +
                   "," + std::to_string(r.iterations) + "," + r.status + "\n";
            tcsv += std::to_string(r.depth) + "," + std::to_string(r.width) + "," + r.noise + "," +
                    io::format_double(secs[k]) + "\n";
        }
        io::write_text(run.output("results", results), csv);
        io::write_text(run.timing_output(timings), tcsv);

        const std::size_t best = select_best(rows);
        Json sel = {{"rule", "argmin over (depth, width) of mnrmse + vnrmse + de summed across noise levels"}};
        if (best < rows.size()) {
            double sum = 0.0;
            for (const auto& r : rows)
                if (r.depth == rows[best].depth && r.width == rows[best].width) sum += r.mnrmse + r.vnrmse + r.de;
            sel["depth"] = rows[best].depth;
            sel["width"] = rows[best].width;
            sel["score"] = sum;
        } else {
            sel["depth"] = nullptr;
            sel["width"] = nullptr;
            sel["score"] = nullptr;
        }
        io::write_json(run.output("selection", selection), sel);

        run.config["fit"] = config::to_json(base);
        run.config["degradations"] = level_cfg;
        run.config["depths"] = depths;
        run.config["widths"] = widths;
        run.config["levels"] = levels;
        run.config["n_wall"] = n_wall;
        run.config["fluid_fraction"] = fluid_fraction;
        run.config["evaluation"] = {{"spatial", spatial}, {"temporal", temporal}};
        run.summary["selection"] = sel;
        run.summary["failed_runs"] = std::count_if(rows.begin(), rows.end(), [](const SweepRow& r) {
            return r.status != "ok";
        });
        run.timings["runs_s"] = secs;
        run.timings["total_s"] = seconds_since(start);
    }
};

int replay(const std::string& manifest_path, const std::optional<std::string>& out_dir, std::ostream& out,
           std::ostream& err) {
    const Json m = io::read_json(manifest_path);
    if (m.value("format", std::string()) != "MANIFEST")
        throw Error(ErrorKind::Format, "'" + manifest_path + "' is not a run manifest");
    std::vector<std::string> args;
    try {
        args = {"--seed",
                std::to_string(m.at("seed").get<std::uint64_t>()),
                "--threads",
                std::to_string(m.at("threads").get<unsigned>()),
                "--out-dir",
                out_dir ? *out_dir : m.at("out_dir").get<std::string>(),
                "--input-base",
                m.at("cwd").get<std::string>()};
        for (const auto& a : m.at("command")) args.push_back(a.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, "'" + manifest_path + "' is incomplete: " + e.what());
    }
    return run(args, out, err);
}

} // namespace

std::unique_ptr<VelocitySampler> open_source(const std::string& path) { return load_source(path).sampler; }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Continuous velocity fields from noisy 4D flow data"};
    app.set_version_flag("--version", SIRENFLOW_VERSION);
    app.set_help_flag("--help", "print this help and exit"); // frees -h for the pooling factor
    app.require_subcommand(1);
    app.fallthrough();

    Run r;
    app.add_option("--seed", r.seed, "master random seed")->capture_default_str();
    app.add_option("--threads", r.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out-dir", r.out_dir, "directory for outputs and the manifest")->capture_default_str();
    app.add_option("--input-base", r.input_base, "directory relative inputs resolve against")
        ->group("");

    PhantomCmd phantom;
    DegradeCmd deg;
    FitCmd fit;
    QueryCmd query;
    MetricsCmd metrics;
    WssCmd wss;
    BaselineCmd baseline;
    SweepCmd sweep;
    std::string manifest;
    std::optional<std::string> replay_out;

    std::map<std::string, std::function<void(Run&)>> commands;
    auto add = [&](const char* name, const char* help, auto& cmd) {
        auto* sub = app.add_subcommand(name, help);
        cmd.add(sub);
        commands[name] = [&cmd](Run& run) { cmd.exec(run); };
    };
    add("phantom", "analytic phantom on a grid, with its wall", phantom);
    add("degrade", "simulate a noisy undersampled acquisition", deg);
    add("fit", "train a network on a field", fit);
    add("query", "evaluate a field at points or on a refined grid", query);
    add("metrics", "compare two fields", metrics);
    add("wss", "wall shear stress from a field", wss);
    add("baseline", "interpolate a field with LITP or 4D RBF", baseline);
    add("sweep", "depth x width x noise hyperparameter sweep", sweep);
    auto* rep = app.add_subcommand("replay", "re-run a manifest");
    rep->add_option("--manifest", manifest, "manifest JSON")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (rep->parsed()) {
            std::optional<std::string> od;
            if (app.count("--out-dir")) od = r.out_dir;
            return replay(manifest, od, out, err);
        }
        set_thread_count(r.threads);
        r.argv = args;
        for (const auto* sub : app.get_subcommands()) r.subcommand = sub->get_name();
        const auto pos = std::find(args.begin(), args.end(), r.subcommand);
        // Globals are recorded separately; replay supplies them itself.
        static const std::string globals[] = {"--seed", "--threads", "--out-dir", "--input-base"};
        for (auto it = pos; it != args.end(); ++it) {
            const auto global = std::find_if(std::begin(globals), std::end(globals), [&](const std::string& g) {
                return *it == g || it->rfind(g + "=", 0) == 0;
            });
            if (global == std::end(globals)) r.command.push_back(*it);
            else if (*it == *global && it + 1 != args.end()) ++it;
        }
        commands.at(r.subcommand)(r);
        r.write_manifest();
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const nlohmann::json::exception& e) {
        err << "error: malformed JSON: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::bad_alloc&) {
        err << "error: out of memory\n";
        return kExitNumeric;
    }
}

} // namespace sirenflow::cli
