#include "sirenflow/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "sirenflow/error.hpp"

namespace sirenflow::config {

namespace {

// Reads keys of one JSON object, remembering which were consumed.
class Reader {
public:
    Reader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw Error(ErrorKind::BadSpec, where_ + " must be a JSON object");
    }

    template <class T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw Error(ErrorKind::BadSpec, where_ + "." + key + " has the wrong type (got " + j_.at(key).dump() + ")");
        }
    }

    void read_vec(const char* key, Vec3& out) {
        std::vector<double> v;
        read(key, v);
        if (!j_.contains(key)) return;
        if (v.size() != 3) throw Error(ErrorKind::BadSpec, where_ + "." + key + " needs three numbers");
        out = Vec3(v[0], v[1], v[2]);
    }

    // Accepts a number or the string "inf".
    void read_number_or_inf(const char* key, double& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const Json& v = j_.at(key);
        if (v.is_number()) out = v.get<double>();
        else if (v.is_string() && (v == "inf" || v == "infinity")) out = std::numeric_limits<double>::infinity();
        else throw Error(ErrorKind::BadSpec, where_ + "." + key + " must be a number or \"inf\"");
    }

    const Json* sub(const char* key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null() ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& [k, v] : j_.items())
            if (!seen_.count(k)) {
                std::string known;
                for (const auto& s : seen_) known += (known.empty() ? "" : ", ") + s;
                throw Error(ErrorKind::BadSpec, where_ + ": unknown key '" + k + "' (known: " + known + ")");
            }
    }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

template <class F>
auto checked(F&& f, const std::string& where) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::BadSpec) throw;
        throw Error(ErrorKind::BadSpec, where + ": " + e.what());
    }
}

Json vec(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

Waveform waveform_from(const Json& j, const std::string& where) {
    Waveform w;
    Reader r(j, where);
    r.read("mean", w.mean);
    r.read("amplitude", w.amplitude);
    r.read("period", w.period);
    r.read("phase", w.phase);
    r.finish();
    return w;
}

Json waveform_json(const Waveform& w) {
    return {{"mean", w.mean}, {"amplitude", w.amplitude}, {"period", w.period}, {"phase", w.phase}};
}

} // namespace

DegradationConfig degradation_from_json(const Json& j) {
    DegradationConfig c;
    Reader r(j, "degradation config");
    if (const Json* level = r.sub("level")) {
        if (!level->is_string()) throw Error(ErrorKind::BadSpec, "degradation config.level must be a string");
        c = DegradationConfig::preset(level->get<std::string>());
    }
    r.read("h", c.h);
    r.read_number_or_inf("snr", c.snr);
    r.read("s_percent", c.s_percent);
    if (const Json* v = r.sub("venc")) {
        if (!v->is_array() || v->size() != 3 || !std::all_of(v->begin(), v->end(), [](const Json& x) { return x.is_number(); }))
            throw Error(ErrorKind::BadSpec, "degradation config.venc needs three numbers (m/s) or null");
        c.venc = Vec3((*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>());
    }
    std::vector<std::size_t> calib;
    r.read("calibration_extent", calib);
    if (j.contains("calibration_extent")) {
        if (calib.size() != 3) throw Error(ErrorKind::BadSpec, "degradation config.calibration_extent needs 3 entries");
        c.calibration_extent = {calib[0], calib[1], calib[2]};
    }
    r.read("seed", c.seed);
    r.finish();
    checked([&] { c.validate(); return 0; }, "degradation config");
    return c;
}

Json to_json(const DegradationConfig& c) {
    Json j = {{"h", c.h},
              {"snr", std::isinf(c.snr) ? Json("inf") : Json(c.snr)},
              {"s_percent", c.s_percent},
              {"calibration_extent", c.calibration_extent},
              {"seed", c.seed}};
    j["venc"] = c.venc ? vec(*c.venc) : Json(nullptr);
    return j;
}

FitConfig fit_from_json(const Json& j) {
    FitConfig c;
    Reader r(j, "fit config");
    r.read("depth", c.depth);
    r.read("width", c.width);
    r.read("omega0", c.omega0);
    r.read("seed", c.seed);
    r.read("max_iterations", c.max_iterations);
    r.read("tolerance", c.tolerance);
    r.read("history", c.history);
    std::string loss = c.loss == LossNormalization::Sum ? "sum" : "mean";
    r.read("loss", loss);
    if (loss == "sum") c.loss = LossNormalization::Sum;
    else if (loss == "mean") c.loss = LossNormalization::Mean;
    else throw Error(ErrorKind::BadSpec, "fit config.loss must be \"sum\" or \"mean\"");
    r.finish();
    checked([&] { c.validate(); return 0; }, "fit config");
    return c;
}

Json to_json(const FitConfig& c) {
    return {{"depth", c.depth},
            {"width", c.width},
            {"omega0", c.omega0},
            {"seed", c.seed},
            {"max_iterations", c.max_iterations},
            {"tolerance", c.tolerance},
            {"history", c.history},
            {"loss", c.loss == LossNormalization::Sum ? "sum" : "mean"}};
}

PhantomSpec phantom_from_json(const Json& j) {
    PhantomSpec s;
    Reader r(j, "phantom");
    std::string kind = to_string(s.kind);
    r.read("kind", kind);
    s.kind = phantom_kind_from_string(kind);
    r.read_vec("center", s.center);
    r.read_vec("axis", s.axis);
    r.read_vec("major", s.major);
    r.read("radius", s.radius);
    if (const Json* m = r.sub("minor_radius")) {
        if (!m->is_number()) throw Error(ErrorKind::BadSpec, "phantom.minor_radius must be a number");
        s.minor_radius = m->get<double>();
    }
    if (const Json* w = r.sub("axial")) s.axial = waveform_from(*w, "phantom.axial");
    if (const Json* w = r.sub("swirl")) s.swirl = waveform_from(*w, "phantom.swirl");
    r.read("core", s.core);
    r.finish();
    s.validate();
    return s;
}

Json to_json(const PhantomSpec& s) {
    Json j = {{"kind", to_string(s.kind)},   {"center", vec(s.center)},        {"axis", vec(s.axis)},
              {"major", vec(s.major)},       {"radius", s.radius},             {"axial", waveform_json(s.axial)},
              {"swirl", waveform_json(s.swirl)}, {"core", s.core}};
    j["minor_radius"] = s.minor_radius ? Json(*s.minor_radius) : Json(nullptr);
    return j;
}

GridGeometry grid_from_json(const Json& j) {
    GridGeometry g;
    Reader r(j, "grid");
    std::vector<std::size_t> dims;
    r.read("dims", dims);
    if (dims.size() != 4) throw Error(ErrorKind::BadSpec, "grid.dims needs 4 entries (nr, nc, ns, nt)");
    g.dims = {dims[0], dims[1], dims[2], dims[3]};
    r.read_vec("spacing_mm", g.spacing);
    r.read_vec("origin_mm", g.origin);
    r.read("dt_s", g.dt);
    r.read("t0_s", g.t0);
    r.finish();
    checked([&] { g.validate(); return 0; }, "grid");
    return g;
}

Json to_json(const GridGeometry& g) {
    return {{"dims", {g.dims.nr, g.dims.nc, g.dims.ns, g.dims.nt}},
            {"spacing_mm", vec(g.spacing)},
            {"origin_mm", vec(g.origin)},
            {"dt_s", g.dt},
            {"t0_s", g.t0}};
}

WssConfig wss_from_json(const Json& j) {
    WssConfig c;
    Reader r(j, "wss config");
    r.read("mu", c.mu);
    r.read("delta_n", c.delta_n);
    r.finish();
    checked([&] { c.validate(); return 0; }, "wss config");
    return c;
}

Json to_json(const WssConfig& c) { return {{"mu", c.mu}, {"delta_n", c.delta_n}}; }

Rbf4dConfig rbf_from_json(const Json& j) {
    Rbf4dConfig c;
    Reader r(j, "rbf config");
    r.read("k_neighbors", c.k_neighbors);
    if (const Json* v = r.sub("c_mq")) {
        if (!v->is_number()) throw Error(ErrorKind::BadSpec, "rbf config.c_mq must be a number");
        c.c_mq = v->get<double>();
    }
    r.read("include_wall_zeros", c.include_wall_zeros);
    if (const Json* v = r.sub("time_scale")) {
        if (!v->is_number()) throw Error(ErrorKind::BadSpec, "rbf config.time_scale must be a number");
        c.time_scale = v->get<double>();
    }
    r.finish();
    checked([&] { c.validate(); return 0; }, "rbf config");
    return c;
}

Json to_json(const Rbf4dConfig& c) {
    Json j = {{"k_neighbors", c.k_neighbors}, {"include_wall_zeros", c.include_wall_zeros}};
    j["c_mq"] = c.c_mq ? Json(*c.c_mq) : Json(nullptr);
    j["time_scale"] = c.time_scale ? Json(*c.time_scale) : Json(nullptr);
    return j;
}

} // namespace sirenflow::config
