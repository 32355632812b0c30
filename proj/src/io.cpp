#include "sirenflow/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sirenflow/error.hpp"

namespace sirenflow::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

std::string payload_name(const fs::path& header) { return header.filename().string() + ".bin"; }

std::ofstream open_out(const fs::path& path, bool binary = false) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    std::ofstream os(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!os) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    return os;
}

std::ifstream open_in(const fs::path& path, bool binary = false) {
    std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
    if (!is) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
    return is;
}

std::string read_all(const fs::path& path) {
    auto is = open_in(path, true);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

Json vec_json(const Vec3& v) { return Json::array({v[0], v[1], v[2]}); }

template <class T>
T get(const Json& j, const char* key, const fs::path& path) {
    if (!j.contains(key)) throw Error(ErrorKind::Format, "'" + path.string() + "' lacks field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Format, "'" + path.string() + "' field '" + key + "': " + e.what());
    }
}

Vec3 get_vec(const Json& j, const char* key, const fs::path& path) {
    const auto a = get<std::vector<double>>(j, key, path);
    if (a.size() != 3) throw Error(ErrorKind::Format, "'" + path.string() + "' field '" + key + "' needs 3 values");
    return {a[0], a[1], a[2]};
}

void expect_format(const Json& j, const char* format, const fs::path& path) {
    if (!j.is_object() || j.value("format", std::string()) != format)
        throw Error(ErrorKind::Format, "'" + path.string() + "' is not a " + format + " header");
}

Json nondim_json(const NondimParams& p) {
    return {{"x_min_mm", vec_json(p.x_min)}, {"t_min_s", p.t_min}, {"dx_mm", vec_json(p.dx)},
            {"dt_s", p.dt},                  {"D", p.D}};
}

NondimParams nondim_from(const Json& j, const fs::path& path) {
    NondimParams p;
    p.x_min = get_vec(j, "x_min_mm", path);
    p.t_min = get<double>(j, "t_min_s", path);
    p.dx = get_vec(j, "dx_mm", path);
    p.dt = get<double>(j, "dt_s", path);
    p.D = get<double>(j, "D", path);
    return p;
}

void write_rows(const fs::path& path, const std::string& header, std::size_t rows,
                const std::function<void(std::string&, std::size_t)>& row) {
    std::string out = header + "\n";
    for (std::size_t i = 0; i < rows; ++i) {
        row(out, i);
        out.back() = '\n';
    }
    write_text(path, out);
}

void append(std::string& s, double v) {
    s += format_double(v);
    s += ',';
}

} // namespace

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_text(const fs::path& path, const std::string& text) {
    auto os = open_out(path, true);
    os.write(text.data(), std::streamsize(text.size()));
    if (!os) throw Error(ErrorKind::Io, "failed writing '" + path.string() + "'");
}

Json read_json(const fs::path& path) {
    const std::string text = read_all(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorKind::Format, "'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

std::string sniff_format(const fs::path& path) {
    const Json j = read_json(path);
    if (!j.is_object() || !j.contains("format") || !j["format"].is_string())
        throw Error(ErrorKind::Format, "'" + path.string() + "' has no \"format\" field");
    return j["format"].get<std::string>();
}

void write_vf1(const fs::path& path, const VelocityImage& img, const Json& meta) {
    const auto& g = img.geometry();
    Json h = {{"format", "VF1"},
              {"version", 1},
              {"dims", {g.dims.nr, g.dims.nc, g.dims.ns, g.dims.nt}},
              {"spacing_mm", vec_json(g.spacing)},
              {"origin_mm", vec_json(g.origin)},
              {"dt_s", g.dt},
              {"t0_s", g.t0},
              {"dtype", "f32"},
              {"endianness", "little"},
              {"order", "r,c,s,t,component"},
              {"velocity_unit", "m/s"},
              {"has_mask", img.has_mask()},
              {"payload", payload_name(path)},
              {"meta", meta}};
    const auto data = img.data();
    std::string bin(data.size() * sizeof(float), '\0');
    for (std::size_t i = 0; i < data.size(); ++i) {
        const float f = static_cast<float>(data[i]);
        std::memcpy(bin.data() + i * sizeof(float), &f, sizeof f);
    }
    if (img.has_mask()) bin.append(img.mask()->begin(), img.mask()->end());
    write_text(path.string() + ".bin", bin);
    write_json(path, h);
}

VelocityImage read_vf1(const fs::path& path, Json* meta) {
    const Json h = read_json(path);
    expect_format(h, "VF1", path);
    if (h.value("dtype", std::string()) != "f32")
        throw Error(ErrorKind::Format, "'" + path.string() + "' has unsupported dtype");
    const auto dims = get<std::vector<std::size_t>>(h, "dims", path);
    if (dims.size() != 4) throw Error(ErrorKind::Format, "'" + path.string() + "' dims must have 4 entries");
    GridGeometry g;
    g.dims = {dims[0], dims[1], dims[2], dims[3]};
    g.spacing = get_vec(h, "spacing_mm", path);
    g.origin = get_vec(h, "origin_mm", path);
    g.dt = get<double>(h, "dt_s", path);
    g.t0 = get<double>(h, "t0_s", path);
    try {
        g.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::Format, "'" + path.string() + "': " + e.what());
    }
    const bool has_mask = get<bool>(h, "has_mask", path);
    const fs::path bin_path = path.parent_path() / get<std::string>(h, "payload", path);
    const std::string bin = read_all(bin_path);
    const std::size_t n = g.dims.voxels();
    const std::size_t expected = 3 * n * sizeof(float) + (has_mask ? n : 0);
    if (bin.size() != expected)
        throw Error(ErrorKind::Format, "'" + bin_path.string() + "' holds " + std::to_string(bin.size()) +
                                           " bytes, header implies " + std::to_string(expected));
    std::vector<double> data(3 * n);
    for (std::size_t i = 0; i < data.size(); ++i) {
        float f;
        std::memcpy(&f, bin.data() + i * sizeof(float), sizeof f);
        data[i] = f;
    }
    std::optional<std::vector<std::uint8_t>> mask;
    if (has_mask) mask.emplace(bin.begin() + std::ptrdiff_t(3 * n * sizeof(float)), bin.end());
    if (meta) *meta = h.value("meta", Json::object());
    return VelocityImage(g, std::move(data), std::move(mask));
}

void write_sm1(const fs::path& path, const SirenModel& model, const Json& meta) {
    Json h = {{"format", "SM1"},
              {"version", 1},
              {"depth", model.depth()},
              {"width", model.width()},
              {"omega0", model.omega0()},
              {"seed", model.seed()},
              {"nondim", nondim_json(model.nondim())},
              {"parameter_count", model.parameters().size()},
              {"dtype", "f64"},
              {"endianness", "little"},
              {"layout", "per layer: row-major weight, then bias"},
              {"payload", payload_name(path)},
              {"meta", meta}};
    if (const auto& d = model.domain())
        h["domain"] = {{"lo_mm", vec_json(d->lo)}, {"hi_mm", vec_json(d->hi)}, {"t_lo_s", d->t_lo}, {"t_hi_s", d->t_hi}};
    else
        h["domain"] = nullptr;
    const auto& p = model.parameters();
    std::string bin(std::size_t(p.size()) * sizeof(double), '\0');
    std::memcpy(bin.data(), p.data(), bin.size());
    write_text(path.string() + ".bin", bin);
    write_json(path, h);
}

SirenModel read_sm1(const fs::path& path, Json* meta) {
    const Json h = read_json(path);
    expect_format(h, "SM1", path);
    const int depth = get<int>(h, "depth", path);
    const int width = get<int>(h, "width", path);
    if (depth < 1 || width < 1) throw Error(ErrorKind::Format, "'" + path.string() + "' has invalid depth/width");
    SirenModel m(depth, width, get<double>(h, "omega0", path), nondim_from(get<Json>(h, "nondim", path), path));
    m.set_seed(get<std::uint64_t>(h, "seed", path));
    if (h.contains("domain") && !h["domain"].is_null()) {
        const Json& d = h["domain"];
        m.set_domain(Domain{get_vec(d, "lo_mm", path), get_vec(d, "hi_mm", path), get<double>(d, "t_lo_s", path),
                            get<double>(d, "t_hi_s", path)});
    }
    const fs::path bin_path = path.parent_path() / get<std::string>(h, "payload", path);
    const std::string bin = read_all(bin_path);
    const auto count = std::size_t(m.parameters().size());
    if (bin.size() != count * sizeof(double) || get<std::size_t>(h, "parameter_count", path) != count)
        throw Error(ErrorKind::Format, "'" + bin_path.string() + "' does not match a " + std::to_string(depth) + "x" +
                                           std::to_string(width) + " network");
    Eigen::VectorXd params(static_cast<Eigen::Index>(count));
    std::memcpy(params.data(), bin.data(), bin.size());
    m.set_parameters(params);
    if (meta) *meta = h.value("meta", Json::object());
    return m;
}

std::vector<std::vector<double>> read_csv(const fs::path& path, std::span<const std::string> columns) {
    const std::string text = read_all(path);
    std::vector<std::vector<double>> rows;
    std::size_t pos = 0, line_no = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        std::vector<std::string_view> cells;
        for (std::size_t a = 0;;) {
            const std::size_t b = line.find(',', a);
            cells.push_back(line.substr(a, b == std::string_view::npos ? std::string_view::npos : b - a));
            if (b == std::string_view::npos) break;
            a = b + 1;
        }
        const auto where = "'" + path.string() + "' line " + std::to_string(line_no);
        if (cells.size() != columns.size())
            throw Error(ErrorKind::Format, where + ": expected " + std::to_string(columns.size()) + " columns, got " +
                                               std::to_string(cells.size()));
        if (header) {
            for (std::size_t i = 0; i < cells.size(); ++i)
                if (cells[i] != columns[i])
                    throw Error(ErrorKind::Format, where + ": expected column '" + columns[i] + "', got '" +
                                                       std::string(cells[i]) + "'");
            header = false;
            continue;
        }
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const char* b = cells[i].data();
            const char* e = b + cells[i].size();
            while (b < e && *b == ' ') ++b;
            const auto res = std::from_chars(b, e, row[i]);
            if (res.ec != std::errc() || res.ptr != e)
                throw Error(ErrorKind::Format, where + ": '" + std::string(cells[i]) + "' is not a number");
        }
        rows.push_back(std::move(row));
    }
    if (header) throw Error(ErrorKind::Format, "'" + path.string() + "' is empty");
    return rows;
}

void write_wall_csv(const fs::path& path, const WallSurface& wall) {
    write_rows(path, "x,y,z,nx,ny,nz", wall.size(), [&](std::string& s, std::size_t i) {
        for (int a = 0; a < 3; ++a) append(s, wall.points()[i][a]);
        for (int a = 0; a < 3; ++a) append(s, wall.normals()[i][a]);
    });
}

WallSurface read_wall_csv(const fs::path& path) {
    static const std::string cols[] = {"x", "y", "z", "nx", "ny", "nz"};
    const auto rows = read_csv(path, cols);
    std::vector<Vec3> p, n;
    for (const auto& r : rows) {
        p.emplace_back(r[0], r[1], r[2]);
        n.emplace_back(r[3], r[4], r[5]);
    }
    try {
        return WallSurface(std::move(p), std::move(n), WallSurface::Provenance::File);
    } catch (const Error& e) {
        throw Error(ErrorKind::Format, "'" + path.string() + "': " + e.what());
    }
}

void write_coords_csv(const fs::path& path, std::span<const Point4> points) {
    write_rows(path, "x,y,z,t", points.size(), [&](std::string& s, std::size_t i) {
        for (int a = 0; a < 3; ++a) append(s, points[i].x[a]);
        append(s, points[i].t);
    });
}

std::vector<Point4> read_coords_csv(const fs::path& path) {
    static const std::string cols[] = {"x", "y", "z", "t"};
    std::vector<Point4> out;
    for (const auto& r : read_csv(path, cols)) out.push_back({Vec3(r[0], r[1], r[2]), r[3]});
    return out;
}

void write_prediction_csv(const fs::path& path, std::span<const Point4> points, std::span<const Vec3> v) {
    if (points.size() != v.size()) throw Error(ErrorKind::InvalidArgument, "prediction count mismatch");
    write_rows(path, "x,y,z,t,vx,vy,vz", points.size(), [&](std::string& s, std::size_t i) {
        for (int a = 0; a < 3; ++a) append(s, points[i].x[a]);
        append(s, points[i].t);
        for (int a = 0; a < 3; ++a) append(s, v[i][a]);
    });
}

PredictionCsvWriter::PredictionCsvWriter(const fs::path& path) : path_(path), os_(open_out(path, true)) {
    os_ << "x,y,z,t,vx,vy,vz\n";
}

void PredictionCsvWriter::write(std::span<const Point4> points, std::span<const Vec3> v) {
    if (points.size() != v.size()) throw Error(ErrorKind::InvalidArgument, "prediction count mismatch");
    std::string s;
    for (std::size_t i = 0; i < points.size(); ++i) {
        for (int a = 0; a < 3; ++a) append(s, points[i].x[a]);
        append(s, points[i].t);
        for (int a = 0; a < 3; ++a) append(s, v[i][a]);
        s.back() = '\n';
    }
    os_.write(s.data(), std::streamsize(s.size()));
    if (!os_) throw Error(ErrorKind::Io, "failed writing '" + path_.string() + "'");
    rows_ += points.size();
}

void PredictionCsvWriter::close() {
    os_.close();
    if (!os_) throw Error(ErrorKind::Io, "failed writing '" + path_.string() + "'");
}

std::vector<Vec3> read_prediction_csv(const fs::path& path, std::vector<Point4>* points) {
    static const std::string cols[] = {"x", "y", "z", "t", "vx", "vy", "vz"};
    std::vector<Vec3> out;
    if (points) points->clear();
    for (const auto& r : read_csv(path, cols)) {
        out.emplace_back(r[4], r[5], r[6]);
        if (points) points->push_back({Vec3(r[0], r[1], r[2]), r[3]});
    }
    return out;
}

void write_wss_csv(const fs::path& path, const WssField& f) {
    const std::size_t nt = f.times.size();
    write_rows(path, "x,y,z,t,wss_x,wss_y,wss_z,|wss|,flag", f.points.size() * nt, [&](std::string& s, std::size_t k) {
        const std::size_t i = k / nt, j = k % nt;
        for (int a = 0; a < 3; ++a) append(s, f.points[i][a]);
        append(s, f.times[j]);
        for (int a = 0; a < 3; ++a) append(s, f.wss[k][a]);
        append(s, f.wss[k].norm());
        s += f.flagged[k] ? "1," : "0,";
    });
}

void write_tawss_csv(const fs::path& path, const WssField& f) {
    const std::size_t nt = f.times.size();
    write_rows(path, "x,y,z,tawss,flagged_times", f.points.size(), [&](std::string& s, std::size_t i) {
        for (int a = 0; a < 3; ++a) append(s, f.points[i][a]);
        append(s, f.tawss[i]);
        std::size_t flagged = 0;
        for (std::size_t j = 0; j < nt; ++j) flagged += f.flagged[i * nt + j];
        s += std::to_string(flagged) + ",";
    });
}

void write_trace_csv(const fs::path& path, const std::vector<optim::TraceEntry>& trace) {
    write_rows(path, "iteration,loss,data_term,wall_term,grad_norm,step_length", trace.size(),
               [&](std::string& s, std::size_t i) {
                   const auto& e = trace[i];
                   s += std::to_string(e.iteration) + ",";
                   append(s, e.loss);
                   append(s, e.data_term);
                   append(s, e.wall_term);
                   append(s, e.grad_norm);
                   append(s, e.step_length);
               });
}

} // namespace sirenflow::io
