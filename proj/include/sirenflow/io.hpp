#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sirenflow/field.hpp"
#include "sirenflow/lbfgs.hpp"
#include "sirenflow/siren.hpp"
#include "sirenflow/wss.hpp"

namespace sirenflow::io {

using Json = nlohmann::json;
namespace fs = std::filesystem;

// VF1: JSON header at `path`, float32 little-endian payload at `path` + ".bin"
// ordered (r, c, s, t, component), followed by one byte per voxel of fluid
// mask when present.
void write_vf1(const fs::path& path, const VelocityImage& img, const Json& meta = Json::object());
VelocityImage read_vf1(const fs::path& path, Json* meta = nullptr);

// SM1: JSON header at `path`, float64 little-endian parameters at `path` + ".bin".
void write_sm1(const fs::path& path, const SirenModel& model, const Json& meta = Json::object());
SirenModel read_sm1(const fs::path& path, Json* meta = nullptr);

/// Value of the "format" field of a JSON header ("VF1", "SM1", "PHANTOM", ...).
std::string sniff_format(const fs::path& path);

/// Columns x,y,z,nx,ny,nz (mm).
void write_wall_csv(const fs::path& path, const WallSurface& wall);
WallSurface read_wall_csv(const fs::path& path);

/// Columns x,y,z,t (mm, s).
void write_coords_csv(const fs::path& path, std::span<const Point4> points);
std::vector<Point4> read_coords_csv(const fs::path& path);

/// Columns x,y,z,t,vx,vy,vz.
void write_prediction_csv(const fs::path& path, std::span<const Point4> points, std::span<const Vec3> v);
std::vector<Vec3> read_prediction_csv(const fs::path& path, std::vector<Point4>* points = nullptr);

/// Writes the prediction CSV in chunks, for outputs too large to hold in memory.
class PredictionCsvWriter {
public:
    explicit PredictionCsvWriter(const fs::path& path);
    void write(std::span<const Point4> points, std::span<const Vec3> v);
    void close();
    std::size_t rows() const { return rows_; }

private:
    fs::path path_;
    std::ofstream os_;
    std::size_t rows_ = 0;
};

/// Columns x,y,z,t,wss_x,wss_y,wss_z,|wss|,flag.
void write_wss_csv(const fs::path& path, const WssField& field);
/// Columns x,y,z,tawss,flagged_times.
void write_tawss_csv(const fs::path& path, const WssField& field);

void write_trace_csv(const fs::path& path, const std::vector<optim::TraceEntry>& trace);

Json read_json(const fs::path& path);
void write_json(const fs::path& path, const Json& j);
void write_text(const fs::path& path, const std::string& text);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// Parses a CSV with a header row, checking the column names.
std::vector<std::vector<double>> read_csv(const fs::path& path, std::span<const std::string> columns);

} // namespace sirenflow::io
