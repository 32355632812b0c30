#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sirenflow/cli.hpp"
#include "sirenflow/io.hpp"

namespace clitest {

namespace fs = std::filesystem;

struct Outcome {
    int code = -1;
    std::string out, err;
};

inline Outcome run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    Outcome o;
    o.code = sirenflow::cli::run(args, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

inline std::string bytes(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Files a run produced according to its manifest, including binary payloads.
inline std::vector<fs::path> manifest_outputs(const fs::path& manifest) {
    const auto m = sirenflow::io::read_json(manifest);
    std::vector<fs::path> files;
    for (const auto& [role, path] : m.at("outputs").items()) {
        const fs::path p = path.get<std::string>();
        files.push_back(p);
        if (fs::exists(p.string() + ".bin")) files.push_back(p.string() + ".bin");
    }
    return files;
}

// Replays `manifest` into `replay_dir` and returns the outputs whose bytes
// differ from the original run (or the replay's error text).
inline std::vector<std::string> replay_differences(const fs::path& manifest, const fs::path& replay_dir) {
    const auto m = sirenflow::io::read_json(manifest);
    const fs::path original_dir = m.at("out_dir").get<std::string>();
    const Outcome o = run({"replay", "--manifest", manifest.string(), "--out-dir", replay_dir.string()});
    if (o.code != 0) return {"replay exit " + std::to_string(o.code) + ": " + o.err};
    std::vector<std::string> diffs;
    for (const auto& f : manifest_outputs(manifest)) {
        const fs::path copy = replay_dir / fs::relative(f, original_dir);
        if (!fs::exists(copy) || bytes(f) != bytes(copy)) diffs.push_back(f.string());
    }
    return diffs;
}

} // namespace clitest
