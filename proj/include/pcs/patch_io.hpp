#ifndef PCS_PATCH_IO_HPP
#define PCS_PATCH_IO_HPP

// Patch directories: one XYZ file per patch (4th column = saliency when
// present), optional aligned target files, and manifest.json:
//
//   { "mode": "uniform", "n": 1024, "center": [x,y,z], "radius": r,
//     "patches": [ { "file": "patch_000.xyz", "target_file": "target_000.xyz",
//                    "seed_index": 17, "parent_indices": [...],
//                    "with_replacement": false }, ... ] }
//
// Patch points are stored in the unit-sphere frame of the source cloud
// (center/radius above), which is the frame training runs in.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcs/error.hpp"
#include "pcs/geom.hpp"
#include "pcs/io.hpp"
#include "pcs/patching.hpp"

namespace pcs {

struct PatchSet {
    PatchMode mode = PatchMode::uniform;
    std::size_t n = 0;
    Point3 center;
    double radius = 1.0;
    std::vector<Patch> patches;
};

inline void write_patch_set(const PatchSet& set, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorKind::data, "io-error", "cannot create " + dir.string() + ": " + ec.message());
    nlohmann::json manifest = {{"mode", std::string(to_string(set.mode))},
                               {"n", set.n},
                               {"center", {set.center.x, set.center.y, set.center.z}},
                               {"radius", set.radius},
                               {"patches", nlohmann::json::array()}};
    for (std::size_t i = 0; i < set.patches.size(); ++i) {
        const Patch& p = set.patches[i];
        char name[32];
        std::snprintf(name, sizeof name, "patch_%03zu.xyz", i);
        const PointCloud cloud = p.input_saliency ? PointCloud(p.input_points, *p.input_saliency) : PointCloud(p.input_points);
        write_cloud(cloud, dir / name);
        nlohmann::json entry = {{"file", name},
                                {"seed_index", p.seed_index},
                                {"parent_indices", p.parent_indices},
                                {"with_replacement", p.with_replacement}};
        if (p.target_points) {
            std::snprintf(name, sizeof name, "target_%03zu.xyz", i);
            write_cloud(PointCloud(*p.target_points), dir / name);
            entry["target_file"] = name;
        }
        manifest["patches"].push_back(std::move(entry));
    }
    io_detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline PatchSet read_patch_set(const std::filesystem::path& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(io_detail::read_file(dir / "manifest.json"));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::data, "bad-manifest", e.what());
    }
    PatchSet set;
    try {
        set.mode = parse_patch_mode(manifest.at("mode").get<std::string>());
        set.n = manifest.at("n").get<std::size_t>();
        const auto c = manifest.at("center");
        set.center = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
        set.radius = manifest.at("radius").get<double>();
        for (const auto& entry : manifest.at("patches")) {
            Patch p;
            const PointCloud cloud = read_cloud(dir / entry.at("file").get<std::string>());
            p.input_points = cloud.points();
            p.input_saliency = cloud.saliency();
            p.seed_index = entry.at("seed_index").get<std::size_t>();
            p.parent_indices = entry.at("parent_indices").get<std::vector<std::size_t>>();
            p.with_replacement = entry.value("with_replacement", false);
            if (entry.contains("target_file"))
                p.target_points = read_cloud(dir / entry.at("target_file").get<std::string>()).points();
            if (p.parent_indices.size() != p.input_points.size())
                fail(ErrorKind::data, "bad-manifest", "parent_indices not aligned with " + entry.at("file").get<std::string>());
            set.patches.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::data, "bad-manifest", e.what());
    }
    if (set.patches.empty()) fail(ErrorKind::data, "bad-manifest", "manifest lists no patches");
    return set;
}

} // namespace pcs

#endif
