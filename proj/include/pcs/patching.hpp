#ifndef PCS_PATCHING_HPP
#define PCS_PATCHING_HPP

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/geom.hpp"
#include "pcs/knn.hpp"
#include "pcs/rng.hpp"
#include "pcs/sampling.hpp"

namespace pcs {

enum class PatchMode { uniform, adaptive };

inline std::string_view to_string(PatchMode mode) { return mode == PatchMode::uniform ? "uniform" : "adaptive"; }

inline PatchMode parse_patch_mode(std::string_view s) {
    if (s == "uniform") return PatchMode::uniform;
    if (s == "adaptive") return PatchMode::adaptive;
    fail(ErrorKind::usage, "bad-mode", "patch mode must be uniform or adaptive, got '" + std::string(s) + "'");
}

/// Voronoi cells of a cloud around seed points. `assignment[i]` is the seed id
/// (position in `seeds`) that owns point i.
struct Partition {
    std::vector<std::size_t> assignment;
    std::vector<std::size_t> seeds;
    PatchMode mode = PatchMode::uniform;

    std::size_t num_cells() const { return seeds.size(); }

    std::vector<std::vector<std::size_t>> cells() const {
        std::vector<std::vector<std::size_t>> out(seeds.size());
        for (std::size_t i = 0; i < assignment.size(); ++i) out[assignment[i]].push_back(i);
        return out;
    }
};

/// Network input drawn from one cell.
struct Patch {
    std::vector<std::size_t> parent_indices; // aligned with input_points
    std::size_t seed_index = 0;
    std::vector<Point3> input_points;
    std::optional<std::vector<double>> input_saliency;
    bool with_replacement = false;
    /// Optional loss targets aligned with input_points (e.g. clean positions
    /// when the inputs are noisy). Losses fall back to input_points.
    std::optional<std::vector<Point3>> target_points;

    std::size_t size() const { return input_points.size(); }
    const std::vector<Point3>& loss_points() const { return target_points ? *target_points : input_points; }
};

/// Nearest-seed assignment (ties to the lower seed id). Seeds whose cells come
/// out empty (possible with coincident points) are removed and points reassigned.
inline Partition partition_from_seeds(const PointCloud& cloud, std::vector<std::size_t> seeds, PatchMode mode) {
    if (seeds.empty()) fail(ErrorKind::usage, "no-seeds", "partition needs at least one seed");
    for (const auto s : seeds)
        if (s >= cloud.size()) fail(ErrorKind::usage, "index-out-of-range", "seed index out of range");
    Partition part;
    part.mode = mode;
    for (;;) {
        std::vector<Point3> seed_points;
        seed_points.reserve(seeds.size());
        for (const auto s : seeds) seed_points.push_back(cloud[s]);
        const KnnIndex index(seed_points);
        part.assignment.assign(cloud.size(), 0);
        std::vector<std::size_t> owned(seeds.size(), 0);
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            part.assignment[i] = index.nearest(cloud[i]).index;
            ++owned[part.assignment[i]];
        }
        if (std::all_of(owned.begin(), owned.end(), [](std::size_t n) { return n > 0; })) break;
        std::vector<std::size_t> kept;
        for (std::size_t s = 0; s < seeds.size(); ++s)
            if (owned[s] > 0) kept.push_back(seeds[s]);
        seeds = std::move(kept);
    }
    part.seeds = std::move(seeds);
    return part;
}

/// Uniform mode seeds by farthest point sampling; adaptive mode seeds by
/// saliency-weighted Poisson-disk sampling (the cloud must carry saliency).
inline Partition make_partition(const PointCloud& cloud, std::size_t num_patches, PatchMode mode, Rng& rng) {
    if (num_patches == 0) fail(ErrorKind::usage, "count-zero", "num_patches must be positive");
    if (num_patches > cloud.size())
        fail(ErrorKind::usage, "count-too-large", "more patches than points");
    std::vector<std::size_t> seeds;
    if (mode == PatchMode::uniform) {
        seeds = farthest_point_sampling(cloud, num_patches, rng);
    } else {
        if (!cloud.has_saliency()) fail(ErrorKind::usage, "missing-saliency", "adaptive patching needs per-point saliency");
        seeds = poisson_disk_seeds(cloud.points(), num_patches, std::span<const double>(*cloud.saliency()), rng).seeds;
    }
    return partition_from_seeds(cloud, std::move(seeds), mode);
}

/// Adds farthest-point seeds (relative to the existing ones) until `count` seeds exist.
inline std::vector<std::size_t> extend_seeds(std::span<const Point3> points, std::vector<std::size_t> seeds,
                                             std::size_t count) {
    if (count > points.size()) fail(ErrorKind::usage, "count-too-large", "more seeds than points");
    if (seeds.size() >= count) return seeds;
    std::vector<double> min_d2(points.size(), std::numeric_limits<double>::infinity());
    for (const auto s : seeds)
        for (std::size_t i = 0; i < points.size(); ++i) min_d2[i] = std::min(min_d2[i], squared_distance(points[i], points[s]));
    for (const auto s : seeds) min_d2[s] = -1.0;
    while (seeds.size() < count) {
        std::size_t best = 0;
        double best_d2 = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points.size(); ++i)
            if (min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        seeds.push_back(best);
        min_d2[best] = -1.0;
        for (std::size_t i = 0; i < points.size(); ++i)
            if (min_d2[i] >= 0.0) min_d2[i] = std::min(min_d2[i], squared_distance(points[i], points[best]));
    }
    return seeds;
}

/// Draws n points from one cell: uniformly without replacement when the cell
/// has at least n points, otherwise with replacement (flagged on the patch).
inline Patch extract_patch_input(const PointCloud& cloud, const Partition& partition, std::size_t seed_id,
                                 std::size_t n, Rng& rng) {
    if (seed_id >= partition.seeds.size()) fail(ErrorKind::usage, "index-out-of-range", "seed id out of range");
    if (n == 0) fail(ErrorKind::usage, "count-zero", "patch size must be positive");
    std::vector<std::size_t> cell;
    for (std::size_t i = 0; i < partition.assignment.size(); ++i)
        if (partition.assignment[i] == seed_id) cell.push_back(i);
    if (cell.empty()) fail(ErrorKind::data, "empty-cell", "cell " + std::to_string(seed_id) + " has no points");

    Patch patch;
    patch.seed_index = partition.seeds[seed_id];
    if (cell.size() >= n) {
        for (std::size_t i = 0; i < n; ++i) std::swap(cell[i], cell[i + rng.uniform_index(cell.size() - i)]);
        patch.parent_indices.assign(cell.begin(), cell.begin() + static_cast<std::ptrdiff_t>(n));
    } else {
        patch.with_replacement = true;
        patch.parent_indices.reserve(n);
        for (std::size_t i = 0; i < n; ++i) patch.parent_indices.push_back(cell[rng.uniform_index(cell.size())]);
    }
    patch.input_points.reserve(n);
    for (const auto i : patch.parent_indices) patch.input_points.push_back(cloud[i]);
    if (cloud.has_saliency()) {
        patch.input_saliency.emplace();
        for (const auto i : patch.parent_indices) patch.input_saliency->push_back((*cloud.saliency())[i]);
    }
    return patch;
}

/// Concatenates per-patch outputs; trims to `target` points by farthest point
/// sampling when the total exceeds it.
inline PointCloud merge_outputs(std::span<const PointCloud> outputs, std::size_t target, Rng& rng) {
    if (outputs.empty()) fail(ErrorKind::usage, "no-outputs", "merge needs at least one patch output");
    std::vector<Point3> all;
    for (const auto& o : outputs) all.insert(all.end(), o.points().begin(), o.points().end());
    if (all.size() <= target) return PointCloud(std::move(all));
    const auto keep = farthest_point_sampling(std::span<const Point3>(all), target, rng);
    std::vector<Point3> out;
    out.reserve(target);
    for (const auto i : keep) out.push_back(all[i]);
    return PointCloud(std::move(out));
}

} // namespace pcs

#endif
