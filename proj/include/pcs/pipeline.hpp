#ifndef PCS_PIPELINE_HPP
#define PCS_PIPELINE_HPP

// normalize -> (saliency) -> partition -> per-patch inference -> merge -> denormalize,
// plus the selection baselines and synthetic noise.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/geom.hpp"
#include "pcs/network.hpp"
#include "pcs/parallel.hpp"
#include "pcs/patching.hpp"
#include "pcs/rng.hpp"
#include "pcs/sampling.hpp"
#include "pcs/trainer.hpp"

namespace pcs {

enum class SimplifyMode { uniform, adaptive, baseline };

inline std::string_view to_string(SimplifyMode m) {
    switch (m) {
    case SimplifyMode::uniform: return "uniform";
    case SimplifyMode::adaptive: return "adaptive";
    case SimplifyMode::baseline: return "baseline";
    }
    return "?";
}

inline SimplifyMode parse_simplify_mode(std::string_view s) {
    if (s == "uniform") return SimplifyMode::uniform;
    if (s == "adaptive") return SimplifyMode::adaptive;
    if (s == "baseline") return SimplifyMode::baseline;
    fail(ErrorKind::usage, "bad-mode", "mode must be uniform, adaptive or baseline, got '" + std::string(s) + "'");
}

struct SimplifyOptions {
    double temperature = 0.1; // inference temperature, normally the schedule's t_end
    std::size_t patch_size = 0; // 0: the size the network was trained with
    std::size_t threads = 1;    // 0: all cores
    /// Adaptive mode: predict saliency with this network. Otherwise the cloud's
    /// own saliency (in input units) is used.
    const SaliencyNetParams* saliency_net = nullptr;
};

namespace pipeline_detail {

/// Seeds for `count` patches; adaptive seeds are topped up by farthest point
/// sampling when the Poisson-disk search falls short.
inline Partition initial_partition(const PointCloud& cloud, std::size_t count, bool adaptive, Rng& rng) {
    if (!adaptive) return make_partition(cloud, count, PatchMode::uniform, rng);
    Partition part = make_partition(cloud, count, PatchMode::adaptive, rng);
    if (part.num_cells() >= count) return part;
    return partition_from_seeds(cloud, extend_seeds(cloud.points(), part.seeds, count), PatchMode::adaptive);
}

} // namespace pipeline_detail

/// Simplifies `cloud` to exactly `target` points. Each patch yields m points
/// (m fixed by the network), so ceil(target / m) patches are cut and the merged
/// result is trimmed by farthest point sampling.
inline PointCloud simplify_cloud(const PointCloud& cloud, const PcsNetParams& params, SimplifyMode mode,
                                 std::size_t target, const SimplifyOptions& options, Rng& rng) {
    if (target == 0) fail(ErrorKind::usage, "count-zero", "target must be positive");
    if (target > cloud.size())
        fail(ErrorKind::usage, "count-too-large",
             "target " + std::to_string(target) + " exceeds cloud size " + std::to_string(cloud.size()));
    const std::size_t m = params.config.m;
    const std::size_t n = options.patch_size ? options.patch_size : params.config.patch_size;
    if (n < std::max(m, params.config.extractor.neighbors))
        fail(ErrorKind::usage, "patch-too-small", "patch size " + std::to_string(n) + " is below m or the kNN group size");

    const NormalizedCloud norm = normalize_to_unit_sphere(cloud);
    PointCloud work = norm.cloud;
    const bool adaptive = mode == SimplifyMode::adaptive;
    if (adaptive) {
        if (options.saliency_net) {
            const std::size_t cells = std::max<std::size_t>(1, (work.size() + 1023) / 1024);
            Rng part_rng = rng.split(0);
            const Partition coarse = make_partition(work, cells, PatchMode::uniform, part_rng);
            work.set_saliency(predict_cloud_saliency(*options.saliency_net, coarse, work));
        } else if (cloud.has_saliency()) {
            std::vector<double> s = *cloud.saliency();
            for (auto& v : s) v /= norm.radius;
            work.set_saliency(std::move(s));
        } else {
            fail(ErrorKind::usage, "missing-saliency", "adaptive mode needs a saliency network or per-point saliency");
        }
    }

    std::size_t count = std::min((target + m - 1) / m, work.size());
    Partition part = pipeline_detail::initial_partition(work, count, adaptive, rng);
    // Cells vanish only around coincident points; add seeds until m per cell covers the target.
    while (part.num_cells() * m < target && part.num_cells() < work.size()) {
        count = part.num_cells() + (target - part.num_cells() * m + m - 1) / m;
        part = partition_from_seeds(work, extend_seeds(work.points(), part.seeds, std::min(count, work.size())), part.mode);
    }

    const bool resample_on = mode != SimplifyMode::baseline;
    std::vector<PointCloud> outputs(part.num_cells(), PointCloud({Point3{}}));
    parallel_for(part.num_cells(), options.threads, [&](std::size_t id) {
        Rng patch_rng = rng.split(1000 + id);
        const Patch patch = extract_patch_input(work, part, id, n, patch_rng);
        const PatchFrame f = patch_frame(patch.input_points, params.config);
        const auto fw = run_pcs_net(params, to_local(f, patch.input_points), options.temperature, resample_on);
        outputs[id] = PointCloud(to_world(f, tensor_to_points(fw.refined)));
    });
    const PointCloud merged = merge_outputs(outputs, target, rng);
    if (merged.size() != target)
        fail(ErrorKind::data, "too-few-points", "only " + std::to_string(merged.size()) + " points produced");
    return denormalize(merged, norm.center, norm.radius);
}

// ---------------------------------------------------------------- baselines and noise

enum class BaselineMethod { fps, random };

inline BaselineMethod parse_baseline_method(std::string_view s) {
    if (s == "fps") return BaselineMethod::fps;
    if (s == "random") return BaselineMethod::random;
    fail(ErrorKind::usage, "bad-method", "method must be fps or random, got '" + std::string(s) + "'");
}

inline std::vector<std::size_t> baseline_indices(const PointCloud& cloud, std::size_t target, BaselineMethod method,
                                                 Rng& rng) {
    if (target == 0) fail(ErrorKind::usage, "count-zero", "target must be positive");
    if (target > cloud.size()) fail(ErrorKind::usage, "count-too-large", "target exceeds cloud size");
    if (method == BaselineMethod::fps) return farthest_point_sampling(cloud, target, rng);
    std::vector<std::size_t> idx(cloud.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t i = 0; i < target; ++i) std::swap(idx[i], idx[i + rng.uniform_index(idx.size() - i)]);
    idx.resize(target);
    return idx;
}

/// Subset of exactly `target` input points (saliency carried along).
inline PointCloud baseline_select(const PointCloud& cloud, std::size_t target, BaselineMethod method, Rng& rng) {
    const auto idx = baseline_indices(cloud, target, method, rng);
    std::vector<Point3> pts;
    pts.reserve(idx.size());
    for (const auto i : idx) pts.push_back(cloud[i]);
    if (!cloud.has_saliency()) return PointCloud(std::move(pts));
    std::vector<double> s;
    s.reserve(idx.size());
    for (const auto i : idx) s.push_back((*cloud.saliency())[i]);
    return PointCloud(std::move(pts), std::move(s));
}

/// Isotropic per-coordinate Gaussian noise with sigma = amplitude_pct% of the
/// bounding-sphere radius about the centroid.
inline PointCloud add_gaussian_noise(const PointCloud& cloud, double amplitude_pct, Rng& rng) {
    if (!(amplitude_pct >= 0.0)) fail(ErrorKind::usage, "bad-amplitude", "noise amplitude must be nonnegative");
    const double sigma = amplitude_pct / 100.0 * bounding_radius(cloud.points(), centroid(cloud.points()));
    std::vector<Point3> pts = cloud.points();
    for (auto& p : pts) {
        const double dx = rng.normal(), dy = rng.normal(), dz = rng.normal();
        p += Point3{dx, dy, dz} * sigma;
    }
    return PointCloud(std::move(pts), cloud.saliency());
}

} // namespace pcs

#endif
