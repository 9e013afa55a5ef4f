#ifndef PCS_SAMPLING_HPP
#define PCS_SAMPLING_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/geom.hpp"
#include "pcs/rng.hpp"

namespace pcs {

/// Greedy max-min selection starting from a given index. Ties go to the lower index.
inline std::vector<std::size_t> farthest_point_sampling_from(std::span<const Point3> points, std::size_t count,
                                                             std::size_t first) {
    if (count == 0) return {};
    if (count > points.size())
        fail(ErrorKind::usage, "count-too-large",
             "requested " + std::to_string(count) + " of " + std::to_string(points.size()) + " points");
    if (first >= points.size()) fail(ErrorKind::usage, "index-out-of-range", "first FPS index out of range");

    std::vector<std::size_t> selected;
    selected.reserve(count);
    std::vector<double> min_d2(points.size(), std::numeric_limits<double>::infinity());
    std::size_t current = first;
    for (;;) {
        selected.push_back(current);
        if (selected.size() == count) break;
        min_d2[current] = -1.0; // selected points never win again
        std::size_t best = 0;
        double best_d2 = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (min_d2[i] < 0.0) continue;
            const double d2 = squared_distance(points[i], points[current]);
            if (d2 < min_d2[i]) min_d2[i] = d2;
            if (min_d2[i] > best_d2) {
                best_d2 = min_d2[i];
                best = i;
            }
        }
        current = best;
    }
    return selected;
}

/// Farthest point sampling with a seeded, uniformly chosen first point.
inline std::vector<std::size_t> farthest_point_sampling(std::span<const Point3> points, std::size_t count, Rng& rng) {
    if (count > points.size())
        fail(ErrorKind::usage, "count-too-large",
             "requested " + std::to_string(count) + " of " + std::to_string(points.size()) + " points");
    if (count == 0) return {};
    return farthest_point_sampling_from(points, count, rng.uniform_index(points.size()));
}

inline std::vector<std::size_t> farthest_point_sampling(const PointCloud& cloud, std::size_t count, Rng& rng) {
    return farthest_point_sampling(std::span<const Point3>(cloud.points()), count, rng);
}

struct PoissonDiskResult {
    std::vector<std::size_t> seeds;
    double base_radius = 0.0; // radius of a point with mean weight
};

namespace detail {

// One dart-throwing pass. Returns nullopt once more than `cap` seeds are accepted.
inline std::optional<std::vector<std::size_t>> dart_throw(std::span<const Point3> points,
                                                          std::span<const std::size_t> order,
                                                          std::span<const double> radius_scale, double base,
                                                          std::size_t cap) {
    std::vector<std::size_t> accepted;
    for (const std::size_t i : order) {
        const double ri = base * radius_scale[i];
        bool ok = true;
        for (const std::size_t j : accepted) {
            const double reach = 0.5 * (ri + base * radius_scale[j]);
            if (!(squared_distance(points[i], points[j]) > reach * reach)) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        accepted.push_back(i);
        if (accepted.size() > cap) return std::nullopt;
    }
    return accepted;
}

} // namespace detail

/// Weighted Poisson-disk seeds by dart throwing over a shuffled point order.
///
/// A candidate is accepted iff its distance to every accepted seed exceeds the
/// mean of their radii. Radii follow r_i = base * (1 + eps) / (eps + w_i / mean(w))
/// with eps = 0.1, so a mean-weight point has radius exactly `base`. `base` is
/// bisected (log scale, at most 20 rounds) until the seed count falls within
/// [0.9, 1.1] * target_count; otherwise the closest count seen is returned.
inline PoissonDiskResult poisson_disk_seeds(std::span<const Point3> points, std::size_t target_count,
                                            std::optional<std::span<const double>> weights, Rng& rng) {
    constexpr double kEps = 0.1;
    constexpr int kRounds = 20;
    if (points.empty()) fail(ErrorKind::usage, "empty-cloud", "cannot seed an empty cloud");
    if (target_count == 0) fail(ErrorKind::usage, "count-zero", "target_count must be positive");
    if (target_count > points.size())
        fail(ErrorKind::usage, "count-too-large",
             "requested " + std::to_string(target_count) + " seeds from " + std::to_string(points.size()) + " points");

    std::vector<double> scale(points.size(), 1.0);
    if (weights) {
        if (weights->size() != points.size()) fail(ErrorKind::usage, "weights-length", "weights not aligned to cloud");
        double sum = 0.0;
        for (const double w : *weights) {
            if (!std::isfinite(w) || w < 0.0) fail(ErrorKind::usage, "bad-weights", "weights must be finite and >= 0");
            sum += w;
        }
        if (!(sum > 0.0)) fail(ErrorKind::usage, "bad-weights", "weights are all zero");
        const double mean = sum / static_cast<double>(points.size());
        for (std::size_t i = 0; i < points.size(); ++i) scale[i] = (1.0 + kEps) / (kEps + (*weights)[i] / mean);
    }

    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));

    const Point3 c = centroid(points);
    const double diameter = 2.0 * bounding_radius(points, c);
    const double min_scale = *std::min_element(scale.begin(), scale.end());
    // At `hi` every radius covers the whole cloud, so exactly one seed survives.
    double hi = diameter > 0.0 ? 2.0 * diameter / min_scale : 1.0;
    double lo = hi * 1e-6;

    const auto lower = static_cast<std::size_t>(std::ceil(0.9 * static_cast<double>(target_count)));
    const auto upper = static_cast<std::size_t>(std::floor(1.1 * static_cast<double>(target_count)));
    const std::size_t cap = std::max<std::size_t>(2 * upper + 8, target_count + 1);

    PoissonDiskResult best;
    best.base_radius = hi;
    best.seeds = detail::dart_throw(points, order, scale, hi, cap).value();
    auto distance_to_target = [&](std::size_t n) {
        return n > target_count ? n - target_count : target_count - n;
    };
    if (best.seeds.size() >= lower && best.seeds.size() <= upper) return best;

    for (int round = 0; round < kRounds; ++round) {
        const double mid = std::sqrt(lo * hi);
        auto seeds = detail::dart_throw(points, order, scale, mid, cap);
        if (!seeds) { // far too many seeds
            lo = mid;
            continue;
        }
        const std::size_t n = seeds->size();
        if (distance_to_target(n) < distance_to_target(best.seeds.size())) {
            best.seeds = std::move(*seeds);
            best.base_radius = mid;
        }
        if (n >= lower && n <= upper) break;
        if (n > target_count) lo = mid;
        else hi = mid;
    }
    return best;
}

} // namespace pcs

#endif
