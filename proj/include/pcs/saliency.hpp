#ifndef PCS_SALIENCY_HPP
#define PCS_SALIENCY_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/geom.hpp"
#include "pcs/knn.hpp"

namespace pcs {

struct SaliencyField {
    std::vector<double> values;
    bool smoothed = false;
    std::size_t degenerate_neighborhoods = 0; // raw only: neighborhoods that could not be fitted
};

/// Distance from each point to the total-least-squares plane of its k nearest
/// neighbors, the point itself excluded. Collinear neighborhoods give 0.
inline SaliencyField raw_saliency(const PointCloud& cloud, std::size_t k = 20) {
    if (k < 3) fail(ErrorKind::usage, "invalid-k", "saliency needs k >= 3");
    if (cloud.size() < k + 1)
        fail(ErrorKind::usage, "cloud-too-small",
             "saliency with k=" + std::to_string(k) + " needs at least " + std::to_string(k + 1) + " points");
    const KnnIndex index(cloud);
    SaliencyField field;
    field.values.resize(cloud.size());
    std::vector<Point3> hood;
    hood.reserve(k);
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nn = index.knn(cloud[i], k + 1);
        hood.clear();
        // Drop the query itself; with duplicates it may not be first.
        bool skipped = false;
        for (const auto& n : nn) {
            if (!skipped && n.index == i) {
                skipped = true;
                continue;
            }
            if (hood.size() < k) hood.push_back(cloud[n.index]);
        }
        try {
            field.values[i] = point_plane_distance(cloud[i], fit_plane(hood));
        } catch (const Error& e) {
            if (e.code() != "rank-deficient") throw;
            field.values[i] = 0.0;
            ++field.degenerate_neighborhoods;
        }
    }
    return field;
}

/// Gaussian-weighted average over the k nearest neighbors (the point included):
/// s_hat_i = sum_j s_j w_ij / sum_j w_ij with w_ij = exp(-|x_i - x_j|^2 / h^2).
/// k is clamped to the cloud size.
inline SaliencyField smooth_saliency(const PointCloud& cloud, const SaliencyField& raw, std::size_t k = 20,
                                     double h = 0.01) {
    if (raw.values.size() != cloud.size())
        fail(ErrorKind::usage, "saliency-length", "saliency field not aligned to cloud");
    if (!(h > 0.0)) fail(ErrorKind::usage, "invalid-bandwidth", "smoothing bandwidth h must be positive");
    if (k == 0) fail(ErrorKind::usage, "invalid-k", "k must be positive");
    k = std::min(k, cloud.size());
    const KnnIndex index(cloud);
    const double inv_h2 = 1.0 / (h * h);
    SaliencyField out;
    out.smoothed = true;
    out.values.resize(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        auto nn = index.knn(cloud[i], k);
        if (std::none_of(nn.begin(), nn.end(), [&](const Neighbor& n) { return n.index == i; })) nn.back() = {i, 0.0};
        double num = 0.0, den = 0.0;
        for (const auto& n : nn) {
            const double w = std::exp(-n.squared_distance * inv_h2);
            num += raw.values[n.index] * w;
            den += w;
        }
        out.values[i] = num / den;
    }
    return out;
}

/// Returns a copy of `cloud` carrying smoothed geometric saliency.
inline PointCloud with_geometric_saliency(const PointCloud& cloud, std::size_t k = 20, double h = 0.01) {
    const auto smoothed = smooth_saliency(cloud, raw_saliency(cloud, k), k, h);
    return PointCloud(cloud.points(), smoothed.values);
}

} // namespace pcs

#endif
