#ifndef PCS_METRICS_HPP
#define PCS_METRICS_HPP

// Fidelity and mesh-quality metrics.
//
// Chamfer and Hausdorff use squared nearest-neighbor distances, each direction
// normalized by its own cloud size. Point-to-face is the mean unsquared
// distance to the nearest triangle.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcs/error.hpp"
#include "pcs/geom.hpp"
#include "pcs/knn.hpp"
#include "pcs/mesh.hpp"
#include "pcs/parallel.hpp"

namespace pcs {

namespace metrics_detail {

inline void require_nonempty(std::span<const Point3> a, std::span<const Point3> b) {
    if (a.empty() || b.empty()) fail(ErrorKind::data, "empty-cloud", "metric needs two nonempty clouds");
}

/// Squared distance from every point of `from` to its nearest point of `to`.
inline std::vector<double> nearest_sq(std::span<const Point3> from, std::span<const Point3> to, std::size_t threads) {
    const KnnIndex index(to);
    std::vector<double> out(from.size());
    parallel_for(from.size(), threads, [&](std::size_t i) { out[i] = index.nearest(from[i]).squared_distance; });
    return out;
}

inline double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace metrics_detail

/// (1/|P|) sum_p min_q |p-q|^2 + (1/|Q|) sum_q min_p |q-p|^2.
inline double chamfer(std::span<const Point3> p, std::span<const Point3> q, std::size_t threads = 1) {
    metrics_detail::require_nonempty(p, q);
    return metrics_detail::mean(metrics_detail::nearest_sq(p, q, threads)) +
           metrics_detail::mean(metrics_detail::nearest_sq(q, p, threads));
}

/// Larger of the two directed maxima of squared nearest distances.
inline double hausdorff(std::span<const Point3> p, std::span<const Point3> q, std::size_t threads = 1) {
    metrics_detail::require_nonempty(p, q);
    const auto a = metrics_detail::nearest_sq(p, q, threads);
    const auto b = metrics_detail::nearest_sq(q, p, threads);
    return std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
}

// ---------------------------------------------------------------- point to mesh

/// Bounding-volume hierarchy over triangles for exact closest-triangle queries.
class TriangleTree {
public:
    explicit TriangleTree(const TriangleMesh& mesh) : mesh_(&mesh) {
        validate_mesh(mesh);
        order_.resize(mesh.triangles.size());
        centers_.resize(mesh.triangles.size());
        for (std::size_t t = 0; t < order_.size(); ++t) {
            order_[t] = t;
            const auto c = mesh.corners(t);
            centers_[t] = (c[0] + c[1] + c[2]) / 3.0;
        }
        build(0, order_.size());
    }

    /// Squared distance to the closest triangle.
    double squared_distance_to(const Point3& p) const {
        double best = std::numeric_limits<double>::infinity();
        search(0, p, best);
        return best;
    }

private:
    struct Node {
        std::size_t begin = 0, end = 0;
        std::size_t left = 0, right = 0; // 0 means leaf
        Point3 lo, hi;
    };

    static constexpr std::size_t kLeafSize = 4;

    std::size_t build(std::size_t begin, std::size_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        constexpr double inf = std::numeric_limits<double>::infinity();
        std::array<double, 3> lo{inf, inf, inf}, hi{-inf, -inf, -inf};
        for (std::size_t i = begin; i < end; ++i)
            for (const auto& v : mesh_->corners(order_[i]))
                for (std::size_t a = 0; a < 3; ++a) {
                    lo[a] = std::min(lo[a], v[a]);
                    hi[a] = std::max(hi[a], v[a]);
                }
        node.lo = {lo[0], lo[1], lo[2]};
        node.hi = {hi[0], hi[1], hi[2]};
        const std::size_t id = nodes_.size();
        nodes_.push_back(node);
        if (end - begin <= kLeafSize) return id;
        std::size_t axis = 0;
        const Point3 ext = node.hi - node.lo;
        if (ext.y > ext[axis]) axis = 1;
        if (ext.z > ext[axis]) axis = 2;
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::size_t a, std::size_t b) { return centers_[a][axis] < centers_[b][axis]; });
        const std::size_t l = build(begin, mid);
        const std::size_t r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    static double box_sq(const Node& n, const Point3& p) {
        double d = 0.0;
        for (std::size_t a = 0; a < 3; ++a) {
            const double e = std::max({n.lo[a] - p[a], 0.0, p[a] - n.hi[a]});
            d += e * e;
        }
        return d;
    }

    void search(std::size_t id, const Point3& p, double& best) const {
        const Node& n = nodes_[id];
        // The closest point of a triangle can land a rounding error outside its
        // box; the slack keeps pruning from skipping the true minimum.
        if (box_sq(n, p) * (1.0 - 1e-9) > best) return;
        if (n.left == 0) {
            for (std::size_t i = n.begin; i < n.end; ++i) {
                const auto c = mesh_->corners(order_[i]);
                best = std::min(best, point_triangle_squared_distance(p, c[0], c[1], c[2]));
            }
            return;
        }
        const double dl = box_sq(nodes_[n.left], p), dr = box_sq(nodes_[n.right], p);
        if (dl <= dr) {
            search(n.left, p, best);
            search(n.right, p, best);
        } else {
            search(n.right, p, best);
            search(n.left, p, best);
        }
    }

    const TriangleMesh* mesh_;
    std::vector<std::size_t> order_;
    std::vector<Point3> centers_;
    std::vector<Node> nodes_;
};

/// Mean over points of the unsquared distance to the nearest triangle.
inline double point_to_face(std::span<const Point3> points, const TriangleMesh& mesh, std::size_t threads = 1) {
    if (points.empty()) fail(ErrorKind::data, "empty-cloud", "point_to_face needs at least one point");
    const TriangleTree tree(mesh);
    std::vector<double> d(points.size());
    parallel_for(points.size(), threads, [&](std::size_t i) { d[i] = std::sqrt(tree.squared_distance_to(points[i])); });
    return metrics_detail::mean(d);
}

// ---------------------------------------------------------------- triangle quality

struct TriangleShape {
    double g = 0.0;                 // 2 sqrt(3) S / (p h)
    double min_angle_degrees = 0.0;
};

inline TriangleShape triangle_shape(const Point3& a, const Point3& b, const Point3& c) {
    if (is_degenerate_triangle(a, b, c)) fail(ErrorKind::data, "degenerate-triangle", "triangle has zero area");
    const double la = distance(b, c), lb = distance(c, a), lc = distance(a, b);
    const double area = triangle_area(a, b, c);
    const double half_perimeter = 0.5 * (la + lb + lc);
    const double longest = std::max({la, lb, lc});
    auto angle = [](const Point3& o, const Point3& u, const Point3& v) {
        const Point3 e1 = u - o, e2 = v - o;
        return std::atan2(norm(cross(e1, e2)), dot(e1, e2));
    };
    const double theta = std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)});
    return {2.0 * std::sqrt(3.0) * area / (half_perimeter * longest), theta * 180.0 / std::numbers::pi};
}

struct TriangleQuality {
    double g_mean = 0.0;
    double theta_avg_degrees = 0.0;
    double pct_below_30 = 0.0;
};

inline TriangleQuality triangle_quality(const TriangleMesh& mesh) {
    validate_mesh(mesh);
    TriangleQuality q;
    std::size_t below = 0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto c = mesh.corners(t);
        const auto s = triangle_shape(c[0], c[1], c[2]);
        q.g_mean += s.g;
        q.theta_avg_degrees += s.min_angle_degrees;
        if (s.min_angle_degrees < 30.0) ++below;
    }
    const double n = static_cast<double>(mesh.triangles.size());
    q.g_mean /= n;
    q.theta_avg_degrees /= n;
    q.pct_below_30 = 100.0 * static_cast<double>(below) / n;
    return q;
}

// ---------------------------------------------------------------- report

struct MetricsReport {
    double d_c = 0.0;
    double d_h = 0.0;
    std::optional<double> p2f;
    std::optional<TriangleQuality> quality;
};

inline nlohmann::json to_json(const MetricsReport& r) {
    nlohmann::json j = {{"d_c", r.d_c}, {"d_h", r.d_h}};
    if (r.p2f) j["p2f"] = *r.p2f;
    if (r.quality) {
        j["g_mean"] = r.quality->g_mean;
        j["theta_avg_degrees"] = r.quality->theta_avg_degrees;
        j["pct_below_30"] = r.quality->pct_below_30;
    }
    return j;
}

/// Aligned table in the column order D_c, D_h, p2f, G, theta_avg, %<30, with
/// the distance columns in units of 1e-3, 1e-2 and 1e-4. Missing values print as "-".
inline std::string format_metrics_table(const MetricsReport& r) {
    auto cell = [](std::optional<double> v, double scale, int precision) {
        char buf[32];
        if (!v) return std::string("-");
        std::snprintf(buf, sizeof buf, "%.*f", precision, *v / scale);
        return std::string(buf);
    };
    const std::array<std::string, 6> head{"D_c(e-3)", "D_h(e-2)", "p2f(e-4)", "G", "theta_avg", "%<30"};
    const std::optional<double> g = r.quality ? std::optional(r.quality->g_mean) : std::nullopt;
    const std::optional<double> th = r.quality ? std::optional(r.quality->theta_avg_degrees) : std::nullopt;
    const std::optional<double> pc = r.quality ? std::optional(r.quality->pct_below_30) : std::nullopt;
    const std::array<std::string, 6> row{cell(r.d_c, 1e-3, 4), cell(r.d_h, 1e-2, 4), cell(r.p2f, 1e-4, 4),
                                         cell(g, 1.0, 4),      cell(th, 1.0, 2),     cell(pc, 1.0, 2)};
    std::string out;
    for (const auto* line : {&head, &row}) {
        for (std::size_t i = 0; i < line->size(); ++i) {
            std::string s = (*line)[i];
            s.insert(0, s.size() < 12 ? 12 - s.size() : 0, ' ');
            out += s;
        }
        out += '\n';
    }
    return out;
}

} // namespace pcs

#endif
