#ifndef PCS_KNN_HPP
#define PCS_KNN_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/geom.hpp"

namespace pcs {

struct Neighbor {
    std::size_t index = 0;
    double squared_distance = 0.0;

    double distance() const { return std::sqrt(squared_distance); }

    // Order by distance, ties broken by lower index.
    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.squared_distance < b.squared_distance ||
               (a.squared_distance == b.squared_distance && a.index < b.index);
    }
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Exact k-nearest-neighbor index (kd-tree) over a snapshot of points.
/// Results are sorted by (distance, index) and match a brute-force scan exactly.
/// Immutable after construction; concurrent queries are safe.
class KnnIndex {
public:
    KnnIndex() = default;

    explicit KnnIndex(std::span<const Point3> points) : points_(points.begin(), points.end()) {
        order_.resize(points_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<std::uint32_t>(i);
        if (!points_.empty()) build(0, points_.size());
    }

    explicit KnnIndex(const PointCloud& cloud) : KnnIndex(std::span<const Point3>(cloud.points())) {}

    std::size_t size() const noexcept { return points_.size(); }
    const std::vector<Point3>& points() const noexcept { return points_; }

    std::vector<Neighbor> knn(const Point3& query, std::size_t k) const {
        if (k == 0) fail(ErrorKind::usage, "k-zero", "k must be at least 1");
        if (k > points_.size())
            fail(ErrorKind::usage, "k-too-large",
                 "k=" + std::to_string(k) + " exceeds indexed size " + std::to_string(points_.size()));
        Heap heap;
        heap.reserve(k);
        search(0, query, k, heap);
        std::sort(heap.begin(), heap.end());
        return heap;
    }

    Neighbor nearest(const Point3& query) const { return knn(query, 1).front(); }

private:
    using Heap = std::vector<Neighbor>; // max-heap under Neighbor::operator<

    struct Node {
        std::size_t begin = 0, end = 0;
        std::size_t left = 0, right = 0; // 0 means leaf (root is never a child)
        Point3 lo, hi;
    };

    static constexpr std::size_t kLeafSize = 12;

    std::size_t build(std::size_t begin, std::size_t end) {
        Node node;
        node.begin = begin;
        node.end = end;
        node.lo = node.hi = points_[order_[begin]];
        for (std::size_t i = begin; i < end; ++i) {
            const Point3& p = points_[order_[i]];
            node.lo = {std::min(node.lo.x, p.x), std::min(node.lo.y, p.y), std::min(node.lo.z, p.z)};
            node.hi = {std::max(node.hi.x, p.x), std::max(node.hi.y, p.y), std::max(node.hi.z, p.z)};
        }
        const std::size_t id = nodes_.size();
        nodes_.push_back(node);
        if (end - begin <= kLeafSize) return id;

        const Point3 extent = node.hi - node.lo;
        std::size_t axis = 0;
        if (extent.y > extent[axis]) axis = 1;
        if (extent.z > extent[axis]) axis = 2;
        if (!(extent[axis] > 0.0)) return id; // all coincident, keep as one leaf

        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                         order_.begin() + static_cast<std::ptrdiff_t>(mid),
                         order_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::uint32_t a, std::uint32_t b) {
                             const double pa = points_[a][axis], pb = points_[b][axis];
                             return pa < pb || (pa == pb && a < b);
                         });
        const std::size_t left = build(begin, mid);
        const std::size_t right = build(mid, end);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    static double box_squared_distance(const Node& node, const Point3& q) {
        double d2 = 0.0;
        for (std::size_t a = 0; a < 3; ++a) {
            double d = 0.0;
            if (q[a] < node.lo[a]) d = node.lo[a] - q[a];
            else if (q[a] > node.hi[a]) d = q[a] - node.hi[a];
            d2 += d * d;
        }
        return d2;
    }

    void search(std::size_t id, const Point3& q, std::size_t k, Heap& heap) const {
        const Node& node = nodes_[id];
        // Equal box distance is still visited: a lower index may win the tie.
        if (heap.size() == k && box_squared_distance(node, q) > heap.front().squared_distance) return;
        if (node.left == 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                const Neighbor cand{idx, squared_distance(points_[idx], q)};
                if (heap.size() < k) {
                    heap.push_back(cand);
                    std::push_heap(heap.begin(), heap.end());
                } else if (cand < heap.front()) {
                    std::pop_heap(heap.begin(), heap.end());
                    heap.back() = cand;
                    std::push_heap(heap.begin(), heap.end());
                }
            }
            return;
        }
        const double dl = box_squared_distance(nodes_[node.left], q);
        const double dr = box_squared_distance(nodes_[node.right], q);
        if (dl <= dr) {
            search(node.left, q, k, heap);
            search(node.right, q, k, heap);
        } else {
            search(node.right, q, k, heap);
            search(node.left, q, k, heap);
        }
    }

    std::vector<Point3> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

/// Linear-scan reference with the same ordering contract as KnnIndex::knn.
inline std::vector<Neighbor> brute_force_knn(std::span<const Point3> points, const Point3& query, std::size_t k) {
    if (k > points.size()) fail(ErrorKind::usage, "k-too-large", "k exceeds point count");
    std::vector<Neighbor> all;
    all.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) all.push_back({i, squared_distance(points[i], query)});
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end());
    all.resize(k);
    return all;
}

} // namespace pcs

#endif
