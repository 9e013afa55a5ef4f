#ifndef PCS_MESH_HPP
#define PCS_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pcs/error.hpp"
#include "pcs/geom.hpp"

namespace pcs {

using Triangle = std::array<std::uint32_t, 3>;

struct TriangleMesh {
    std::vector<Point3> vertices;
    std::vector<Triangle> triangles;

    std::array<Point3, 3> corners(std::size_t t) const {
        const Triangle& tri = triangles[t];
        return {vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]};
    }

    friend bool operator==(const TriangleMesh&, const TriangleMesh&) = default;
};

inline double triangle_area(const Point3& a, const Point3& b, const Point3& c) {
    return 0.5 * norm(cross(b - a, c - a));
}

inline double longest_edge(const Point3& a, const Point3& b, const Point3& c) {
    return std::sqrt(std::max({squared_distance(a, b), squared_distance(b, c), squared_distance(c, a)}));
}

/// Zero area relative to the squared longest edge (covers repeated vertices and
/// collinear corners up to rounding).
inline bool is_degenerate_triangle(const Point3& a, const Point3& b, const Point3& c) {
    const double h = longest_edge(a, b, c);
    return !(h > 0.0) || !(triangle_area(a, b, c) > 1e-12 * h * h);
}

/// Throws unless every index is in range and there is at least one triangle.
inline void validate_mesh(const TriangleMesh& mesh) {
    if (mesh.vertices.empty() || mesh.triangles.empty())
        fail(ErrorKind::data, "empty-mesh", "mesh needs at least one vertex and one triangle");
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
        for (const auto v : mesh.triangles[t])
            if (v >= mesh.vertices.size())
                fail(ErrorKind::data, "index-out-of-range", "triangle " + std::to_string(t) + " references vertex " +
                                                                 std::to_string(v));
}

/// Closest point on triangle abc to p (Ericson, Real-Time Collision Detection 5.1.5).
inline Point3 closest_point_on_triangle(const Point3& p, const Point3& a, const Point3& b, const Point3& c) {
    const Point3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Point3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

    const Point3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));

    const double denom = 1.0 / (va + vb + vc);
    return a + ab * (vb * denom) + ac * (vc * denom);
}

inline double point_triangle_squared_distance(const Point3& p, const Point3& a, const Point3& b, const Point3& c) {
    return squared_distance(p, closest_point_on_triangle(p, a, b, c));
}

} // namespace pcs

#endif
