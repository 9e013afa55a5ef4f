#ifndef PCS_TESTS_SUPPORT_HPP
#define PCS_TESTS_SUPPORT_HPP

// Shared fixtures and brute-force oracles for the test suites.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "pcs/pcs.hpp"

namespace pcs_test {

using pcs::Point3;

inline std::vector<Point3> random_points(std::size_t n, pcs::Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::vector<Point3> pts(n);
    for (auto& p : pts) p = {lo + (hi - lo) * rng.uniform(), lo + (hi - lo) * rng.uniform(), lo + (hi - lo) * rng.uniform()};
    return pts;
}

/// Uniform on the unit sphere (normalized Gaussian vectors).
inline std::vector<Point3> sphere_points(std::size_t n, pcs::Rng& rng) {
    std::vector<Point3> pts;
    pts.reserve(n);
    while (pts.size() < n) {
        const Point3 g{rng.normal(), rng.normal(), rng.normal()};
        const double r = pcs::norm(g);
        if (r > 1e-12) pts.push_back(g / r);
    }
    return pts;
}

/// Rotation by Euler angles (z, y, x) applied as R*p + t.
struct Rigid {
    double m[3][3];
    Point3 t;

    static Rigid random(pcs::Rng& rng) {
        const double a = 2 * std::numbers::pi * rng.uniform(), b = 2 * std::numbers::pi * rng.uniform(),
                     c = 2 * std::numbers::pi * rng.uniform();
        const double ca = std::cos(a), sa = std::sin(a), cb = std::cos(b), sb = std::sin(b), cc = std::cos(c), sc = std::sin(c);
        Rigid r;
        const double z[3][3] = {{ca, -sa, 0}, {sa, ca, 0}, {0, 0, 1}};
        const double y[3][3] = {{cb, 0, sb}, {0, 1, 0}, {-sb, 0, cb}};
        const double x[3][3] = {{1, 0, 0}, {0, cc, -sc}, {0, sc, cc}};
        double zy[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                zy[i][j] = 0;
                for (int k = 0; k < 3; ++k) zy[i][j] += z[i][k] * y[k][j];
            }
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                r.m[i][j] = 0;
                for (int k = 0; k < 3; ++k) r.m[i][j] += zy[i][k] * x[k][j];
            }
        r.t = {4 * rng.uniform() - 2, 4 * rng.uniform() - 2, 4 * rng.uniform() - 2};
        return r;
    }

    Point3 operator()(const Point3& p) const {
        return Point3{m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z, m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
                      m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z} +
               t;
    }

    std::vector<Point3> operator()(std::vector<Point3> pts) const {
        for (auto& p : pts) p = (*this)(p);
        return pts;
    }
};

// ---------------------------------------------------------------- oracles

inline double sq(double x) { return x * x; }

inline double d2(const Point3& a, const Point3& b) { return sq(a.x - b.x) + sq(a.y - b.y) + sq(a.z - b.z); }

/// Plain double loop: min over `to` for each of `from`.
inline std::vector<double> brute_nearest_sq(const std::vector<Point3>& from, const std::vector<Point3>& to) {
    std::vector<double> out;
    for (const auto& p : from) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : to) best = std::min(best, d2(p, q));
        out.push_back(best);
    }
    return out;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

/// Distance from p to the segment ab.
inline double segment_distance(const Point3& p, const Point3& a, const Point3& b) {
    const Point3 ab = b - a;
    double u = pcs::dot(p - a, ab) / pcs::dot(ab, ab);
    u = std::clamp(u, 0.0, 1.0);
    return std::sqrt(d2(p, a + ab * u));
}

/// Point-triangle distance from the plane projection when it falls inside,
/// otherwise the nearest edge. Independent of the library's region walk.
inline double brute_triangle_distance(const Point3& p, const Point3& a, const Point3& b, const Point3& c) {
    const Point3 n = pcs::cross(b - a, c - a);
    const double nn = pcs::dot(n, n);
    const Point3 proj = p - n * (pcs::dot(p - a, n) / nn);
    auto side = [&](const Point3& u, const Point3& v) { return pcs::dot(pcs::cross(v - u, proj - u), n); };
    if (side(a, b) >= 0 && side(b, c) >= 0 && side(c, a) >= 0) return std::abs(pcs::dot(p - a, n)) / std::sqrt(nn);
    return std::min({segment_distance(p, a, b), segment_distance(p, b, c), segment_distance(p, c, a)});
}

inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("pcs_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

/// Axis-aligned cube [-1,1]^3 as 12 triangles.
inline pcs::TriangleMesh cube_mesh() {
    pcs::TriangleMesh m;
    for (int i = 0; i < 8; ++i) m.vertices.push_back({i & 1 ? 1.0 : -1.0, i & 2 ? 1.0 : -1.0, i & 4 ? 1.0 : -1.0});
    const std::uint32_t q[6][4] = {{0, 1, 3, 2}, {4, 6, 7, 5}, {0, 4, 5, 1}, {2, 3, 7, 6}, {0, 2, 6, 4}, {1, 5, 7, 3}};
    for (const auto& f : q) {
        m.triangles.push_back({f[0], f[1], f[2]});
        m.triangles.push_back({f[0], f[2], f[3]});
    }
    return m;
}

} // namespace pcs_test

#endif
