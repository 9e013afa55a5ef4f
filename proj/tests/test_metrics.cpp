#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace pcs;
using pcs_test::brute_nearest_sq;

namespace {

std::string error_code(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

double brute_chamfer(const std::vector<Point3>& p, const std::vector<Point3>& q) {
    return pcs_test::mean_of(brute_nearest_sq(p, q)) + pcs_test::mean_of(brute_nearest_sq(q, p));
}

double brute_hausdorff(const std::vector<Point3>& p, const std::vector<Point3>& q) {
    return std::max(pcs_test::max_of(brute_nearest_sq(p, q)), pcs_test::max_of(brute_nearest_sq(q, p)));
}

/// Linear scan over triangles with the library's own point-triangle distance,
/// summed in point order: equals the indexed result bit for bit.
double scan_p2f(const std::vector<Point3>& pts, const TriangleMesh& m) {
    double s = 0;
    for (const auto& p : pts) {
        double best = INFINITY;
        for (const auto& t : m.triangles)
            best = std::min(best, point_triangle_squared_distance(p, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]));
        s += std::sqrt(best);
    }
    return s / double(pts.size());
}

/// Independent geometry: projection inside test, else nearest edge.
double oracle_p2f(const std::vector<Point3>& pts, const TriangleMesh& m) {
    double s = 0;
    for (const auto& p : pts) {
        double best = INFINITY;
        for (const auto& t : m.triangles)
            best = std::min(best, pcs_test::brute_triangle_distance(p, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]));
        s += best;
    }
    return s / double(pts.size());
}

TriangleMesh random_mesh(std::size_t triangles, Rng& rng) {
    TriangleMesh m;
    while (m.triangles.size() < triangles) {
        const auto base = static_cast<std::uint32_t>(m.vertices.size());
        const Point3 c{rng.uniform() * 2 - 1, rng.uniform() * 2 - 1, rng.uniform() * 2 - 1};
        for (int k = 0; k < 3; ++k)
            m.vertices.push_back(c + Point3{rng.uniform() - 0.5, rng.uniform() - 0.5, rng.uniform() - 0.5} * 0.6);
        if (!is_degenerate_triangle(m.vertices[base], m.vertices[base + 1], m.vertices[base + 2]))
            m.triangles.push_back({base, base + 1, base + 2});
        else
            m.vertices.resize(base);
    }
    return m;
}

} // namespace

// ---------------------------------------------------------------- chamfer / hausdorff

TEST(Chamfer, HandExamples) {
    Rng rng(1);
    const auto p = pcs_test::random_points(50, rng);
    EXPECT_EQ(chamfer(p, p), 0.0);
    EXPECT_EQ(hausdorff(p, p), 0.0);
    EXPECT_EQ(chamfer(std::vector<Point3>{{0, 0, 0}}, std::vector<Point3>{{1, 0, 0}}), 2.0);
    EXPECT_EQ(hausdorff(std::vector<Point3>{{0, 0, 0}, {3, 0, 0}}, std::vector<Point3>{{0, 0, 0}}), 9.0);
    EXPECT_EQ(error_code([&] { chamfer(p, std::vector<Point3>{}); }), "empty-cloud");
}

TEST(Chamfer, EqualsBruteForceProperty) {
    Rng rng(2);
    for (int trial = 0; trial < 40; ++trial) {
        const auto p = pcs_test::random_points(1 + rng.uniform_index(500), rng);
        const auto q = pcs_test::random_points(1 + rng.uniform_index(500), rng);
        const std::size_t threads = 1 + rng.uniform_index(4);
        EXPECT_EQ(chamfer(p, q, threads), brute_chamfer(p, q));
        EXPECT_EQ(hausdorff(p, q, threads), brute_hausdorff(p, q));
        if (p.size() == q.size()) {
            EXPECT_EQ(chamfer(p, q), chamfer(q, p));
        }
    }
}

TEST(Chamfer, RigidInvarianceAndScalingProperty) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto p = pcs_test::random_points(200, rng);
        auto q = pcs_test::random_points(150, rng);
        const double c = chamfer(p, q), h = hausdorff(p, q);
        const auto rigid = pcs_test::Rigid::random(rng);
        EXPECT_NEAR(chamfer(rigid(p), rigid(q)), c, 1e-9);
        EXPECT_NEAR(hausdorff(rigid(p), rigid(q)), h, 1e-9);
        const double lambda = 0.2 + 3 * rng.uniform();
        for (auto& x : p) x *= lambda;
        for (auto& x : q) x *= lambda;
        EXPECT_NEAR(chamfer(p, q), lambda * lambda * c, 1e-12 * std::max(1.0, lambda * lambda * c));
        EXPECT_NEAR(hausdorff(p, q), lambda * lambda * h, 1e-12 * std::max(1.0, lambda * lambda * h));
    }
}

// ---------------------------------------------------------------- point to face

TEST(PointToFace, HandExamples) {
    const TriangleMesh tri{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}}};
    EXPECT_EQ(point_to_face(std::vector<Point3>{{0.2, 0.2, 1}}, tri), 1.0);
    EXPECT_EQ(point_to_face(std::vector<Point3>{{2, 0, 0}}, tri), 1.0);
    EXPECT_EQ(point_to_face(std::vector<Point3>{{0.25, 0.25, 0}}, tri), 0.0);
    EXPECT_EQ(error_code([&] { point_to_face(std::vector<Point3>{}, tri); }), "empty-cloud");
    EXPECT_NE(error_code([] { point_to_face(std::vector<Point3>{{0, 0, 0}}, TriangleMesh{}); }), "");
}

TEST(PointToFace, SurfaceSamplesAreOnTheMesh) {
    Rng rng(4);
    auto mesh = pcs_test::cube_mesh();
    const auto rigid = pcs_test::Rigid::random(rng);
    mesh.vertices = rigid(mesh.vertices);
    const auto samples = sample_mesh_surface(mesh, 5000, rng);
    EXPECT_LT(point_to_face(samples.points(), mesh), 1e-12);
}

TEST(PointToFace, IndexEqualsScanProperty) {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mesh = random_mesh(1 + rng.uniform_index(200), rng);
        const auto pts = pcs_test::random_points(1 + rng.uniform_index(500), rng, -1.5, 1.5);
        const double indexed = point_to_face(pts, mesh, 1 + rng.uniform_index(4));
        EXPECT_EQ(indexed, scan_p2f(pts, mesh));
        EXPECT_NEAR(indexed, oracle_p2f(pts, mesh), 1e-12);
    }
}

TEST(PointToFace, NeverExceedsNearestVertexProperty) {
    Rng rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        const auto mesh = random_mesh(50, rng);
        const auto pts = pcs_test::random_points(100, rng, -1.5, 1.5);
        double vertex = 0;
        for (const double d : brute_nearest_sq(pts, mesh.vertices)) vertex += std::sqrt(d);
        EXPECT_LE(point_to_face(pts, mesh), vertex / double(pts.size()) + 1e-15);
    }
}

// ---------------------------------------------------------------- triangle quality

TEST(TriangleQuality, Equilateral) {
    const double s = std::sqrt(3.0) / 2;
    const auto t = triangle_shape({0, 0, 0}, {1, 0, 0}, {0.5, s, 0});
    EXPECT_NEAR(t.g, 1.0, 1e-12);
    EXPECT_NEAR(t.min_angle_degrees, 60.0, 1e-9);
    const TriangleMesh m{{{0, 0, 0}, {1, 0, 0}, {0.5, s, 0}}, {{0, 1, 2}}};
    EXPECT_EQ(triangle_quality(m).pct_below_30, 0.0);
}

TEST(TriangleQuality, RightIsosceles) {
    const auto t = triangle_shape({0, 0, 0}, {1, 0, 0}, {0, 1, 0});
    // S = 1/2, p = (2 + sqrt2)/2, h = sqrt2
    EXPECT_NEAR(t.g, std::sqrt(3.0) / (1 + std::sqrt(2.0)), 1e-9);
    EXPECT_NEAR(t.min_angle_degrees, 45.0, 1e-9);
}

TEST(TriangleQuality, SliverIsCounted) {
    // angles 10 at A, 20 at B, 150 at C; sides by the law of sines
    const double rad = std::numbers::pi / 180;
    const Point3 a{0, 0, 0}, b{std::sin(150 * rad), 0, 0};
    const Point3 c = Point3{std::cos(10 * rad), std::sin(10 * rad), 0} * std::sin(20 * rad);
    const auto t = triangle_shape(a, b, c);
    EXPECT_NEAR(t.min_angle_degrees, 10.0, 1e-9);
    const double s = std::sqrt(3.0) / 2;
    const TriangleMesh m{{a, b, c, {5, 0, 0}, {6, 0, 0}, {5.5, s, 0}}, {{0, 1, 2}, {3, 4, 5}}};
    const auto q = triangle_quality(m);
    EXPECT_EQ(q.pct_below_30, 50.0);
    EXPECT_NEAR(q.theta_avg_degrees, 35.0, 1e-9);
    EXPECT_NEAR(q.g_mean, (t.g + 1.0) / 2, 1e-12);
}

TEST(TriangleQuality, DegenerateRejected) {
    EXPECT_EQ(error_code([] { triangle_shape({0, 0, 0}, {1, 0, 0}, {2, 0, 0}); }), "degenerate-triangle");
}

TEST(TriangleQuality, RangeAndEquilateralOnlyProperty) {
    Rng rng(7);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto p = pcs_test::random_points(3, rng);
        if (is_degenerate_triangle(p[0], p[1], p[2])) continue;
        const auto t = triangle_shape(p[0], p[1], p[2]);
        EXPECT_GT(t.g, 0.0);
        EXPECT_LE(t.g, 1.0 + 1e-12);
        EXPECT_GT(t.min_angle_degrees, 0.0);
        EXPECT_LE(t.min_angle_degrees, 60.0 + 1e-9);
        // G = 1 only for equilateral: a random triangle is never within 1e-9 of it
        EXPECT_LT(t.g, 1.0 - 1e-9);
        const auto rigid = pcs_test::Rigid::random(rng);
        EXPECT_NEAR(triangle_shape(rigid(p[0]), rigid(p[1]), rigid(p[2])).g, t.g, 1e-9);
    }
}

// ---------------------------------------------------------------- report

TEST(MetricsReport, JsonAndTable) {
    MetricsReport r;
    r.d_c = 1.5e-3;
    r.d_h = 2e-2;
    auto j = to_json(r);
    EXPECT_EQ(j["d_c"], 1.5e-3);
    EXPECT_FALSE(j.contains("p2f"));
    EXPECT_FALSE(j.contains("g_mean"));
    const auto table = format_metrics_table(r);
    EXPECT_NE(table.find("D_c(e-3)"), std::string::npos);
    EXPECT_NE(table.find("1.5000"), std::string::npos);
    EXPECT_NE(table.find("-"), std::string::npos);
    r.p2f = 3e-4;
    r.quality = TriangleQuality{0.8, 40.0, 12.5};
    j = to_json(r);
    EXPECT_EQ(j["p2f"], 3e-4);
    EXPECT_EQ(j["pct_below_30"], 12.5);
    EXPECT_NE(format_metrics_table(r).find("12.50"), std::string::npos);
}
