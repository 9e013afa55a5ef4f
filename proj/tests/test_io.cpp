#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "support.hpp"

using namespace pcs;

namespace {

std::string error_code(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

PointCloud random_cloud(std::size_t n, Rng& rng, bool saliency) {
    auto pts = pcs_test::random_points(n, rng, -1e3, 1e3);
    pts[0] = {1e-300, -0.1, 3.0e-7};
    if (!saliency) return PointCloud(pts);
    std::vector<double> s(n);
    for (auto& v : s) v = rng.uniform() * 1e-2;
    return PointCloud(pts, s);
}

} // namespace

// ---------------------------------------------------------------- OBJ

TEST(Obj, MinimalTriangle) {
    const auto m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
    EXPECT_EQ(m.vertices.size(), 3u);
    ASSERT_EQ(m.triangles.size(), 1u);
    EXPECT_EQ(m.triangles[0], (Triangle{0, 1, 2}));
}

TEST(Obj, QuadFan) {
    const auto m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
    ASSERT_EQ(m.triangles.size(), 2u);
    EXPECT_EQ(m.triangles[0], (Triangle{0, 1, 2}));
    EXPECT_EQ(m.triangles[1], (Triangle{0, 2, 3}));
}

TEST(Obj, ZeroIndexIsMalformed) {
    EXPECT_EQ(error_code([] { parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n"); }), "malformed");
    try {
        parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\n\nf 0 1 2\n");
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
    }
}

TEST(Obj, SlashesNegativeIndicesAndDegenerates) {
    std::size_t dropped = 0;
    const auto m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1/1/1 2//2 3\nf -4 -3 -1\n", &dropped);
    EXPECT_EQ(m.triangles.size(), 1u); // second face is collinear
    EXPECT_EQ(dropped, 1u);
}

TEST(Obj, OutOfRangeIndex) {
    EXPECT_NE(error_code([] { parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n"); }), "");
}

// ---------------------------------------------------------------- XYZ

TEST(Xyz, Examples) {
    const auto a = parse_xyz("0 0 0\n1 1 1\n");
    EXPECT_EQ(a.size(), 2u);
    EXPECT_FALSE(a.has_saliency());
    const auto b = parse_xyz("0 0 0 0.5\n");
    ASSERT_TRUE(b.has_saliency());
    EXPECT_EQ((*b.saliency())[0], 0.5);
}

TEST(Xyz, RaggedColumnsNameTheLine) {
    try {
        parse_xyz("0 0 0\n1 1 1\n2 2 2 2\n");
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "ragged-columns");
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
        EXPECT_EQ(e.kind(), ErrorKind::data);
    }
}

// ---------------------------------------------------------------- round trips

TEST(RoundTrip, CloudsAreExact) {
    Rng rng(1);
    const auto dir = pcs_test::temp_dir("io_clouds");
    for (int trial = 0; trial < 20; ++trial) {
        const auto c = random_cloud(1 + rng.uniform_index(200), rng, trial % 2 == 0);
        write_cloud(c, dir / "c.xyz");
        EXPECT_EQ(read_cloud(dir / "c.xyz"), c);
        write_cloud(c, dir / "c.ply");
        EXPECT_EQ(read_cloud(dir / "c.ply"), c);
        write_cloud(c, dir / "b.ply", PlyEncoding::binary_little_endian);
        EXPECT_EQ(read_cloud(dir / "b.ply"), c);
    }
}

TEST(RoundTrip, MeshesAreExact) {
    Rng rng(2);
    const auto dir = pcs_test::temp_dir("io_meshes");
    for (int trial = 0; trial < 10; ++trial) {
        TriangleMesh m;
        m.vertices = pcs_test::random_points(10 + rng.uniform_index(30), rng, -5, 5);
        for (std::size_t t = 0; t < 40; ++t) {
            Triangle tri;
            for (auto& v : tri) v = static_cast<std::uint32_t>(rng.uniform_index(m.vertices.size()));
            const auto [a, b, c] = std::array{m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]};
            if (!is_degenerate_triangle(a, b, c)) m.triangles.push_back(tri);
        }
        for (const auto* name : {"m.obj", "m.ply"}) {
            write_mesh(m, dir / name);
            EXPECT_EQ(read_mesh(dir / name), m) << name;
        }
        write_mesh(m, dir / "b.ply", PlyEncoding::binary_little_endian);
        EXPECT_EQ(read_mesh(dir / "b.ply"), m);
    }
}

TEST(Ply, FloatVerticesAndUnsupportedProperty) {
    std::string f = "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                    "property float z\nend_header\n";
    for (const float v : {0.5f, -2.0f, 0.25f}) io_detail::store_le(f, v);
    const auto c = parse_ply_cloud(f);
    EXPECT_EQ(c[0], (Point3{0.5, -2.0, 0.25}));
    const std::string bad = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\n"
                            "property float z\nproperty uchar red\nend_header\n0 0 0 1\n";
    EXPECT_EQ(error_code([&] { parse_ply_cloud(bad); }), "unsupported-property");
}

TEST(Files, MissingAndUnknownExtension) {
    EXPECT_NE(error_code([] { read_cloud("/nonexistent/file.xyz"); }), "");
    EXPECT_EQ(error_code([] { read_cloud("x.stl"); }), "unsupported-format");
}

// ---------------------------------------------------------------- sampling

TEST(SampleMesh, SingleTriangleOnSurface) {
    TriangleMesh m{{{0, 0, 0}, {2, 0.5, 0.1}, {0.3, 1.7, -0.4}}, {{0, 1, 2}}};
    Rng rng(3);
    const auto c = sample_mesh_surface(m, 2000, rng);
    for (const auto& p : c.points())
        EXPECT_LT(pcs_test::brute_triangle_distance(p, m.vertices[0], m.vertices[1], m.vertices[2]), 1e-12);
    Rng one(4);
    EXPECT_EQ(sample_mesh_surface(m, 1, one).size(), 1u);
}

TEST(SampleMesh, AreaProportional) {
    // areas 9 : 1 (right triangles with legs 3,6 and 1,2)
    TriangleMesh m{{{0, 0, 0}, {3, 0, 0}, {0, 6, 0}, {10, 0, 0}, {11, 0, 0}, {10, 2, 0}}, {{0, 1, 2}, {3, 4, 5}}};
    Rng rng(5);
    const auto c = sample_mesh_surface(m, 10000, rng);
    std::size_t big = 0;
    for (const auto& p : c.points()) big += p.x < 5;
    EXPECT_NEAR(double(big), 9000.0, 300.0);
}

TEST(SampleMesh, DegenerateMesh) {
    TriangleMesh m{{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}}, {{0, 1, 2}}};
    Rng rng(6);
    EXPECT_EQ(error_code([&] { sample_mesh_surface(m, 10, rng); }), "degenerate-mesh");
}

// ---------------------------------------------------------------- fuzz

namespace {

std::string mutate(std::string s, Rng& rng) {
    const std::size_t kind = rng.uniform_index(5);
    if (s.empty()) return s;
    switch (kind) {
    case 0: s.resize(rng.uniform_index(s.size())); break;
    case 1:
        for (int i = 0; i < 4; ++i) s[rng.uniform_index(s.size())] = static_cast<char>(rng.uniform_index(256));
        break;
    case 2: {
        static const char* tokens[] = {"-1", "0", "nan", "inf", "1e999", "99999999999999999999", "f", "v", "\n",
                                       "element vertex 5\n", "property list uchar int vertex_indices\n", "end_header\n"};
        s.insert(rng.uniform_index(s.size()), tokens[rng.uniform_index(std::size(tokens))]);
        break;
    }
    case 3: s.erase(rng.uniform_index(s.size()), 1 + rng.uniform_index(16)); break;
    default: {
        const std::size_t a = rng.uniform_index(s.size());
        s.insert(a, s.substr(rng.uniform_index(s.size()), 1 + rng.uniform_index(32)));
    }
    }
    return s;
}

} // namespace

TEST(Fuzz, MalformedFilesOnlyRaiseErrors) {
    Rng rng(7);
    TriangleMesh m = pcs_test::cube_mesh();
    PointCloud c(m.vertices, std::vector<double>(m.vertices.size(), 0.25));
    const std::vector<std::pair<std::string, int>> seeds{
        {format_obj(m), 0},
        {format_ply(PointCloud(m.vertices), PlyEncoding::ascii, &m.triangles), 1},
        {format_ply(PointCloud(m.vertices), PlyEncoding::binary_little_endian, &m.triangles), 1},
        {format_xyz(c), 2},
        {format_ply(c, PlyEncoding::binary_little_endian), 3},
    };
    std::size_t errors = 0, parsed = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto& [text, kind] = seeds[static_cast<std::size_t>(i) % seeds.size()];
        std::string bad = text;
        const std::size_t rounds = 1 + rng.uniform_index(3);
        for (std::size_t r = 0; r < rounds; ++r) bad = mutate(bad, rng);
        try {
            switch (kind) {
            case 0: validate_mesh(parse_obj(bad)); break;
            case 1: validate_mesh(parse_ply_mesh(bad)); break;
            case 2: parse_xyz(bad); break;
            default: parse_ply_cloud(bad); break;
            }
            ++parsed;
        } catch (const Error&) {
            ++errors;
        } catch (const std::exception& e) {
            ADD_FAILURE() << "case " << i << " escaped with a non-library exception: " << e.what();
        }
    }
    EXPECT_EQ(errors + parsed, 1000u);
    EXPECT_GT(errors, 300u);
}
