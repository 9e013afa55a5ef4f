#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

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

std::size_t brute_nearest_seed(const PointCloud& c, const std::vector<std::size_t>& seeds, std::size_t i) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < seeds.size(); ++s)
        if (pcs_test::d2(c[i], c[seeds[s]]) < pcs_test::d2(c[i], c[seeds[best]])) best = s;
    return best;
}

} // namespace

TEST(Partition, SinglePatch) {
    Rng rng(1);
    const PointCloud c(pcs_test::random_points(100, rng));
    const auto p = make_partition(c, 1, PatchMode::uniform, rng);
    for (const auto a : p.assignment) EXPECT_EQ(a, 0u);
}

TEST(Partition, TwoClusters) {
    Rng rng(2);
    auto pts = pcs_test::random_points(100, rng, -0.1, 0.1);
    for (std::size_t i = 50; i < 100; ++i) pts[i] += Point3{10, 0, 0};
    const PointCloud c(pts);
    const auto p = make_partition(c, 2, PatchMode::uniform, rng);
    for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(p.assignment[i], p.assignment[i < 50 ? 0 : 50]);
    EXPECT_NE(p.assignment[0], p.assignment[50]);
}

TEST(Partition, AdaptiveNeedsSaliency) {
    Rng rng(3);
    const PointCloud c(pcs_test::random_points(100, rng));
    EXPECT_EQ(error_code([&] { make_partition(c, 4, PatchMode::adaptive, rng); }), "missing-saliency");
}

TEST(Partition, AdaptiveCubeEdgePatchesAreSmaller) {
    auto mesh = pcs_test::cube_mesh();
    for (auto& v : mesh.vertices) v = (v + Point3{1, 1, 1}) * 0.5;
    Rng rng(4);
    const auto cloud = with_geometric_saliency(sample_mesh_surface(mesh, 8000, rng), 20, 0.05);
    const auto part = make_partition(cloud, 60, PatchMode::adaptive, rng);
    const auto cells = part.cells();
    double edge_sum = 0, face_sum = 0;
    std::size_t edge_n = 0, face_n = 0;
    for (std::size_t s = 0; s < cells.size(); ++s) {
        bool on_edge = false;
        double extent = 0;
        for (const auto i : cells[s]) {
            const auto& p = cloud[i];
            int near = 0;
            for (const double c : {p.x, p.y, p.z}) near += (c < 0.05 || c > 0.95);
            on_edge |= near >= 2;
            extent += distance(p, cloud[part.seeds[s]]);
        }
        extent /= double(cells[s].size());
        (on_edge ? edge_sum : face_sum) += extent;
        (on_edge ? edge_n : face_n) += 1;
    }
    ASSERT_GT(edge_n, 0u);
    ASSERT_GT(face_n, 0u);
    EXPECT_LT(edge_sum / double(edge_n), face_sum / double(face_n));
}

TEST(Partition, MatchesBruteForceProperty) {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 20 + rng.uniform_index(500);
        auto pts = pcs_test::random_points(n, rng);
        std::vector<double> sal(n);
        for (auto& s : sal) s = rng.uniform();
        const PointCloud c(pts, sal);
        const auto mode = trial % 2 ? PatchMode::adaptive : PatchMode::uniform;
        const auto part = make_partition(c, 1 + rng.uniform_index(std::min<std::size_t>(n, 30)), mode, rng);
        std::vector<std::size_t> counts(part.num_cells(), 0);
        ASSERT_EQ(part.assignment.size(), n);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_EQ(part.assignment[i], brute_nearest_seed(c, part.seeds, i));
            ++counts[part.assignment[i]];
        }
        for (const auto k : counts) EXPECT_GE(k, 1u);
    }
}

TEST(Partition, TiesGoToLowerSeed) {
    const PointCloud c({{0, 0, 0}, {2, 0, 0}, {1, 0, 0}});
    const auto p = partition_from_seeds(c, {1, 0}, PatchMode::uniform);
    EXPECT_EQ(p.assignment[2], 0u); // equidistant, seed id 0 is point 1
}

TEST(Partition, CoincidentSeedsDropEmptyCells) {
    const PointCloud c({{0, 0, 0}, {0, 0, 0}, {1, 0, 0}});
    const auto p = partition_from_seeds(c, {0, 1, 2}, PatchMode::uniform);
    EXPECT_EQ(p.num_cells(), 2u);
}

TEST(ExtendSeeds, AddsFarthestPoints) {
    std::vector<Point3> pts;
    for (int i = 0; i < 10; ++i) pts.push_back({double(i), 0, 0});
    const auto s = extend_seeds(pts, {0}, 3);
    EXPECT_EQ(s, (std::vector<std::size_t>{0, 9, 4}));
}

// ---------------------------------------------------------------- patch extraction

TEST(ExtractPatch, ExactCellIsPermutation) {
    Rng rng(6);
    const PointCloud c(pcs_test::random_points(64, rng));
    const auto part = make_partition(c, 1, PatchMode::uniform, rng);
    const auto p = extract_patch_input(c, part, 0, 64, rng);
    EXPECT_FALSE(p.with_replacement);
    std::set<std::size_t> idx(p.parent_indices.begin(), p.parent_indices.end());
    EXPECT_EQ(idx.size(), 64u);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ(p.input_points[i], c[p.parent_indices[i]]);
}

TEST(ExtractPatch, LargeCellWithoutReplacement) {
    Rng rng(7);
    std::vector<double> sal(128);
    for (auto& s : sal) s = rng.uniform();
    const PointCloud c(pcs_test::random_points(128, rng), sal);
    const auto part = make_partition(c, 1, PatchMode::uniform, rng);
    const auto p = extract_patch_input(c, part, 0, 64, rng);
    EXPECT_EQ(std::set<std::size_t>(p.parent_indices.begin(), p.parent_indices.end()).size(), 64u);
    ASSERT_TRUE(p.input_saliency);
    for (std::size_t i = 0; i < 64; ++i) EXPECT_EQ((*p.input_saliency)[i], sal[p.parent_indices[i]]);
}

TEST(ExtractPatch, SmallCellCoverage) {
    const std::size_t n = 64, cell = 32;
    Rng rng(8);
    const PointCloud c(pcs_test::random_points(cell, rng));
    const auto part = make_partition(c, 1, PatchMode::uniform, rng);
    const double expected = 1 - std::pow(1 - 1.0 / double(cell), double(n));
    double covered = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        const auto p = extract_patch_input(c, part, 0, n, rng);
        EXPECT_TRUE(p.with_replacement);
        EXPECT_EQ(p.size(), n);
        covered += double(std::set<std::size_t>(p.parent_indices.begin(), p.parent_indices.end()).size()) / double(cell);
    }
    // 3-sigma band on the mean of `trials` coverage fractions (each in [0,1])
    EXPECT_GE(covered / trials, expected - 3 * 0.5 / std::sqrt(double(trials) * cell));
}

// ---------------------------------------------------------------- merge

TEST(Merge, ExactTargetIsIdentity) {
    Rng rng(9);
    const PointCloud a(pcs_test::random_points(40, rng));
    const std::vector<PointCloud> outs{a};
    EXPECT_EQ(merge_outputs(outs, 40, rng), a);
}

TEST(Merge, ArithmeticOfPatchCounts) {
    Rng rng(10);
    std::vector<PointCloud> outs;
    for (int i = 0; i < 120; ++i) outs.emplace_back(pcs_test::random_points(125, rng));
    const auto merged = merge_outputs(outs, 15000, rng);
    EXPECT_EQ(merged.size(), 15000u);
    EXPECT_EQ(merged[125], outs[1][0]); // plain concatenation
}

TEST(Merge, TrimIsSubset) {
    Rng rng(11);
    std::vector<PointCloud> outs;
    std::vector<Point3> all;
    for (int i = 0; i < 3; ++i) {
        outs.emplace_back(pcs_test::random_points(10, rng));
        all.insert(all.end(), outs.back().points().begin(), outs.back().points().end());
    }
    const auto merged = merge_outputs(outs, 25, rng);
    EXPECT_EQ(merged.size(), 25u);
    std::set<std::size_t> used;
    for (const auto& p : merged.points()) {
        const auto it = std::find(all.begin(), all.end(), p);
        ASSERT_NE(it, all.end());
        used.insert(std::size_t(it - all.begin()));
    }
    EXPECT_EQ(used.size(), 25u);
}

TEST(Merge, SizeInvariantProperty) {
    Rng rng(12);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PointCloud> outs;
        std::size_t total = 0;
        for (std::size_t i = 0, k = 1 + rng.uniform_index(6); i < k; ++i) {
            outs.emplace_back(pcs_test::random_points(1 + rng.uniform_index(20), rng));
            total += outs.back().size();
        }
        const std::size_t target = 1 + rng.uniform_index(2 * total);
        EXPECT_EQ(merge_outputs(outs, target, rng).size(), std::min(total, target));
    }
}
