#include <gtest/gtest.h>

#include <random>

#include "mesoray/bvh.hpp"

using namespace mesoray;

namespace {

std::vector<Aabb> random_boxes(int n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<real> pos(-50, 50), size(0.1, 3);
    std::vector<Aabb> boxes;
    for (int i = 0; i < n; ++i) {
        const Vec3 c{pos(rng), pos(rng), pos(rng)};
        const Vec3 h{size(rng), size(rng), size(rng)};
        boxes.push_back({c - h, c + h});
    }
    return boxes;
}

}  // namespace

TEST(Bvh, EmptyInput) {
    const Bvh b = build_bvh(std::vector<Aabb>{});
    EXPECT_TRUE(b.empty());
    EXPECT_FALSE(bvh_check(b, std::vector<Aabb>{}));
    EXPECT_FALSE(bvh_traverse(b, Ray{{0, 0, 0}, {1, 0, 0}}, [](std::uint32_t, const Ray&) {
        return std::optional<real>(1.0);
    }));
}

TEST(Bvh, StructureCheckPasses) {
    const auto boxes = random_boxes(1000, 3);
    const Bvh b = build_bvh(boxes);
    EXPECT_FALSE(bvh_check(b, boxes));
}

TEST(Bvh, DetectsInvertedBoundsCorruption) {
    const auto boxes = random_boxes(64, 4);
    Bvh b = build_bvh(boxes);
    ASSERT_GT(b.nodes.size(), 1u);
    std::swap(b.nodes[1].bounds.min, b.nodes[1].bounds.max);
    const auto issue = bvh_check(b, boxes);
    ASSERT_TRUE(issue);
    EXPECT_NE(issue->find("inverted"), std::string::npos);
}

TEST(Bvh, TraverseMatchesLinearScan) {
    const auto boxes = random_boxes(500, 5);
    const Bvh b = build_bvh(boxes);
    std::mt19937 rng(6);
    std::uniform_real_distribution<real> u(-1, 1);
    int hits = 0;
    for (int k = 0; k < 500; ++k) {
        const Ray ray{{u(rng) * 60, u(rng) * 60, -80}, normalize(Vec3{u(rng) * 0.5, u(rng) * 0.5, 1})};
        auto hit = [&](std::uint32_t id, const Ray& r) -> std::optional<real> {
            const auto iv = ray_aabb(r, boxes[id]);
            if (!iv || iv->tEnter < r.tMin || iv->tEnter > r.tMax) return std::nullopt;
            return iv->tEnter;
        };
        std::optional<BvhHit> expect;
        for (std::uint32_t id = 0; id < boxes.size(); ++id) {
            const auto t = hit(id, ray);
            if (t && (!expect || *t < expect->t)) expect = BvhHit{id, *t};
        }
        const auto got = bvh_traverse(b, ray, hit);
        ASSERT_EQ(got.has_value(), expect.has_value());
        if (got) {
            ++hits;
            EXPECT_EQ(got->primitive, expect->primitive);
            EXPECT_EQ(got->t, expect->t);
        }
    }
    EXPECT_GT(hits, 50);
}

TEST(Bvh, EqualDistanceResolvesToSmallerId) {
    const std::vector<Aabb> boxes(8, Aabb{{-1, -1, -1}, {1, 1, 1}});
    const Bvh b = build_bvh(boxes);
    const auto got = bvh_traverse(b, Ray{{0, 0, -5}, {0, 0, 1}}, [](std::uint32_t, const Ray&) {
        return std::optional<real>(4.0);
    });
    ASSERT_TRUE(got);
    EXPECT_EQ(got->primitive, 0u);
}

TEST(RepGrid, CellLayoutAndCoverage) {
    const RepGrid g = build_rep_grid(3, 2, 2.0, 0.5);
    ASSERT_EQ(g.cellAabbs.size(), 6u);
    EXPECT_EQ(g.cell_center(0, 0), (Vec3{-2, 0, -1}));
    EXPECT_EQ(g.cell_center(2, 1), (Vec3{2, 0, 1}));
    EXPECT_EQ(g.cellAabbs[0], (Aabb{{-3, -0.5, -2}, {-1, 0.5, 0}}));
    EXPECT_FALSE(bvh_check(g.bvh, g.cellAabbs));
    EXPECT_THROW(build_rep_grid(0, 1, 1, 1), Error);
}

TEST(RepGrid, ContentBoundsGrowCells) {
    const RepGrid g = build_rep_grid(1, 1, 2.0, 0.5, Aabb{{-1.5, 0, -1}, {1, 3, 1}});
    EXPECT_EQ(g.cellAabbs[0], (Aabb{{-1.5, -0.5, -1}, {1, 3, 1}}));
}
