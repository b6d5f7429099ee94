#include <gtest/gtest.h>

#include <random>

#include "mesoray/shell.hpp"

using namespace mesoray;

namespace {

const std::array<Vec3, 3> kBase{Vec3{0, 0, 0}, Vec3{3, 0, 0}, Vec3{0, 0, -3}};
const std::array<Vec3, 3> kUp{Vec3{0, 1, 0}, Vec3{0, 1, 0}, Vec3{0, 1, 0}};

/// Entry/exit of a ray against the prism's half-spaces.
std::optional<Interval> clip_against_planes(const Prism& p, const Ray& r) {
    real lo = -kInf, hi = kInf;
    for (int i = 0; i < p.planeCount; ++i) {
        const real denom = dot(p.planes[i].normal, r.direction);
        const real num = p.planes[i].offset - dot(p.planes[i].normal, r.origin);
        if (denom == 0) {
            if (num < 0) return std::nullopt;
            continue;
        }
        const real t = num / denom;
        if (denom < 0) lo = std::max(lo, t);
        else hi = std::min(hi, t);
    }
    if (lo > hi) return std::nullopt;
    return Interval{lo, hi};
}

}  // namespace

TEST(Prism, ExtrusionHeights) {
    const Prism p = make_prism(kBase, kUp, 2, 1, 0);
    for (int i = 0; i < 3; ++i) {
        EXPECT_EQ(p.top[i], (kBase[i] + Vec3{0, 2, 0}));
        EXPECT_EQ(p.bottom[i], (kBase[i] - Vec3{0, 1, 0}));
    }
    EXPECT_EQ(p.planeCount, 8);
    EXPECT_FALSE(prism_check(p));
}

TEST(Prism, SideOffsetMovesVerticesAwayFromCentroid) {
    const Prism p = make_prism(kBase, kUp, 1, 1, 0.5);
    const Vec3 c{1, 0, -1};
    for (int i = 0; i < 3; ++i) {
        const Vec3 base = p.top[i] - Vec3{0, 1, 0};
        EXPECT_NEAR(length(base - c), length(kBase[i] - c) + 0.5, 1e-12);
    }
}

TEST(Prism, AdaptiveHeightsFromTileContent) {
    ProxyMesh mesh;
    mesh.vertices = {{kBase[0], {0, 1, 0}, {0, 0}}, {kBase[1], {0, 1, 0}, {1, 0}}, {kBase[2], {0, 1, 0}, {0, 1}}};
    mesh.triangles = {{0, 1, 2}};
    MoleculeType m;
    m.atoms = {{{0, 0, 0}, 1, "C"}, {{2, 1, 0}, 1, "C"}};
    update_metrics(m);
    std::vector<WangSquareTile> tiles{{0, {0, 0, 0, 0}, {{0, {0, 0.5, 0}, {}}}}};
    const TilingRecipe2D recipe{1, 1, {0}, 1};
    const auto prisms = build_adaptive_prisms(mesh, recipe, tiles, {m}, {1, 1});
    ASSERT_EQ(prisms.size(), 1u);
    EXPECT_DOUBLE_EQ(prisms[0].hPlus, 2.5);
    EXPECT_DOUBLE_EQ(prisms[0].hMinus, 0.5);
    EXPECT_DOUBLE_EQ(prisms[0].sideOffset, 2);
    EXPECT_TRUE(prisms[0].hasContent);

    std::vector<WangSquareTile> empty{{0, {0, 0, 0, 0}, {}}};
    const auto none = build_adaptive_prisms(mesh, recipe, empty, {m}, {1, 1});
    EXPECT_FALSE(none[0].hasContent);
}

TEST(Prism, PointInPrism) {
    const Prism p = make_prism(kBase, kUp, 2, 1, 0);
    EXPECT_TRUE(point_in_prism(p, {1, 0.5, -1}));
    EXPECT_TRUE(point_in_prism(p, {1, 2, -1}));  // on the top cap
    EXPECT_FALSE(point_in_prism(p, {1, 2.5, -1}));
    EXPECT_FALSE(point_in_prism(p, {2.5, 0, -2.5}));
}

TEST(Prism, RayIntersectMatchesHalfSpaceClipping) {
    // Splayed normals give non-planar sides, exercising the diagonal choice.
    const std::array<Vec3, 3> normals{normalize(Vec3{-0.3, 1, 0.2}), normalize(Vec3{0.4, 1, 0.1}),
                                      normalize(Vec3{0.1, 1, -0.5})};
    const Prism p = make_prism(kBase, normals, 1.5, 0.7, 0.2);
    ASSERT_FALSE(prism_check(p));
    std::mt19937 rng(11);
    std::uniform_real_distribution<real> u(-1, 1);
    int hits = 0;
    for (int k = 0; k < 2000; ++k) {
        const Vec3 target{1 + 2 * u(rng), 0.4 + u(rng), -1 + 2 * u(rng)};
        const Vec3 origin = target + normalize(Vec3{u(rng), u(rng), u(rng)}) * 10;
        const Ray r{origin, target - origin};
        const auto a = ray_prism_intersect(p, r);
        const auto b = clip_against_planes(p, r);
        if (b && b->tExit - b->tEnter < 1e-6) continue;  // grazing an edge
        ASSERT_EQ(a.has_value(), b.has_value()) << "ray " << k;
        if (a) {
            ++hits;
            EXPECT_NEAR(a->tEnter, b->tEnter, 1e-9);
            EXPECT_NEAR(a->tExit, b->tExit, 1e-9);
        }
    }
    EXPECT_GT(hits, 300);
}

TEST(Prism, DegenerateBaseReported) {
    const std::array<Vec3, 3> line{Vec3{0, 0, 0}, Vec3{1, 0, 0}, Vec3{2, 0, 0}};
    const Prism p = make_prism(line, kUp, 1, 1, 0);
    EXPECT_TRUE(prism_check(p));
}
