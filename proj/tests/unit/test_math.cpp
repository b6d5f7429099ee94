#include <gtest/gtest.h>

#include "mesoray/math.hpp"

using namespace mesoray;

TEST(RayAabb, HitsUnitCubeFromOutside) {
    const Ray r{{-5, 0.5, 0.5}, {1, 0, 0}};
    const auto iv = ray_aabb(r, Aabb{{0, 0, 0}, {1, 1, 1}});
    ASSERT_TRUE(iv);
    EXPECT_DOUBLE_EQ(iv->tEnter, 5);
    EXPECT_DOUBLE_EQ(iv->tExit, 6);
}

TEST(RayAabb, ParallelRayOutsideSlabMisses) {
    const Ray r{{-5, 2, 0.5}, {1, 0, 0}};
    EXPECT_FALSE(ray_aabb(r, Aabb{{0, 0, 0}, {1, 1, 1}}));
}

TEST(RayAabb, OriginInsideGivesNegativeEnter) {
    const Ray r{{0.5, 0.5, 0.5}, {0, 0, 1}};
    const auto iv = ray_aabb(r, Aabb{{0, 0, 0}, {1, 1, 1}});
    ASSERT_TRUE(iv);
    EXPECT_DOUBLE_EQ(iv->tEnter, -0.5);
    EXPECT_DOUBLE_EQ(iv->tExit, 0.5);
}

TEST(RaySphere, HeadOnHit) {
    const Ray r{{0, 0, -10}, {0, 0, 1}};
    const auto t = ray_sphere(r, {0, 0, 0}, 1);
    ASSERT_TRUE(t);
    EXPECT_DOUBLE_EQ(*t, 9);
}

TEST(RaySphere, OriginInsideReturnsExit) {
    const Ray r{{0, 0, 0}, {0, 0, 1}};
    const auto t = ray_sphere(r, {0, 0, 0}, 2);
    ASSERT_TRUE(t);
    EXPECT_DOUBLE_EQ(*t, 2);
}

TEST(RaySphere, MissAndBehind) {
    EXPECT_FALSE(ray_sphere(Ray{{0, 3, -10}, {0, 0, 1}}, {0, 0, 0}, 1));
    EXPECT_FALSE(ray_sphere(Ray{{0, 0, 10}, {0, 0, 1}}, {0, 0, 0}, 1));
}

TEST(RaySphere, UnnormalizedDirectionKeepsParameter) {
    const Ray r{{0, 0, -10}, {0, 0, 2}};
    const auto t = ray_sphere(r, {0, 0, 0}, 1);
    ASSERT_TRUE(t);
    EXPECT_DOUBLE_EQ(*t, 4.5);
}

TEST(RayTriangle, HitWithBarycentrics) {
    const Ray r{{0.25, 0.25, 1}, {0, 0, -1}};
    const auto h = ray_triangle(r, {0, 0, 0}, {1, 0, 0}, {0, 1, 0});
    ASSERT_TRUE(h);
    EXPECT_DOUBLE_EQ(h->t, 1);
    EXPECT_DOUBLE_EQ(h->b1, 0.25);
    EXPECT_DOUBLE_EQ(h->b2, 0.25);
    EXPECT_TRUE(h->frontFacing);
}

TEST(RayTriangle, BackFacingAndMiss) {
    const auto back = ray_triangle(Ray{{0.25, 0.25, -1}, {0, 0, 1}}, {0, 0, 0}, {1, 0, 0}, {0, 1, 0});
    ASSERT_TRUE(back);
    EXPECT_FALSE(back->frontFacing);
    EXPECT_FALSE(ray_triangle(Ray{{1, 1, 1}, {0, 0, -1}}, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}));
    EXPECT_FALSE(ray_triangle(Ray{{0.2, 0.2, 1}, {1, 0, 0}}, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}));
}

TEST(RayTriangle, SharedEdgeReportedByBothNeighbours) {
    const Ray r{{0.5, 0.5, 1}, {0, 0, -1}};
    EXPECT_TRUE(ray_triangle(r, {0, 0, 0}, {1, 0, 0}, {0, 1, 0}));
    EXPECT_TRUE(ray_triangle(r, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}));
}

TEST(Barycentric, WeightsReproducePoint) {
    const auto w = barycentric_weights({0.2, 0.3}, {0, 0}, {1, 0}, {0, 1});
    EXPECT_NEAR(w[0], 0.5, 1e-15);
    EXPECT_NEAR(w[1], 0.2, 1e-15);
    EXPECT_NEAR(w[2], 0.3, 1e-15);
    const Vec3 p = barycentric_interp(w, {0, 0, 0}, {10, 0, 0}, {0, 10, 0});
    EXPECT_NEAR(p.x, 2, 1e-12);
    EXPECT_NEAR(p.y, 3, 1e-12);
}

TEST(Barycentric, OutsideAndDegenerate) {
    const auto w = barycentric_weights({2, 2}, {0, 0}, {1, 0}, {0, 1});
    EXPECT_LT(w[0], 0);
    EXPECT_THROW(barycentric_weights({0, 0}, {0, 0}, {1, 1}, {2, 2}), DegenerateError);
}

TEST(Affine, ComposeAppliesRightFirst) {
    const Affine t = Affine::translate({1, 0, 0});
    const Affine s = Affine::scale({2, 2, 2});
    const Vec3 p = (t * s).point({1, 1, 1});
    EXPECT_EQ(p, (Vec3{3, 2, 2}));
    const Vec3 q = (s * t).point({1, 1, 1});
    EXPECT_EQ(q, (Vec3{4, 2, 2}));
}

TEST(Affine, InverseRoundTrips) {
    const Affine a = Affine::translate({1, 2, 3}) * Affine::rotate(Quat::axis_angle({1, 1, 0}, 0.7)) *
                     Affine::scale({2, 0.5, 3});
    const Affine id = a * affine_invert(a);
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) EXPECT_NEAR(id.linear(r, c), r == c ? 1 : 0, 1e-12);
    EXPECT_NEAR(length(id.translation), 0, 1e-12);
}

TEST(Affine, SingularThrows) {
    EXPECT_THROW(affine_invert(Affine::scale({1, 0, 1})), SingularMatrixError);
}

TEST(TransformRay, KeepsParameterAcrossSpaces) {
    const Affine a = Affine::translate({5, 0, 0}) * Affine::scale({3, 3, 3});
    const Ray world{{0, 0, -20}, {0, 0, 1}};
    const Ray local = transform_ray(affine_invert(a), world);
    const real t = 7;
    const Vec3 back = a.point(local.at(t));
    EXPECT_NEAR(length(back - world.at(t)), 0, 1e-12);
    EXPECT_NEAR(length(local.direction), 1.0 / 3, 1e-15);
}

TEST(RotationBetween, MapsFromOntoTo) {
    const Vec3 from = normalize(Vec3{1, 2, 3});
    const Vec3 to = normalize(Vec3{-2, 0.5, 1});
    EXPECT_NEAR(length(rotation_between(from, to) * from - to), 0, 1e-12);
    EXPECT_NEAR(length(rotation_between(from, -from) * from + from), 0, 1e-12);
}
