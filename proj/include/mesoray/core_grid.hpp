#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "mesoray/bvh.hpp"
#include "mesoray/math.hpp"
#include "mesoray/shell.hpp"
#include "mesoray/wang.hpp"

namespace mesoray {

struct BoxCoord {
    int i = 0, j = 0, k = 0;
    bool operator==(const BoxCoord&) const = default;
    auto operator<=>(const BoxCoord&) const = default;
};

/// Uniform grid over a mesh's object-space bounds. No per-box storage: every
/// box position follows from these three fields.
struct CoreGridMeta {
    Aabb aabb;
    std::array<int, 3> dims{1, 1, 1};
    Vec3 boxSize{1, 1, 1};

    /// The region actually covered by the boxes (may overhang `aabb.max`).
    Aabb grid_bounds() const {
        return {aabb.min, aabb.min + hadamard(Vec3{real(dims[0]), real(dims[1]), real(dims[2])}, boxSize)};
    }
    long long box_count() const { return static_cast<long long>(dims[0]) * dims[1] * dims[2]; }
    bool contains(const BoxCoord& b) const {
        return b.i >= 0 && b.j >= 0 && b.k >= 0 && b.i < dims[0] && b.j < dims[1] && b.k < dims[2];
    }
};

inline CoreGridMeta make_core_grid(const Aabb& meshBounds, real boxSize) {
    CoreGridMeta g;
    g.aabb = meshBounds;
    g.boxSize = {boxSize, boxSize, boxSize};
    const Vec3 e = meshBounds.extent();
    for (int a = 0; a < 3; ++a) g.dims[a] = std::max(1, ceil_tolerant(e[a] / boxSize));
    return g;
}

/// b = floor((p - grid.min) / boxSize), clamped into the grid. Points on an
/// interior boundary belong to the higher-index box.
inline BoxCoord point_to_box(const CoreGridMeta& g, const Vec3& p) {
    std::array<int, 3> b{};
    for (int a = 0; a < 3; ++a) {
        const real f = std::floor((p[a] - g.aabb.min[a]) / g.boxSize[a]);
        b[a] = static_cast<int>(std::clamp(f, 0.0, static_cast<real>(g.dims[a] - 1)));
    }
    return {b[0], b[1], b[2]};
}

/// b.min = b * boxSize + grid.min.
inline Vec3 box_min(const CoreGridMeta& g, const BoxCoord& b) {
    return hadamard(Vec3{real(b.i), real(b.j), real(b.k)}, g.boxSize) + g.aabb.min;
}

inline Vec3 box_center(const CoreGridMeta& g, const BoxCoord& b) { return box_min(g, b) + g.boxSize * 0.5; }

inline Aabb box_aabb(const CoreGridMeta& g, const BoxCoord& b) {
    const Vec3 lo = box_min(g, b);
    return {lo, lo + g.boxSize};
}

/// Closest front-facing and back-facing proxy triangles along an object-space
/// ray; `triangleBvh` indexes `mesh.triangles`.
struct FacingHits {
    std::optional<real> front, back;
};

inline FacingHits closest_facing_hits(const ProxyMesh& mesh, const Bvh& triangleBvh, const Ray& localRay) {
    FacingHits out;
    for (bool wantFront : {true, false}) {
        auto hit = bvh_traverse(triangleBvh, localRay, [&](std::uint32_t t, const Ray& r) -> std::optional<real> {
            const auto p = mesh.positions(t);
            const auto h = ray_triangle(r, p[0], p[1], p[2]);
            if (!h || h->frontFacing != wantFront) return std::nullopt;
            return h->t;
        });
        if (hit) (wantFront ? out.front : out.back) = hit->t;
    }
    return out;
}

/// Interior segment of `worldRay` inside the mesh instance: [t_front, t_back]
/// when the viewpoint is outside, [epsilon, t_back] when it is inside, nothing
/// when no back face is hit.
inline std::optional<Interval> ray_interval(const MeshInstance& instance, const ProxyMesh& mesh,
                                            const Bvh& triangleBvh, const Ray& worldRay, real epsilon) {
    Ray local = transform_ray(affine_invert(instance.worldTransform), worldRay);
    local.tMax = kInf;
    const FacingHits h = closest_facing_hits(mesh, triangleBvh, local);
    if (!h.back) return std::nullopt;
    const real tk = *h.back;
    if (h.front && *h.front < tk) return Interval{*h.front, tk};
    if (h.front && *h.front == tk) return std::nullopt;
    if (epsilon >= tk) return std::nullopt;
    return Interval{epsilon, tk};
}

/// Walks the boxes pierced by `localRay` over `interval` in increasing t
/// (3D DDA). `visit(box, tEnter, tExit)` returns false to stop early. Axis
/// ties step x before y before z.
template <class Visit>
void grid_walk(const CoreGridMeta& g, const Ray& localRay, Interval interval, Visit&& visit) {
    const Aabb region = g.grid_bounds();
    const auto hit = ray_aabb(localRay, region);
    if (!hit) return;
    const real t0 = std::max(interval.tEnter, hit->tEnter);
    const real t1 = std::min(interval.tExit, hit->tExit);
    if (t0 > t1) return;

    const Vec3 p = localRay.at(t0);
    const BoxCoord start = point_to_box(g, p);
    std::array<int, 3> cell{start.i, start.j, start.k};
    std::array<int, 3> step{};
    std::array<real, 3> tNext{}, tDelta{};
    for (int a = 0; a < 3; ++a) {
        const real d = localRay.direction[a];
        if (d > 0) {
            step[a] = 1;
            tNext[a] = (g.aabb.min[a] + (cell[a] + 1) * g.boxSize[a] - localRay.origin[a]) / d;
            tDelta[a] = g.boxSize[a] / d;
        } else if (d < 0) {
            step[a] = -1;
            tNext[a] = (g.aabb.min[a] + cell[a] * g.boxSize[a] - localRay.origin[a]) / d;
            tDelta[a] = -g.boxSize[a] / d;
        } else {
            step[a] = 0;
            tNext[a] = kInf;
            tDelta[a] = kInf;
        }
    }
    real tEnter = t0;
    while (true) {
        int axis = 0;
        if (tNext[1] < tNext[axis]) axis = 1;
        if (tNext[2] < tNext[axis]) axis = 2;
        const real tExit = std::min(tNext[axis], t1);
        if (!visit(BoxCoord{cell[0], cell[1], cell[2]}, tEnter, tExit)) return;
        if (tNext[axis] > t1) return;
        cell[axis] += step[axis];
        if (cell[axis] < 0 || cell[axis] >= g.dims[axis]) return;
        tEnter = std::max(tEnter, tNext[axis]);
        tNext[axis] += tDelta[axis];
    }
}

inline std::vector<BoxCoord> grid_traverse(const CoreGridMeta& g, const Ray& localRay, Interval interval) {
    std::vector<BoxCoord> out;
    grid_walk(g, localRay, interval, [&](const BoxCoord& b, real, real) {
        out.push_back(b);
        return true;
    });
    return out;
}

}  // namespace mesoray
