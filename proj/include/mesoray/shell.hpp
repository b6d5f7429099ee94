#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mesoray/math.hpp"
#include "mesoray/molecule.hpp"
#include "mesoray/wang.hpp"

namespace mesoray {

struct MeshVertex {
    Vec3 position;
    Vec3 normal{0, 1, 0};
    Vec2 uv;
};

/// Low-poly proxy geometry. Triangles wind counter-clockwise seen from the
/// front.
struct ProxyMesh {
    std::vector<MeshVertex> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;

    std::array<Vec3, 3> positions(std::size_t tri) const {
        const auto& t = triangles[tri];
        return {vertices[t[0]].position, vertices[t[1]].position, vertices[t[2]].position};
    }
    std::array<Vec3, 3> normals(std::size_t tri) const {
        const auto& t = triangles[tri];
        return {vertices[t[0]].normal, vertices[t[1]].normal, vertices[t[2]].normal};
    }
    std::array<Vec2, 3> uvs(std::size_t tri) const {
        const auto& t = triangles[tri];
        return {vertices[t[0]].uv, vertices[t[1]].uv, vertices[t[2]].uv};
    }
    Aabb bounds() const {
        Aabb b;
        for (const auto& v : vertices) b.expand(v.position);
        return b;
    }
    std::size_t bytes() const {
        return vertices.capacity() * sizeof(MeshVertex) + triangles.capacity() * sizeof(triangles[0]);
    }
};

struct MeshInstance {
    int meshId = 0;
    Affine worldTransform;
};

struct Plane {
    Vec3 normal;  // unit, pointing out of the solid
    real offset = 0;
    real signed_distance(const Vec3& p) const { return dot(normal, p) - offset; }
};

/// Extruded shell cell over one proxy triangle, in mesh object space.
struct Prism {
    std::uint32_t triangleIndex = 0;
    std::array<Vec3, 3> top;     // positive offset
    std::array<Vec3, 3> bottom;  // negative offset
    real hPlus = 0, hMinus = 0, sideOffset = 0;
    bool hasContent = false;
    Aabb bounds;
    std::array<Plane, 8> planes{};  // 2 caps + 3 side quads split in two
    int planeCount = 0;
    // Side quads are generally non-planar (the vertex normals differ); each
    // is split along whichever diagonal keeps the solid convex.
    std::array<bool, 3> alternateSplit{};

    std::array<Vec3, 6> vertices() const { return {top[0], top[1], top[2], bottom[0], bottom[1], bottom[2]}; }
};

/// The boundary as 8 triangles: top cap, bottom cap, two per side quad.
inline std::array<std::array<Vec3, 3>, 8> prism_faces(const Prism& p) {
    std::array<std::array<Vec3, 3>, 8> f;
    f[0] = {p.top[0], p.top[1], p.top[2]};
    f[1] = {p.bottom[0], p.bottom[2], p.bottom[1]};
    for (int e = 0; e < 3; ++e) {
        const int i = e, j = (e + 1) % 3;
        if (p.alternateSplit[e]) {
            f[2 + 2 * e] = {p.bottom[i], p.bottom[j], p.top[i]};
            f[3 + 2 * e] = {p.bottom[j], p.top[j], p.top[i]};
        } else {
            f[2 + 2 * e] = {p.bottom[i], p.bottom[j], p.top[j]};
            f[3 + 2 * e] = {p.bottom[i], p.top[j], p.top[i]};
        }
    }
    return f;
}

/// Computes bounds and the outward face planes. Faces of zero area (a
/// zero-height side) contribute no plane.
inline void finalize_prism(Prism& p) {
    p.bounds = Aabb{};
    Vec3 centroid;
    for (const Vec3& v : p.vertices()) {
        p.bounds.expand(v);
        centroid += v;
    }
    centroid = centroid / 6.0;
    for (int e = 0; e < 3; ++e) {
        // The default split is convex when top[i] is not outside the plane
        // through bottom[i], bottom[j], top[j].
        const int i = e, j = (e + 1) % 3;
        const Vec3 n = cross(p.bottom[j] - p.bottom[i], p.top[j] - p.bottom[i]);
        real side = dot(n, p.top[i] - p.bottom[i]);
        if (dot(n, centroid - p.bottom[i]) > 0) side = -side;
        p.alternateSplit[e] = side > 0;
    }
    p.planeCount = 0;
    for (const auto& f : prism_faces(p)) {
        const Vec3 n = cross(f[1] - f[0], f[2] - f[0]);
        const real len = length(n);
        if (len < 1e-12) continue;
        Plane pl{n / len, 0};
        pl.offset = dot(pl.normal, f[0]);
        if (pl.signed_distance(centroid) > 0) pl = {-pl.normal, -pl.offset};
        p.planes[p.planeCount++] = pl;
    }
}

/// Builds one prism from a base triangle. Base vertices move sideOffset away
/// from the centroid, then extrude +hPlus / -hMinus along the vertex normals.
inline Prism make_prism(const std::array<Vec3, 3>& base, const std::array<Vec3, 3>& normals, real hPlus,
                        real hMinus, real sideOffset) {
    Prism p;
    p.hPlus = hPlus;
    p.hMinus = hMinus;
    p.sideOffset = sideOffset;
    const Vec3 c = (base[0] + base[1] + base[2]) / 3.0;
    for (int i = 0; i < 3; ++i) {
        const Vec3 out = base[i] - c;
        const real len = length(out);
        const Vec3 b = len > 0 ? base[i] + out * (sideOffset / len) : base[i];
        p.top[i] = b + normals[i] * hPlus;
        p.bottom[i] = b - normals[i] * hMinus;
    }
    finalize_prism(p);
    return p;
}

/// Replication window size for a mesh, sized by the largest triangle uv
/// extent along each axis.
inline WindowDims replication_area_dims(const ProxyMesh& mesh, real tileUvSize) {
    Vec2 ext;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto uv = mesh.uvs(t);
        ext.u = std::max(ext.u, std::max({uv[0].u, uv[1].u, uv[2].u}) - std::min({uv[0].u, uv[1].u, uv[2].u}));
        ext.v = std::max(ext.v, std::max({uv[0].v, uv[1].v, uv[2].v}) - std::min({uv[0].v, uv[1].v, uv[2].v}));
    }
    return window_dims_for_extent(ext, tileUvSize);
}

/// One prism per triangle. Heights are the largest protrusion above/below the
/// tile plane over all instances mapped to the triangle's replication area;
/// the side offset is half the widest such molecule.
inline std::vector<Prism> build_adaptive_prisms(const ProxyMesh& mesh, const TilingRecipe2D& recipe,
                                                const std::vector<WangSquareTile>& tiles,
                                                const std::vector<MoleculeType>& molecules, WindowDims window) {
    std::vector<Prism> prisms;
    prisms.reserve(mesh.triangles.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const ReplicationArea area = map_triangle(mesh.uvs(t), recipe, window);
        real hPlus = 0, hMinus = 0, width = 0;
        bool any = false;
        for (const ReplicationEntry& e : area.entries) {
            for (const MoleculeInstance& inst : tiles[recipe.at(e.cellI, e.cellJ)].instances) {
                const MoleculeType& m = molecules.at(inst.moleculeTypeId);
                hPlus = std::max(hPlus, inst.localPosition.y + m.aabb.max.y);
                hMinus = std::max(hMinus, -(inst.localPosition.y + m.aabb.min.y));
                width = std::max(width, m.width);
                any = true;
            }
        }
        Prism p = make_prism(mesh.positions(t), mesh.normals(t), hPlus, hMinus, width / 2);
        p.triangleIndex = static_cast<std::uint32_t>(t);
        p.hasContent = any;
        prisms.push_back(p);
    }
    return prisms;
}

/// Entry/exit along the whole line through `ray` against the triangulated
/// boundary; the caller clips to the ray's interval.
inline std::optional<Interval> ray_prism_intersect(const Prism& prism, const Ray& ray) {
    Ray line = ray;
    line.tMin = -kInf;
    line.tMax = kInf;
    real lo = kInf, hi = -kInf;
    for (const auto& f : prism_faces(prism)) {
        if (auto h = ray_triangle(line, f[0], f[1], f[2])) {
            lo = std::min(lo, h->t);
            hi = std::max(hi, h->t);
        }
    }
    if (lo > hi) return std::nullopt;
    return Interval{lo, hi};
}

inline bool point_in_prism(const Prism& prism, const Vec3& p) {
    const real eps = 1e-9 * std::max(1.0, prism.bounds.diagonal());
    for (int i = 0; i < prism.planeCount; ++i)
        if (prism.planes[i].signed_distance(p) > eps) return false;
    return prism.planeCount > 0;
}

/// Reports a degenerate or non-convex prism: every vertex must lie on the
/// inner side of every boundary face and the solid must have volume.
inline std::optional<std::string> prism_check(const Prism& prism) {
    const auto v = prism.vertices();
    const real scale = std::max(1e-12, prism.bounds.diagonal());
    const Vec3 e1 = prism.bottom[1] - prism.bottom[0], e2 = prism.bottom[2] - prism.bottom[0];
    if (length(cross(e1, e2)) < 1e-12 * scale * scale) return "degenerate base triangle";
    if (prism.planeCount < 5) return "prism has fewer than five faces";
    for (int i = 0; i < prism.planeCount; ++i)
        for (const Vec3& p : v)
            if (prism.planes[i].signed_distance(p) > 1e-6 * scale) return "prism is not convex";
    return std::nullopt;
}

}  // namespace mesoray
