#pragma once

// Brute-force reference renderer: every molecule instance the scene can show
// is instantiated explicitly in world space (through the same M1 / W chains
// as the renderer), and each ray scans the resulting spheres linearly. The
// coarse gating rules (prism containment, prism / box / instance clip
// rejection, core ray interval) are applied exactly as the renderer defines
// them, so the two must agree everywhere except at numerical silhouettes.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "mesoray/core_grid.hpp"
#include "mesoray/renderer.hpp"
#include "mesoray/scene.hpp"
#include "mesoray/transforms.hpp"

namespace mesoray::testing {

struct MaterializedInstance {
    Space space = Space::kShell;
    int meshInstanceId = 0;
    int primitiveIndex = 0;
    std::array<int, 3> cell{};
    int tileId = 0;
    int instanceIndex = 0;
    int moleculeTypeId = 0;
    Affine toWorld;             // mesh world transform . W
    Aabb worldBounds;           // of the molecule aabb under toWorld
    const Prism* prism = nullptr;  // shell: the gating prism (object space)
    Aabb boxObject;                // core: the box (object space)
    std::vector<Vec3> atomCenters;  // world space
    std::vector<real> atomRadii;
};

struct MaterializedScene {
    std::vector<MaterializedInstance> instances;
    long long atomCount = 0;
};

inline MaterializedScene materialize(const Scene& s, const RenderConfig& config) {
    MaterializedScene out;
    auto add_atoms = [&](MaterializedInstance& mi) {
        const MoleculeAsset& mol = s.molecules[mi.moleculeTypeId];
        const real scale = std::cbrt(std::abs(mi.toWorld.linear.determinant()));
        for (const Atom& a : mol.type.atoms) {
            mi.atomCenters.push_back(mi.toWorld.point(a.center));
            mi.atomRadii.push_back(a.radius * scale);
        }
        mi.worldBounds = transform_aabb(mi.toWorld, mol.type.aabb);
        out.atomCount += static_cast<long long>(mol.type.atoms.size());
    };
    auto clipped_points = [&](const auto& points) { return clip_reject(points, config.clipPlane); };

    for (std::size_t id = 0; id < s.instances.size(); ++id) {
        const MeshInstance& inst = s.instances[id];
        const MeshAsset& m = s.meshes[inst.meshId];
        if (m.shell && config.mode != RenderMode::kCore) {
            const ShellData& sh = m.shellData;
            for (std::size_t t = 0; t < sh.prisms.size(); ++t) {
                const Prism& prism = sh.prisms[t];
                if (!prism.hasContent || !sh.frameValid[t]) continue;
                std::array<Vec3, 6> pv;
                for (int i = 0; i < 6; ++i) pv[i] = inst.worldTransform.point(prism.vertices()[i]);
                if (clipped_points(pv)) continue;
                const TriangleTileFrame& frame = sh.frames[t];
                const ReplicationArea area = map_triangle(m.mesh.uvs(t), s.recipe2d, sh.window);
                for (const ReplicationEntry& e : area.entries) {
                    const int tileId = s.recipe2d.at(e.cellI, e.cellJ);
                    const Affine m1 = frame.tile_to_object(e.gUv);
                    const auto& tile = s.squareTiles[tileId];
                    for (std::size_t k = 0; k < tile.instances.size(); ++k) {
                        const MoleculeInstance& mi0 = tile.instances[k];
                        const std::array<int, 3> cell{e.cellI, e.cellJ, -1};
                        const Quat jitter = jitter_rotation(static_cast<int>(id), cell, static_cast<int>(k),
                                                            config.time, config.jitterAmplitude);
                        const Affine w = config.smoothNormals ? instance_transform_smooth(frame, m1, e.gUv, mi0, jitter)
                                                              : instance_transform(m1, mi0, jitter);
                        if (!point_in_prism(prism, w.translation)) continue;
                        MaterializedInstance mi;
                        mi.space = Space::kShell;
                        mi.meshInstanceId = static_cast<int>(id);
                        mi.primitiveIndex = static_cast<int>(t);
                        mi.cell = cell;
                        mi.tileId = tileId;
                        mi.instanceIndex = static_cast<int>(k);
                        mi.moleculeTypeId = mi0.moleculeTypeId;
                        mi.toWorld = inst.worldTransform * w;
                        mi.prism = &prism;
                        const auto corners = s.molecules[mi.moleculeTypeId].type.aabb.corners();
                        std::array<Vec3, 8> cw;
                        for (int c = 0; c < 8; ++c) cw[c] = mi.toWorld.point(corners[c]);
                        if (clipped_points(cw)) continue;
                        add_atoms(mi);
                        out.instances.push_back(std::move(mi));
                    }
                }
            }
        }
        if (m.core && config.mode != RenderMode::kShell) {
            const CoreGridMeta& g = m.coreData.grid;
            for (int k = 0; k < g.dims[2]; ++k)
                for (int j = 0; j < g.dims[1]; ++j)
                    for (int i = 0; i < g.dims[0]; ++i) {
                        const BoxCoord b{i, j, k};
                        const Aabb box = box_aabb(g, b);
                        std::array<Vec3, 8> bw;
                        for (int c = 0; c < 8; ++c) bw[c] = inst.worldTransform.point(box.corners()[c]);
                        if (clipped_points(bw)) continue;
                        const int tileId = s.recipe3d.at(i, j, k);
                        const Affine m1 = Affine::translate(box_center(g, b));
                        const auto& tile = s.cubeTiles[tileId];
                        for (std::size_t n = 0; n < tile.instances.size(); ++n) {
                            const MoleculeInstance& mi0 = tile.instances[n];
                            const std::array<int, 3> cell{i, j, k};
                            const Quat jitter = jitter_rotation(static_cast<int>(id), cell, static_cast<int>(n),
                                                                config.time, config.jitterAmplitude);
                            MaterializedInstance mi;
                            mi.space = Space::kCore;
                            mi.meshInstanceId = static_cast<int>(id);
                            mi.primitiveIndex = (k * g.dims[1] + j) * g.dims[0] + i;
                            mi.cell = cell;
                            mi.tileId = tileId;
                            mi.instanceIndex = static_cast<int>(n);
                            mi.moleculeTypeId = mi0.moleculeTypeId;
                            mi.toWorld = inst.worldTransform * instance_transform(m1, mi0, jitter);
                            mi.boxObject = box;
                            const auto corners = s.molecules[mi.moleculeTypeId].type.aabb.corners();
                            std::array<Vec3, 8> cw;
                            for (int c = 0; c < 8; ++c) cw[c] = mi.toWorld.point(corners[c]);
                            if (clipped_points(cw)) continue;
                            add_atoms(mi);
                            out.instances.push_back(std::move(mi));
                        }
                    }
        }
    }
    return out;
}

struct OracleHit {
    HitRecord hit;
    real runnerUpT = kInf;   // closest t of any *other* candidate sphere
    real grazeMargin = kInf;  // |distance to centre - radius| / radius of the winning sphere
};

/// Exact world-space ray/sphere: smallest root >= tMin.
inline std::optional<real> world_sphere_t(const Ray& r, const Vec3& c, real radius, real tMin, real tMax,
                                          real* margin = nullptr) {
    const real a = dot(r.direction, r.direction);
    const Vec3 oc = r.origin - c;
    const real tc = -dot(oc, r.direction) / a;
    const Vec3 foot = r.at(tc) - c;
    const real d2 = dot(foot, foot);
    const real r2 = radius * radius;
    if (margin) *margin = std::abs(std::sqrt(d2) - radius) / radius;
    if (d2 > r2) return std::nullopt;
    const real h = std::sqrt((r2 - d2) / a);
    for (real t : {tc - h, tc + h})
        if (t >= tMin && t <= tMax) return t;
    return std::nullopt;
}

/// Closest hit of a world ray against the materialized scene.
inline std::optional<OracleHit> oracle_trace(const Scene& s, const MaterializedScene& ms, const Ray& ray) {
    std::optional<OracleHit> best;
    std::vector<std::optional<Interval>> coreIntervals(s.instances.size());
    std::vector<bool> intervalDone(s.instances.size(), false);
    auto consider = [&](const MaterializedInstance& mi, int atom, real t, real lo, real hi, real margin) {
        if (t < lo || t > hi) return;
        HitRecord h;
        h.t = t;
        h.space = mi.space;
        h.meshInstanceId = mi.meshInstanceId;
        h.primitiveIndex = mi.primitiveIndex;
        h.cell = mi.cell;
        h.tileId = mi.tileId;
        h.instanceIndex = mi.instanceIndex;
        h.moleculeTypeId = mi.moleculeTypeId;
        h.atomIndex = atom;
        h.worldPoint = ray.at(t);
        if (!best) {
            best = OracleHit{h, kInf, margin};
        } else if (closer(h, best->hit)) {
            best->runnerUpT = best->hit.t;
            best->hit = h;
            best->grazeMargin = margin;
        } else {
            best->runnerUpT = std::min(best->runnerUpT, t);
        }
    };
    for (const MaterializedInstance& mi : ms.instances) {
        const auto box = ray_aabb(ray, mi.worldBounds);
        if (!box || box->tExit < ray.tMin) continue;
        real lo = ray.tMin, hi = ray.tMax;
        const Ray objectRay = transform_ray(s.inverseTransforms[mi.meshInstanceId], ray);
        if (mi.space == Space::kShell) {
            const auto span = ray_prism_intersect(*mi.prism, objectRay);
            if (!span || span->tExit < ray.tMin) continue;
        } else {
            const std::size_t id = static_cast<std::size_t>(mi.meshInstanceId);
            if (!intervalDone[id]) {
                const MeshAsset& m = s.meshes[s.instances[id].meshId];
                coreIntervals[id] = ray_interval(s.instances[id], m.mesh, m.triangleBvh, ray, s.epsilon);
                intervalDone[id] = true;
            }
            if (!coreIntervals[id]) continue;
            const auto bs = ray_aabb(objectRay, mi.boxObject);
            if (!bs) continue;
            // The box must be pierced inside the interior interval.
            if (std::min(bs->tExit, coreIntervals[id]->tExit) < std::max(bs->tEnter, coreIntervals[id]->tEnter)) continue;
            lo = std::max(lo, coreIntervals[id]->tEnter);
            hi = std::min(hi, coreIntervals[id]->tExit);
        }
        for (std::size_t a = 0; a < mi.atomCenters.size(); ++a) {
            real margin = kInf;
            if (auto t = world_sphere_t(ray, mi.atomCenters[a], mi.atomRadii[a], lo, hi, &margin))
                consider(mi, static_cast<int>(a), *t, lo, hi, margin);
        }
    }
    return best;
}

/// Smallest graze margin of any sphere along the ray (for classifying
/// hit-vs-miss disagreements as silhouette pixels).
inline real min_graze_margin(const MaterializedScene& ms, const Ray& ray) {
    real best = kInf;
    for (const MaterializedInstance& mi : ms.instances) {
        const auto box = ray_aabb(ray, mi.worldBounds);
        if (!box || box->tExit < ray.tMin) continue;
        for (std::size_t a = 0; a < mi.atomCenters.size(); ++a) {
            real margin = kInf;
            world_sphere_t(ray, mi.atomCenters[a], mi.atomRadii[a], ray.tMin, ray.tMax, &margin);
            best = std::min(best, margin);
        }
    }
    return best;
}

struct OracleComparison {
    long long pixels = 0;
    long long identical = 0;
    long long mismatches = 0;
    long long silhouetteMismatches = 0;
    real worstRelativeDt = 0;  // over identical-identity pixels
    long long atoms = 0;
    long long instances = 0;

    real identical_fraction() const { return pixels ? static_cast<real>(identical) / pixels : 1; }
    bool mismatches_on_silhouettes() const { return mismatches == silhouetteMismatches; }
};

inline constexpr real kSilhouetteTolerance = 1e-3;

/// Renders per-pixel hits with the real renderer and compares them with the
/// oracle. `renderedHits` must come from render_frame with the same camera.
inline OracleComparison compare_with_oracle(const Scene& s, const Camera& camera, const RenderConfig& config,
                                            const std::vector<std::optional<HitRecord>>& renderedHits) {
    const MaterializedScene ms = materialize(s, config);
    OracleComparison c;
    c.atoms = ms.atomCount;
    c.instances = static_cast<long long>(ms.instances.size());
    const CameraBasis basis(camera);
    for (int y = 0; y < camera.height; ++y)
        for (int x = 0; x < camera.width; ++x) {
            const Ray ray = basis.primary(x, y);
            const auto& r = renderedHits[static_cast<std::size_t>(y) * camera.width + x];
            const auto o = oracle_trace(s, ms, ray);
            ++c.pixels;
            if (!r && !o) {
                ++c.identical;
                continue;
            }
            if (r && o && r->same_identity(o->hit)) {
                ++c.identical;
                c.worstRelativeDt = std::max(c.worstRelativeDt, std::abs(r->t - o->hit.t) / o->hit.t);
                continue;
            }
            ++c.mismatches;
            bool silhouette = false;
            if (r && o) {
                // Two candidates within tolerance of each other: either is a
                // legitimate closest hit up to rounding.
                silhouette = std::abs(r->t - o->hit.t) <= kSilhouetteTolerance * o->hit.t ||
                             std::abs(o->runnerUpT - o->hit.t) <= kSilhouetteTolerance * o->hit.t ||
                             o->grazeMargin <= kSilhouetteTolerance;
            } else {
                silhouette = min_graze_margin(ms, ray) <= kSilhouetteTolerance;
            }
            if (silhouette) ++c.silhouetteMismatches;
        }
    return c;
}

}  // namespace mesoray::testing
