#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <optional>
#include <thread>
#include <tuple>
#include <vector>

#include "mesoray/core_grid.hpp"
#include "mesoray/scene.hpp"
#include "mesoray/transforms.hpp"

namespace mesoray {

enum class Space : int { kShell = 0, kCore = 1 };

/// Closest-hit result with the full instance chain.
struct HitRecord {
    real t = kInf;
    Vec3 worldPoint;
    Vec3 worldNormal;
    int meshInstanceId = -1;
    int tileId = -1;
    int instanceIndex = -1;
    int moleculeTypeId = -1;
    int atomIndex = -1;
    Affine composed;  // M123: atom frame to world

    Space space = Space::kShell;
    int primitiveIndex = -1;                // triangle (shell) or linear box index (core)
    std::array<int, 3> cell{-1, -1, -1};    // recipe cell; k = -1 for the shell

    /// Identity used to break exact t ties so results never depend on
    /// traversal order.
    auto key() const {
        return std::tuple(static_cast<int>(space), meshInstanceId, primitiveIndex, cell[0], cell[1], cell[2],
                          instanceIndex, atomIndex);
    }
    bool same_identity(const HitRecord& o) const { return key() == o.key(); }
};

/// Strict order on candidate hits: smaller t first, then smaller key.
inline bool closer(const HitRecord& a, const HitRecord& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.key() < b.key();
}

namespace detail {

/// Per-ray traversal state shared by all levels. `best.t` is the working
/// tMax: it only ever shrinks.
struct TraceState {
    const Scene& scene;
    const RenderConfig& config;
    const Ray& worldRay;
    std::optional<HitRecord> best;
    real tMax;

    TraceState(const Scene& s, const RenderConfig& c, const Ray& r) : scene(s), config(c), worldRay(r), tMax(r.tMax) {}

    /// Offers a candidate; returns true when it became the closest hit.
    bool offer(HitRecord&& h) {
        if (h.t > tMax) return false;
        if (best && !closer(h, *best)) return false;
        best = std::move(h);
        tMax = best->t;
        return true;
    }
};

struct InstanceContext {
    const MeshInstance* mesh = nullptr;
    int meshInstanceId = 0;
    Space space = Space::kShell;
    int primitiveIndex = 0;
    std::array<int, 3> cell{};
    int tileId = 0;
    real tLo = 0, tHi = kInf;           // accepted hit range
    const Prism* gatePrism = nullptr;   // shell: instance origins must lie inside
};

inline bool instance_clipped(const Scene& s, const ClipPlane& clip, const Affine& objectToWorld, const Affine& w,
                             const MoleculeAsset& mol) {
    if (!clip.enabled) return false;
    const Affine toWorld = objectToWorld * w;
    std::array<Vec3, 8> pts;
    const auto corners = mol.type.aabb.corners();
    for (int i = 0; i < 8; ++i) pts[i] = toWorld.point(corners[i]);
    (void)s;
    return clip_reject(pts, clip);
}

/// Traverses one tile's instance hierarchy (mLAS) and the atoms of every
/// accepted instance (nLAS). `objectRay` lives in mesh object space; `m1` is
/// the object-space tile transform.
inline void trace_tile(TraceState& st, const InstanceContext& ctx, const TileAsset& tile, const Affine& m1,
                       const Affine& m1Inverse, const Ray& objectRay, const TriangleTileFrame* frame,
                       const Vec2& gUv) {
    if (tile.instances.empty()) return;
    Ray tileRay = transform_ray(m1Inverse, objectRay);
    tileRay.tMax = std::min(st.tMax, ctx.tHi);
    tileRay.tMin = std::max(objectRay.tMin, ctx.tLo);
    if (tileRay.tMin > tileRay.tMax) return;
    const Scene& s = st.scene;
    bvh_visit(tile.bvh, tileRay, [&](std::uint32_t idx, Ray& tr) {
        const MoleculeInstance& inst = tile.instances[idx];
        const MoleculeAsset& mol = s.molecules[inst.moleculeTypeId];
        const Quat jitter = jitter_rotation(ctx.meshInstanceId, ctx.cell, static_cast<int>(idx), st.config.time,
                                            st.config.jitterAmplitude);
        const Affine w = (frame && st.config.smoothNormals)
                             ? instance_transform_smooth(*frame, m1, gUv, inst, jitter)
                             : instance_transform(m1, inst, jitter);
        if (ctx.gatePrism && !point_in_prism(*ctx.gatePrism, w.translation)) return;
        if (instance_clipped(s, st.config.clipPlane, ctx.mesh->worldTransform, w, mol)) return;
        Ray molRay = transform_ray(affine_invert(w), objectRay);
        molRay.tMin = tr.tMin;
        molRay.tMax = std::min(st.tMax, ctx.tHi);
        const auto hit = intersect_atoms(mol.type, mol.bvh, molRay);
        if (hit) {
            HitRecord h;
            h.t = hit->t;
            h.meshInstanceId = ctx.meshInstanceId;
            h.tileId = ctx.tileId;
            h.instanceIndex = static_cast<int>(idx);
            h.moleculeTypeId = inst.moleculeTypeId;
            h.atomIndex = static_cast<int>(hit->primitive);
            h.space = ctx.space;
            h.primitiveIndex = ctx.primitiveIndex;
            h.cell = ctx.cell;
            const Vec3 c = mol.type.atoms[hit->primitive].center;
            h.composed = ctx.mesh->worldTransform * w * Affine::translate(c);
            const Vec3 localNormal = molRay.at(hit->t) - c;
            h.worldNormal = normalize(inverse(h.composed.linear).transposed() * localNormal);
            h.worldPoint = st.worldRay.at(hit->t);
            st.offer(std::move(h));
        }
        tr.tMax = std::min(tr.tMax, st.tMax);
    });
}

inline void trace_prism(TraceState& st, int meshInstanceId, const MeshInstance& mi, const MeshAsset& m,
                        std::uint32_t triangle, Ray& objectRay) {
    const Scene& s = st.scene;
    const ShellData& sh = m.shellData;
    const Prism& prism = sh.prisms[triangle];
    // The prism gates its content: the ray must cross it somewhere past tMin.
    const auto span = ray_prism_intersect(prism, objectRay);
    if (!span || span->tExit < objectRay.tMin) return;
    if (st.config.clipPlane.enabled) {
        std::array<Vec3, 6> pts;
        const auto v = prism.vertices();
        for (int i = 0; i < 6; ++i) pts[i] = mi.worldTransform.point(v[i]);
        if (clip_reject(pts, st.config.clipPlane)) return;
    }
    const TriangleTileFrame& frame = sh.frames[triangle];
    const ReplicationArea area = map_triangle(m.mesh.uvs(triangle), s.recipe2d, sh.window);

    InstanceContext ctx;
    ctx.mesh = &mi;
    ctx.meshInstanceId = meshInstanceId;
    ctx.space = Space::kShell;
    ctx.primitiveIndex = static_cast<int>(triangle);
    ctx.gatePrism = &prism;

    auto trace_entry = [&](const ReplicationEntry& e) {
        ctx.cell = {e.cellI, e.cellJ, -1};
        ctx.tileId = s.recipe2d.at(e.cellI, e.cellJ);
        const Affine m1 = frame.tile_to_object(e.gUv);
        const Affine m1Inv{frame.inverseLinear, -(frame.inverseLinear * m1.translation)};
        trace_tile(st, ctx, s.squareAssets[ctx.tileId], m1, m1Inv, objectRay, &frame, e.gUv);
    };

    if (st.config.useRepLas) {
        // One transform into the replication frame, then the static grid
        // picks the tile slots worth descending into.
        const Vec2 center{(area.originI + area.nU * 0.5) * s.tileUvSize, (area.originJ + area.nV * 0.5) * s.tileUvSize};
        const Affine repInv = frame.object_to_tile(center);
        Ray repRay = transform_ray(repInv, objectRay);
        repRay.tMax = st.tMax;
        const RepGrid& grid = sh.repGrid;
        bvh_visit(grid.bvh, repRay, [&](std::uint32_t cellIdx, Ray& rr) {
            const int gi = static_cast<int>(cellIdx) % grid.nU;
            const int gj = static_cast<int>(cellIdx) / grid.nU;
            // Grid rows run along tile +z, which is -zSign along v.
            const int j = frame.zSign > 0 ? grid.nV - 1 - gj : gj;
            trace_entry(area.entries[static_cast<std::size_t>(j) * area.nU + gi]);
            rr.tMax = std::min(rr.tMax, st.tMax);
        });
    } else {
        for (const ReplicationEntry& e : area.entries) trace_entry(e);
    }
    objectRay.tMax = std::min(objectRay.tMax, st.tMax);
}

}  // namespace detail

/// Shell renderer: prisms (muLAS) -> replication area tiles (mLAS) -> atoms
/// (nLAS), with every transform computed during traversal.
inline std::optional<HitRecord> trace_shell(const Ray& worldRay, const Scene& s, const RenderConfig& config) {
    detail::TraceState st(s, config, worldRay);
    Ray ray = worldRay;
    bvh_visit(s.shellInstanceBvh, ray, [&](std::uint32_t prim, Ray& r) {
        const std::uint32_t id = s.shellInstanceIds[prim];
        const MeshInstance& mi = s.instances[id];
        const MeshAsset& m = s.meshes[mi.meshId];
        Ray objectRay = transform_ray(s.inverseTransforms[id], r);
        objectRay.tMax = st.tMax;
        bvh_visit(m.shellData.prismBvh, objectRay, [&](std::uint32_t p, Ray& orr) {
            detail::trace_prism(st, static_cast<int>(id), mi, m, m.shellData.activePrisms[p], orr);
        });
        r.tMax = std::min(r.tMax, st.tMax);
    });
    return st.best;
}

/// Core renderer: per mesh instance (closest first), the interior ray
/// interval, then the core grid boxes in order, each holding one Wang cube.
inline std::optional<HitRecord> trace_core(const Ray& worldRay, const Scene& s, const RenderConfig& config) {
    detail::TraceState st(s, config, worldRay);
    struct Candidate {
        real tEnter;
        std::uint32_t instance;
    };
    std::vector<Candidate> candidates;
    {
        Ray probe = worldRay;
        bvh_visit(s.coreInstanceBvh, probe, [&](std::uint32_t prim, Ray& r) {
            if (auto iv = ray_aabb(r, s.coreInstanceBounds[prim]); iv && iv->tExit >= r.tMin && iv->tEnter <= r.tMax)
                candidates.push_back({std::max(iv->tEnter, r.tMin), s.coreInstanceIds[prim]});
        });
    }
    std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
        return a.tEnter != b.tEnter ? a.tEnter < b.tEnter : a.instance < b.instance;
    });
    const real half = s.cubeSize / 2;
    for (const Candidate& c : candidates) {
        if (c.tEnter > st.tMax) break;
        const MeshInstance& mi = s.instances[c.instance];
        const MeshAsset& m = s.meshes[mi.meshId];
        const auto interval = ray_interval(mi, m.mesh, m.triangleBvh, worldRay, s.epsilon);
        if (!interval) continue;
        const Ray objectRay = transform_ray(s.inverseTransforms[c.instance], worldRay);
        const CoreGridMeta& grid = m.coreData.grid;
        // Content of a box reaches at most `reach` past its faces, so its hits
        // cannot start earlier than the box entry minus this margin.
        const Vec3 dilated = grid.boxSize + Vec3{2, 2, 2} * m.coreData.reach;
        const real margin = length(dilated) / length(objectRay.direction);

        detail::InstanceContext ctx;
        ctx.mesh = &mi;
        ctx.meshInstanceId = static_cast<int>(c.instance);
        ctx.space = Space::kCore;
        ctx.tLo = interval->tEnter;
        ctx.tHi = interval->tExit;
        grid_walk(grid, objectRay, *interval, [&](const BoxCoord& b, real tEnter, real) {
            if (tEnter - margin > st.tMax) return false;
            const Vec3 lo = box_min(grid, b);
            if (config.clipPlane.enabled) {
                std::array<Vec3, 8> pts;
                const auto corners = Aabb{lo, lo + grid.boxSize}.corners();
                for (int i = 0; i < 8; ++i) pts[i] = mi.worldTransform.point(corners[i]);
                if (clip_reject(pts, config.clipPlane)) return true;
            }
            ctx.cell = {b.i, b.j, b.k};
            ctx.primitiveIndex = (b.k * grid.dims[1] + b.j) * grid.dims[0] + b.i;
            ctx.tileId = recipe_lookup_3d(s.recipe3d, b.i, b.j, b.k);
            const Vec3 center = lo + Vec3{half, half, half};
            detail::trace_tile(st, ctx, s.cubeAssets[ctx.tileId], Affine::translate(center),
                               Affine::translate(-center), objectRay, nullptr, {});
            return true;
        });
    }
    return st.best;
}

/// Shell and core results composited by depth.
inline std::optional<HitRecord> trace(const Ray& worldRay, const Scene& s, const RenderConfig& config) {
    std::optional<HitRecord> shell, core;
    if (config.mode != RenderMode::kCore) shell = trace_shell(worldRay, s, config);
    if (config.mode != RenderMode::kShell) core = trace_core(worldRay, s, config);
    if (shell && core) return closer(*core, *shell) ? core : shell;
    return shell ? shell : core;
}

struct CameraBasis {
    Vec3 origin, forward, right, up;
    real tanHalf = 1, aspect = 1;
    int width = 1, height = 1;

    explicit CameraBasis(const Camera& c)
        : origin(c.position), tanHalf(std::tan(c.verticalFov / 2)), width(c.width), height(c.height) {
        forward = normalize(c.forward);
        right = normalize(cross(forward, c.up));
        up = cross(right, forward);
        aspect = static_cast<real>(c.width) / c.height;
    }
    Ray primary(int px, int py) const {
        const real x = (2 * (px + 0.5) / width - 1) * tanHalf * aspect;
        const real y = (1 - 2 * (py + 0.5) / height) * tanHalf;
        return {origin, normalize(forward + right * x + up * y), 0, kInf};
    }
};

inline Ray primary_ray(const Camera& c, int px, int py) { return CameraBasis(c).primary(px, py); }

struct Framebuffer {
    int width = 0, height = 0;
    std::vector<std::uint8_t> rgb;  // rows top to bottom
    std::vector<real> depth;        // +inf on a miss

    bool operator==(const Framebuffer&) const = default;
};

inline constexpr real kAmbientFloor = 0.15;

/// Headlight Lambert with an ambient floor, in [0, 1] per channel.
inline Vec3 shade(const Scene& s, const HitRecord& h, const Vec3& rayDirection) {
    const real lambert = std::max(0.0, dot(h.worldNormal, -normalize(rayDirection)));
    return s.molecules[h.moleculeTypeId].color * std::max(kAmbientFloor, lambert);
}

inline std::uint8_t quantize(real c) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(c, 0.0, 1.0) * 255.0));
}

inline int default_worker_count() { return std::max(1, static_cast<int>(std::thread::hardware_concurrency())); }

/// Renders all pixels, rows distributed over `workers` threads. When `hits`
/// is given it receives the per-pixel hit (row-major).
inline Framebuffer render_frame(const Scene& s, const Camera& camera, const RenderConfig& config,
                                std::vector<std::optional<HitRecord>>* hits = nullptr, int workers = 0) {
    Framebuffer fb;
    fb.width = camera.width;
    fb.height = camera.height;
    const std::size_t n = static_cast<std::size_t>(fb.width) * fb.height;
    fb.rgb.assign(n * 3, 0);
    fb.depth.assign(n, kInf);
    if (hits) hits->assign(n, std::nullopt);
    const CameraBasis basis(camera);
    std::atomic<int> nextRow{0};
    auto work = [&] {
        for (int y = nextRow++; y < fb.height; y = nextRow++)
            for (int x = 0; x < fb.width; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * fb.width + x;
                const Ray ray = basis.primary(x, y);
                const auto h = trace(ray, s, config);
                const Vec3 c = h ? shade(s, *h, ray.direction) : config.background;
                fb.rgb[3 * i] = quantize(c.x);
                fb.rgb[3 * i + 1] = quantize(c.y);
                fb.rgb[3 * i + 2] = quantize(c.z);
                if (h) fb.depth[i] = h->t;
                if (hits) (*hits)[i] = h;
            }
    };
    const int count = workers > 0 ? workers : default_worker_count();
    std::vector<std::thread> pool;
    for (int w = 1; w < count; ++w) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
    return fb;
}

}  // namespace mesoray
