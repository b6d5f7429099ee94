#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mesoray/math.hpp"

namespace mesoray {

/// Flat bounding-volume hierarchy over primitive boxes. Interior nodes store
/// their two children at `first` and `first + 1`; leaves store a range into
/// `primitiveIds`.
struct Bvh {
    struct Node {
        Aabb bounds;
        std::uint32_t first = 0;
        std::uint32_t count = 0;  // 0 for interior nodes
        bool is_leaf() const { return count > 0; }
    };

    std::vector<Node> nodes;
    std::vector<std::uint32_t> primitiveIds;

    bool empty() const { return nodes.empty(); }
    Aabb bounds() const { return nodes.empty() ? Aabb{} : nodes.front().bounds; }
    std::size_t bytes() const {
        return nodes.capacity() * sizeof(Node) + primitiveIds.capacity() * sizeof(std::uint32_t);
    }
};

namespace detail {

inline constexpr std::uint32_t kLeafSize = 4;
inline constexpr int kBins = 16;

struct BvhBuilder {
    std::span<const Aabb> boxes;
    std::vector<Vec3> centroids;
    Bvh& out;

    void build(std::uint32_t node, std::uint32_t first, std::uint32_t count) {
        Aabb bounds, cbounds;
        for (std::uint32_t i = first; i < first + count; ++i) {
            bounds.expand(boxes[out.primitiveIds[i]]);
            cbounds.expand(centroids[out.primitiveIds[i]]);
        }
        out.nodes[node].bounds = bounds;
        if (count <= kLeafSize) {
            out.nodes[node].first = first;
            out.nodes[node].count = count;
            return;
        }
        const std::uint32_t mid = split(first, count, cbounds);
        const auto child = static_cast<std::uint32_t>(out.nodes.size());
        out.nodes.emplace_back();
        out.nodes.emplace_back();
        out.nodes[node].first = child;
        out.nodes[node].count = 0;
        build(child, first, mid - first);
        build(child + 1, mid, first + count - mid);
    }

    // Binned SAH split; falls back to a median split when every centroid
    // coincides or the best plane leaves one side empty.
    std::uint32_t split(std::uint32_t first, std::uint32_t count, const Aabb& cbounds) {
        auto* ids = out.primitiveIds.data();
        const Vec3 ext = cbounds.extent();
        int axis = 0;
        if (ext.y > ext[axis]) axis = 1;
        if (ext.z > ext[axis]) axis = 2;
        if (ext[axis] <= 0) return first + count / 2;

        const real lo = cbounds.min[axis];
        const real scale = kBins / ext[axis];
        auto bin_of = [&](std::uint32_t id) {
            return std::min(kBins - 1, static_cast<int>((centroids[id][axis] - lo) * scale));
        };
        std::array<Aabb, kBins> binBox{};
        std::array<std::uint32_t, kBins> binCount{};
        for (std::uint32_t i = first; i < first + count; ++i) {
            const int b = bin_of(ids[i]);
            binBox[b].expand(boxes[ids[i]]);
            ++binCount[b];
        }
        std::array<real, kBins - 1> leftCost{};
        Aabb acc;
        std::uint32_t n = 0;
        for (int b = 0; b < kBins - 1; ++b) {
            acc.expand(binBox[b]);
            n += binCount[b];
            leftCost[b] = acc.surface_area() * n;
        }
        acc = Aabb{};
        n = 0;
        real best = kInf;
        int bestBin = -1;
        for (int b = kBins - 1; b > 0; --b) {
            acc.expand(binBox[b]);
            n += binCount[b];
            const real cost = leftCost[b - 1] + acc.surface_area() * n;
            if (n < count && n > 0 && cost < best) {
                best = cost;
                bestBin = b;
            }
        }
        if (bestBin < 0) return first + count / 2;
        auto* mid = std::stable_partition(ids + first, ids + first + count,
                                          [&](std::uint32_t id) { return bin_of(id) < bestBin; });
        return static_cast<std::uint32_t>(mid - ids);
    }
};

/// Per-ray precomputation for repeated slab tests.
struct RaySlab {
    Vec3 origin, inv;
    std::array<bool, 3> parallel{};

    explicit RaySlab(const Ray& r) : origin(r.origin) {
        for (int a = 0; a < 3; ++a) {
            parallel[a] = r.direction[a] == 0;
            inv[a] = parallel[a] ? 0 : 1.0 / r.direction[a];
        }
    }

    /// Entry t of the box clipped to [tMin, tMax], or +inf on a miss.
    real enter(const Aabb& b, real tMin, real tMax) const {
        real t0 = tMin, t1 = tMax;
        for (int a = 0; a < 3; ++a) {
            if (parallel[a]) {
                if (origin[a] < b.min[a] || origin[a] > b.max[a]) return kInf;
                continue;
            }
            real ta = (b.min[a] - origin[a]) * inv[a], tb = (b.max[a] - origin[a]) * inv[a];
            if (ta > tb) std::swap(ta, tb);
            t0 = ta > t0 ? ta : t0;
            t1 = tb < t1 ? tb : t1;
            if (t0 > t1) return kInf;
        }
        return t0;
    }
};

}  // namespace detail

/// Deterministic for a fixed input order. Empty input gives an empty tree.
inline Bvh build_bvh(std::span<const Aabb> primitiveBounds) {
    Bvh bvh;
    const auto n = static_cast<std::uint32_t>(primitiveBounds.size());
    if (n == 0) return bvh;
    bvh.primitiveIds.resize(n);
    std::iota(bvh.primitiveIds.begin(), bvh.primitiveIds.end(), 0u);
    bvh.nodes.reserve(2 * n);
    bvh.nodes.emplace_back();
    detail::BvhBuilder b{primitiveBounds, {}, bvh};
    b.centroids.reserve(n);
    for (const Aabb& box : primitiveBounds) b.centroids.push_back(box.center());
    b.build(0, 0, n);
    bvh.nodes.shrink_to_fit();
    return bvh;
}

/// Visits every primitive whose bounds overlap [ray.tMin, ray.tMax], nearer
/// subtrees first. `visit(primitiveId, ray)` may shrink `ray.tMax`; the
/// shrunken value culls the rest of the walk.
template <class Visit>
void bvh_visit(const Bvh& bvh, Ray& ray, Visit&& visit) {
    if (bvh.empty()) return;
    const detail::RaySlab slab(ray);
    if (slab.enter(bvh.nodes[0].bounds, ray.tMin, ray.tMax) == kInf) return;
    struct Entry {
        std::uint32_t node;
        real t;
    };
    Entry stack[256];
    int top = 0;
    stack[top++] = {0, ray.tMin};
    while (top > 0) {
        const Entry e = stack[--top];
        if (e.t > ray.tMax) continue;
        const Bvh::Node& node = bvh.nodes[e.node];
        if (node.is_leaf()) {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i) visit(bvh.primitiveIds[i], ray);
            continue;
        }
        const real tl = slab.enter(bvh.nodes[node.first].bounds, ray.tMin, ray.tMax);
        const real tr = slab.enter(bvh.nodes[node.first + 1].bounds, ray.tMin, ray.tMax);
        if (tl <= tr) {
            if (tr != kInf) stack[top++] = {node.first + 1, tr};
            if (tl != kInf) stack[top++] = {node.first, tl};
        } else {
            if (tl != kInf) stack[top++] = {node.first, tl};
            if (tr != kInf) stack[top++] = {node.first + 1, tr};
        }
    }
}

struct BvhHit {
    std::uint32_t primitive;
    real t;
};

/// Closest accepted hit. `hit(primitiveId, ray)` returns the hit t (within the
/// ray's current interval) or nothing; every accepted hit shrinks tMax. Equal
/// t resolves to the smaller primitive id so the result is order-independent.
template <class HitFn>
std::optional<BvhHit> bvh_traverse(const Bvh& bvh, Ray ray, HitFn&& hit) {
    std::optional<BvhHit> best;
    bvh_visit(bvh, ray, [&](std::uint32_t id, Ray& r) {
        const std::optional<real> t = hit(id, static_cast<const Ray&>(r));
        if (!t || *t > r.tMax) return;
        if (!best || *t < best->t || (*t == best->t && id < best->primitive)) {
            best = BvhHit{id, *t};
            r.tMax = *t;
        }
    });
    return best;
}

/// Checks that every node contains its children (or its primitives' bounds)
/// and that leaves cover each primitive exactly once. Returns a description of
/// the first violation, or nothing.
inline std::optional<std::string> bvh_check(const Bvh& bvh, std::span<const Aabb> primitiveBounds) {
    if (bvh.empty()) {
        if (primitiveBounds.empty()) return std::nullopt;
        return "empty hierarchy over non-empty input";
    }
    std::vector<int> seen(primitiveBounds.size(), 0);
    for (std::size_t n = 0; n < bvh.nodes.size(); ++n) {
        const Bvh::Node& node = bvh.nodes[n];
        if (node.bounds.is_empty()) return "node " + std::to_string(n) + " has inverted bounds";
        if (node.is_leaf()) {
            for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
                const std::uint32_t id = bvh.primitiveIds.at(i);
                if (id >= primitiveBounds.size()) return "leaf references unknown primitive";
                ++seen[id];
                if (!node.bounds.contains(primitiveBounds[id]))
                    return "node " + std::to_string(n) + " does not contain primitive " + std::to_string(id);
            }
        } else {
            for (std::uint32_t c : {node.first, node.first + 1}) {
                if (c >= bvh.nodes.size()) return "dangling child index";
                if (!node.bounds.contains(bvh.nodes[c].bounds))
                    return "node " + std::to_string(n) + " does not contain child " + std::to_string(c);
            }
        }
    }
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (seen[i] != 1) return "primitive " + std::to_string(i) + " covered " + std::to_string(seen[i]) + " times";
    return std::nullopt;
}

/// Static grid of tile boxes laid out in a replication-area frame: cell (i, j)
/// is centred at ((i + 0.5) s - nU s / 2, 0, (j + 0.5) s - nV s / 2).
struct RepGrid {
    int nU = 0, nV = 0;
    real tileSize = 0;
    std::vector<Aabb> cellAabbs;  // index j * nU + i
    Bvh bvh;

    Vec3 cell_center(int i, int j) const {
        return {(i + 0.5) * tileSize - nU * tileSize * 0.5, 0, (j + 0.5) * tileSize - nV * tileSize * 0.5};
    }
    std::size_t bytes() const { return cellAabbs.capacity() * sizeof(Aabb) + bvh.bytes(); }
};

/// Each cell spans (s, 2 hMax, s). `contentBounds`, relative to a tile centre,
/// grows every cell so tile content protruding past the footprint stays inside.
inline RepGrid build_rep_grid(int nU, int nV, real tileSize, real hMax, const Aabb& contentBounds = {}) {
    if (nU < 1 || nV < 1) throw Error("replication grid needs at least one cell per axis");
    RepGrid g;
    g.nU = nU;
    g.nV = nV;
    g.tileSize = tileSize;
    Aabb local{{-tileSize / 2, -hMax, -tileSize / 2}, {tileSize / 2, hMax, tileSize / 2}};
    if (!contentBounds.is_empty()) local.expand(contentBounds);
    g.cellAabbs.reserve(static_cast<std::size_t>(nU) * nV);
    for (int j = 0; j < nV; ++j)
        for (int i = 0; i < nU; ++i) {
            const Vec3 c = g.cell_center(i, j);
            g.cellAabbs.push_back({local.min + c, local.max + c});
        }
    g.bvh = build_bvh(g.cellAabbs);
    return g;
}

}  // namespace mesoray
