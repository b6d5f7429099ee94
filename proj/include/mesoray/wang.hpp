#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mesoray/error.hpp"
#include "mesoray/math.hpp"

namespace mesoray {

struct MoleculeInstance {
    int moleculeTypeId = 0;
    Vec3 localPosition;  // tile object space; y is height above the tile plane
    Quat rotation;
};

enum Edge { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };

struct WangSquareTile {
    int id = 0;
    std::array<int, 4> edgeColors{};  // N, E, S, W
    std::vector<MoleculeInstance> instances;
};

enum Face { kPosX = 0, kNegX = 1, kPosY = 2, kNegY = 3, kPosZ = 4, kNegZ = 5 };

struct WangCubeTile {
    int id = 0;
    std::array<int, 6> faceColors{};  // +x, -x, +y, -y, +z, -z
    std::vector<MoleculeInstance> instances;
};

/// Square tiles share one footprint edge length `worldSize`; each spans
/// x, z in [-s/2, s/2] with the tile plane at y = 0.
struct SquareTileSet {
    real worldSize = 1;
    std::vector<WangSquareTile> tiles;
};

/// Cubes span [-s/2, s/2]^3; `worldSize` equals the core-grid box size.
struct CubeTileSet {
    real worldSize = 1;
    std::vector<WangCubeTile> tiles;
};

/// Row-major 2D recipe: cell (i, j) is column i along u, row j along v.
/// Row j + 1 lies north of row j.
struct TilingRecipe2D {
    int width = 0, height = 0;
    std::vector<int> cells;
    real tileUvSize = 1;

    int at(int i, int j) const { return cells[static_cast<std::size_t>(j) * width + i]; }
    std::size_t bytes() const { return cells.capacity() * sizeof(int); }
};

struct TilingRecipe3D {
    int width = 0, height = 0, depth = 0;
    std::vector<int> cells;  // index (k * height + j) * width + i

    int at(int i, int j, int k) const {
        return cells[(static_cast<std::size_t>(k) * height + j) * width + i];
    }
    std::size_t bytes() const { return cells.capacity() * sizeof(int); }
};

struct ReplicationEntry {
    int cellI = 0, cellJ = 0;
    Vec2 gUv;  // tile centre in texture space
};

struct ReplicationArea {
    int originI = 0, originJ = 0;
    int nU = 1, nV = 1;
    std::vector<ReplicationEntry> entries;  // index j * nU + i
};

namespace detail {

inline int pick(std::mt19937_64& rng, std::size_t n) { return static_cast<int>(rng() % n); }

}  // namespace detail

/// Scanline fill: each cell takes a uniformly random tile among those whose
/// W edge matches the E edge of the cell to its left and whose S edge matches
/// the N edge of the cell below it.
inline TilingRecipe2D generate_recipe_2d(const std::vector<WangSquareTile>& tiles, int width, int height,
                                         std::uint64_t seed, real tileUvSize = 1) {
    if (tiles.empty()) throw Error("generate_recipe_2d: empty tile set");
    if (width < 1 || height < 1) throw Error("generate_recipe_2d: dims must be positive");
    TilingRecipe2D r{width, height, std::vector<int>(static_cast<std::size_t>(width) * height), tileUvSize};
    std::mt19937_64 rng(seed);
    std::vector<int> candidates;
    candidates.reserve(tiles.size());
    for (int j = 0; j < height; ++j)
        for (int i = 0; i < width; ++i) {
            candidates.clear();
            for (std::size_t t = 0; t < tiles.size(); ++t) {
                const auto& c = tiles[t].edgeColors;
                if (i > 0 && c[kWest] != tiles[r.at(i - 1, j)].edgeColors[kEast]) continue;
                if (j > 0 && c[kSouth] != tiles[r.at(i, j - 1)].edgeColors[kNorth]) continue;
                candidates.push_back(static_cast<int>(t));
            }
            if (candidates.empty())
                throw UnsatisfiableError("no square tile fits cell (" + std::to_string(i) + "," + std::to_string(j) + ")");
            r.cells[static_cast<std::size_t>(j) * width + i] = candidates[detail::pick(rng, candidates.size())];
        }
    return r;
}

inline TilingRecipe3D generate_recipe_3d(const std::vector<WangCubeTile>& tiles, int width, int height, int depth,
                                         std::uint64_t seed) {
    if (tiles.empty()) throw Error("generate_recipe_3d: empty tile set");
    if (width < 1 || height < 1 || depth < 1) throw Error("generate_recipe_3d: dims must be positive");
    TilingRecipe3D r{width, height, depth, std::vector<int>(static_cast<std::size_t>(width) * height * depth)};
    std::mt19937_64 rng(seed);
    std::vector<int> candidates;
    candidates.reserve(tiles.size());
    for (int k = 0; k < depth; ++k)
        for (int j = 0; j < height; ++j)
            for (int i = 0; i < width; ++i) {
                candidates.clear();
                for (std::size_t t = 0; t < tiles.size(); ++t) {
                    const auto& c = tiles[t].faceColors;
                    if (i > 0 && c[kNegX] != tiles[r.at(i - 1, j, k)].faceColors[kPosX]) continue;
                    if (j > 0 && c[kNegY] != tiles[r.at(i, j - 1, k)].faceColors[kPosY]) continue;
                    if (k > 0 && c[kNegZ] != tiles[r.at(i, j, k - 1)].faceColors[kPosZ]) continue;
                    candidates.push_back(static_cast<int>(t));
                }
                if (candidates.empty())
                    throw UnsatisfiableError("no cube tile fits cell (" + std::to_string(i) + "," + std::to_string(j) +
                                             "," + std::to_string(k) + ")");
                r.cells[(static_cast<std::size_t>(k) * height + j) * width + i] =
                    candidates[detail::pick(rng, candidates.size())];
            }
    return r;
}

inline int recipe_lookup_2d(const TilingRecipe2D& r, int i, int j) {
    if (i < 0 || j < 0 || i >= r.width || j >= r.height)
        throw OutOfBoundsError("recipe cell (" + std::to_string(i) + "," + std::to_string(j) + ") outside " +
                               std::to_string(r.width) + "x" + std::to_string(r.height));
    return r.at(i, j);
}

inline int recipe_lookup_3d(const TilingRecipe3D& r, int i, int j, int k) {
    if (i < 0 || j < 0 || k < 0 || i >= r.width || j >= r.height || k >= r.depth)
        throw OutOfBoundsError("recipe cell (" + std::to_string(i) + "," + std::to_string(j) + "," +
                               std::to_string(k) + ") outside recipe");
    return r.at(i, j, k);
}

/// Describes the first adjacency violation, or returns an empty string.
inline std::string check_recipe(const TilingRecipe2D& r, const std::vector<WangSquareTile>& tiles) {
    if (r.cells.size() != static_cast<std::size_t>(r.width) * r.height) return "recipe cell count does not match dims";
    for (int c : r.cells)
        if (c < 0 || c >= static_cast<int>(tiles.size())) return "recipe references unknown tile " + std::to_string(c);
    for (int j = 0; j < r.height; ++j)
        for (int i = 0; i < r.width; ++i) {
            const auto& c = tiles[r.at(i, j)].edgeColors;
            if (i + 1 < r.width && c[kEast] != tiles[r.at(i + 1, j)].edgeColors[kWest])
                return "adjacency violation between (" + std::to_string(i) + "," + std::to_string(j) + ") and (" +
                       std::to_string(i + 1) + "," + std::to_string(j) + ")";
            if (j + 1 < r.height && c[kNorth] != tiles[r.at(i, j + 1)].edgeColors[kSouth])
                return "adjacency violation between (" + std::to_string(i) + "," + std::to_string(j) + ") and (" +
                       std::to_string(i) + "," + std::to_string(j + 1) + ")";
        }
    return {};
}

inline std::string check_recipe(const TilingRecipe3D& r, const std::vector<WangCubeTile>& tiles) {
    if (r.cells.size() != static_cast<std::size_t>(r.width) * r.height * r.depth)
        return "recipe cell count does not match dims";
    for (int c : r.cells)
        if (c < 0 || c >= static_cast<int>(tiles.size())) return "recipe references unknown tile " + std::to_string(c);
    auto name = [](int i, int j, int k) {
        return "(" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) + ")";
    };
    for (int k = 0; k < r.depth; ++k)
        for (int j = 0; j < r.height; ++j)
            for (int i = 0; i < r.width; ++i) {
                const auto& c = tiles[r.at(i, j, k)].faceColors;
                if (i + 1 < r.width && c[kPosX] != tiles[r.at(i + 1, j, k)].faceColors[kNegX])
                    return "adjacency violation between " + name(i, j, k) + " and " + name(i + 1, j, k);
                if (j + 1 < r.height && c[kPosY] != tiles[r.at(i, j + 1, k)].faceColors[kNegY])
                    return "adjacency violation between " + name(i, j, k) + " and " + name(i, j + 1, k);
                if (k + 1 < r.depth && c[kPosZ] != tiles[r.at(i, j, k + 1)].faceColors[kNegZ])
                    return "adjacency violation between " + name(i, j, k) + " and " + name(i, j, k + 1);
            }
    return {};
}

/// ceil(x) that ignores round-off just above an integer.
inline int ceil_tolerant(real x) { return static_cast<int>(std::ceil(x - 1e-9)); }

/// Number of recipe cells per axis needed to cover uv [0, 1].
inline int recipe_cells_for(real tileUvSize) { return std::max(1, ceil_tolerant(1.0 / tileUvSize)); }

struct WindowDims {
    int nU = 1, nV = 1;
    bool operator==(const WindowDims&) const = default;
};

/// Window size that covers any one triangle given its uv extent: one extra
/// cell absorbs the triangle's fractional offset against the tile lattice.
inline WindowDims window_dims_for_extent(Vec2 extent, real tileUvSize) {
    return {std::max(0, ceil_tolerant(extent.u / tileUvSize)) + 1,
            std::max(0, ceil_tolerant(extent.v / tileUvSize)) + 1};
}

/// The nU x nV window of recipe cells anchored at the triangle's minimum uv,
/// clamped so it stays inside the recipe.
inline ReplicationArea map_triangle(const std::array<Vec2, 3>& uv, const TilingRecipe2D& recipe, WindowDims dims) {
    const real ts = recipe.tileUvSize;
    const real minU = std::min({uv[0].u, uv[1].u, uv[2].u});
    const real minV = std::min({uv[0].v, uv[1].v, uv[2].v});
    ReplicationArea area;
    area.nU = dims.nU;
    area.nV = dims.nV;
    area.originI = std::clamp(static_cast<int>(std::floor(minU / ts)), 0, std::max(0, recipe.width - dims.nU));
    area.originJ = std::clamp(static_cast<int>(std::floor(minV / ts)), 0, std::max(0, recipe.height - dims.nV));
    area.entries.reserve(static_cast<std::size_t>(dims.nU) * dims.nV);
    for (int j = 0; j < dims.nV; ++j)
        for (int i = 0; i < dims.nU; ++i) {
            const int ci = area.originI + i, cj = area.originJ + j;
            area.entries.push_back({ci, cj, {(ci + 0.5) * ts, (cj + 0.5) * ts}});
        }
    return area;
}

}  // namespace mesoray
