#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mesoray/bvh.hpp"
#include "mesoray/core_grid.hpp"
#include "mesoray/molecule.hpp"
#include "mesoray/shell.hpp"
#include "mesoray/transforms.hpp"
#include "mesoray/wang.hpp"

namespace mesoray {

struct Camera {
    Vec3 position{0, 0, 10};
    Vec3 forward{0, 0, -1};
    Vec3 up{0, 1, 0};
    real verticalFov = 40 * kPi / 180;  // radians
    int width = 256;
    int height = 256;
};

enum class RenderMode { kShell, kCore, kBoth };

struct RenderConfig {
    ClipPlane clipPlane;
    real time = 0;
    real jitterAmplitude = 0;  // radians
    bool useRepLas = true;
    bool smoothNormals = false;
    RenderMode mode = RenderMode::kBoth;
    Vec3 background{0.08, 0.08, 0.10};
};

/// Everything needed to build a scene, already parsed.
struct SceneInputs {
    struct Molecule {
        MoleculeType type;
        Vec3 color{0.8, 0.8, 0.8};
    };
    struct Mesh {
        std::string name;
        ProxyMesh mesh;
        bool shell = true;
        bool core = true;
        std::vector<Affine> instances;
    };

    std::vector<Molecule> molecules;
    SquareTileSet squares;
    CubeTileSet cubes;
    real tileUvSize = 0.1;
    std::uint64_t seed2d = 1;
    std::uint64_t seed3d = 2;
    std::optional<TilingRecipe2D> recipe2d;  // generated when absent
    std::optional<TilingRecipe3D> recipe3d;
    std::vector<Mesh> meshes;
    Camera camera;
    RenderConfig render;
};

/// nLAS entry: one molecule type with its atom hierarchy.
struct MoleculeAsset {
    MoleculeType type;
    Bvh bvh;
    Vec3 color;
    real boundingRadius = 0;
};

/// mLAS entry: one Wang tile's instance hierarchy. Instance boxes are the
/// rotation-invariant cube position +- bounding radius, so jitter never
/// invalidates them.
struct TileAsset {
    std::vector<MoleculeInstance> instances;
    std::vector<Aabb> instanceBoxes;
    Bvh bvh;
    Aabb contentBounds;  // relative to the tile centre
    long long atomCount = 0;
};

struct ShellData {
    std::vector<Prism> prisms;                 // one per triangle
    std::vector<TriangleTileFrame> frames;     // one per triangle
    std::vector<bool> frameValid;
    std::vector<std::uint32_t> activePrisms;   // prisms with content and a valid frame
    std::vector<Aabb> activeBounds;            // prism plus everything its tiles can place
    Bvh prismBvh;                              // over activeBounds
    WindowDims window;
    RepGrid repGrid;
    long long atomsPerInstance = 0;
};

struct CoreData {
    CoreGridMeta grid;
    real reach = 0;  // how far cube content can poke out of its box
    long long atomsPerInstance = 0;
};

struct MeshAsset {
    std::string name;
    ProxyMesh mesh;
    bool shell = true;
    bool core = true;
    Bvh triangleBvh;
    std::vector<Aabb> triangleBounds;
    ShellData shellData;
    CoreData coreData;
};

struct BuildCounters {
    long long micro = 0;  // scene-level (mesh instance) structures
    long long meso = 0;   // tile instance hierarchies
    long long nano = 0;   // molecule atom hierarchies
};

struct Scene {
    std::vector<MoleculeAsset> molecules;
    real squareSize = 1;
    real cubeSize = 1;
    real tileUvSize = 0.1;
    std::vector<WangSquareTile> squareTiles;
    std::vector<WangCubeTile> cubeTiles;
    std::vector<TileAsset> squareAssets;
    std::vector<TileAsset> cubeAssets;
    TilingRecipe2D recipe2d;
    TilingRecipe3D recipe3d;
    std::vector<MeshAsset> meshes;

    std::vector<MeshInstance> instances;
    std::vector<Affine> inverseTransforms;
    // World-space bounds of instances that carry shell / core content; the
    // id lists map hierarchy primitives back to `instances`.
    std::vector<Aabb> shellInstanceBounds;
    std::vector<std::uint32_t> shellInstanceIds;
    std::vector<Aabb> coreInstanceBounds;
    std::vector<std::uint32_t> coreInstanceIds;
    Bvh shellInstanceBvh;
    Bvh coreInstanceBvh;

    Aabb bounds;
    real epsilon = 1e-4;
    Camera camera;
    RenderConfig render;
    BuildCounters counters;
};

namespace detail {

inline TileAsset make_tile_asset(const std::vector<MoleculeInstance>& instances,
                                 const std::vector<MoleculeAsset>& molecules) {
    TileAsset t;
    t.instances = instances;
    for (const MoleculeInstance& inst : instances) {
        if (inst.moleculeTypeId < 0 || inst.moleculeTypeId >= static_cast<int>(molecules.size()))
            throw Error("tile instance references unknown molecule " + std::to_string(inst.moleculeTypeId));
        const MoleculeAsset& m = molecules[inst.moleculeTypeId];
        const Vec3 r{m.boundingRadius, m.boundingRadius, m.boundingRadius};
        t.instanceBoxes.push_back({inst.localPosition - r, inst.localPosition + r});
        t.contentBounds.expand(t.instanceBoxes.back());
        t.atomCount += static_cast<long long>(m.type.atoms.size());
    }
    t.bvh = build_bvh(t.instanceBoxes);
    return t;
}

inline void build_shell(Scene& s, MeshAsset& m) {
    ShellData& sh = m.shellData;
    const ProxyMesh& mesh = m.mesh;
    sh.window = replication_area_dims(mesh, s.tileUvSize);
    std::vector<MoleculeType> types;
    for (const auto& mol : s.molecules) types.push_back(mol.type);
    sh.prisms = build_adaptive_prisms(mesh, s.recipe2d, s.squareTiles, types, sh.window);

    Aabb content;
    real hMax = 0;
    for (const TileAsset& t : s.squareAssets) content.expand(t.contentBounds);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        try {
            sh.frames.push_back(make_tile_frame(mesh, t, s.tileUvSize, s.squareSize));
            sh.frameValid.push_back(true);
        } catch (const Error&) {
            sh.frames.emplace_back();
            sh.frameValid.push_back(false);
        }
        const Prism& p = sh.prisms[t];
        const ReplicationArea area = map_triangle(mesh.uvs(t), s.recipe2d, sh.window);
        for (const ReplicationEntry& e : area.entries)
            sh.atomsPerInstance += s.squareAssets[s.recipe2d.at(e.cellI, e.cellJ)].atomCount;
        if (!p.hasContent || !sh.frameValid[t]) continue;
        hMax = std::max({hMax, p.hPlus, p.hMinus});
        Aabb cull = p.bounds;
        for (const ReplicationEntry& e : area.entries) {
            const TileAsset& tile = s.squareAssets[s.recipe2d.at(e.cellI, e.cellJ)];
            cull.expand(transform_aabb(sh.frames[t].tile_to_object(e.gUv), tile.contentBounds));
        }
        sh.activePrisms.push_back(static_cast<std::uint32_t>(t));
        sh.activeBounds.push_back(cull);
    }
    sh.prismBvh = build_bvh(sh.activeBounds);
    // Rounding slack so the grid never culls what the per-tile test accepts.
    const real slack = 1e-6 * s.squareSize;
    if (!content.is_empty()) content = {content.min - Vec3{slack, slack, slack}, content.max + Vec3{slack, slack, slack}};
    sh.repGrid = build_rep_grid(sh.window.nU, sh.window.nV, s.squareSize, hMax, content);
}

inline void build_core(Scene& s, MeshAsset& m) {
    CoreData& c = m.coreData;
    c.grid = make_core_grid(m.mesh.bounds(), s.cubeSize);
    const real half = s.cubeSize / 2;
    for (const TileAsset& t : s.cubeAssets) {
        if (t.contentBounds.is_empty()) continue;
        for (int a = 0; a < 3; ++a)
            c.reach = std::max({c.reach, t.contentBounds.max[a] - half, -half - t.contentBounds.min[a]});
    }
    for (int k = 0; k < c.grid.dims[2]; ++k)
        for (int j = 0; j < c.grid.dims[1]; ++j)
            for (int i = 0; i < c.grid.dims[0]; ++i)
                c.atomsPerInstance += s.cubeAssets[recipe_lookup_3d(s.recipe3d, i, j, k)].atomCount;
}

}  // namespace detail

/// (Re)builds the mesh-instance level from `scene.instances`.
inline void rebuild_instance_level(Scene& s) {
    s.inverseTransforms.clear();
    s.shellInstanceBounds.clear();
    s.shellInstanceIds.clear();
    s.coreInstanceBounds.clear();
    s.coreInstanceIds.clear();
    s.bounds = Aabb{};
    for (std::size_t i = 0; i < s.instances.size(); ++i) {
        const MeshInstance& inst = s.instances[i];
        s.inverseTransforms.push_back(affine_invert(inst.worldTransform));
        const MeshAsset& m = s.meshes.at(inst.meshId);
        s.bounds.expand(transform_aabb(inst.worldTransform, m.mesh.bounds()));
        if (m.shell && !m.shellData.activeBounds.empty()) {
            Aabb local;
            for (const Aabb& b : m.shellData.activeBounds) local.expand(b);
            s.shellInstanceBounds.push_back(transform_aabb(inst.worldTransform, local));
            s.shellInstanceIds.push_back(static_cast<std::uint32_t>(i));
            s.bounds.expand(s.shellInstanceBounds.back());
        }
        if (m.core && !m.mesh.vertices.empty()) {
            s.coreInstanceBounds.push_back(transform_aabb(inst.worldTransform, m.mesh.bounds()));
            s.coreInstanceIds.push_back(static_cast<std::uint32_t>(i));
        }
    }
    s.shellInstanceBvh = build_bvh(s.shellInstanceBounds);
    s.coreInstanceBvh = build_bvh(s.coreInstanceBounds);
    s.epsilon = 1e-4 * std::max(s.bounds.diagonal(), 1e-9);
    ++s.counters.micro;
}

inline Scene build_scene(const SceneInputs& in) {
    Scene s;
    s.squareSize = in.squares.worldSize;
    s.cubeSize = in.cubes.worldSize;
    s.tileUvSize = in.tileUvSize;
    s.camera = in.camera;
    s.render = in.render;
    if (!(s.squareSize > 0) || !(s.cubeSize > 0) || !(s.tileUvSize > 0))
        throw Error("tile world sizes and tile uv size must be positive");

    for (std::size_t i = 0; i < in.molecules.size(); ++i) {
        MoleculeAsset a;
        a.type = in.molecules[i].type;
        a.type.id = static_cast<int>(i);
        a.color = in.molecules[i].color;
        a.bvh = build_atom_bvh(a.type);
        a.boundingRadius = bounding_radius(a.type);
        s.molecules.push_back(std::move(a));
        ++s.counters.nano;
    }

    s.squareTiles = in.squares.tiles;
    s.cubeTiles = in.cubes.tiles;
    for (const auto& t : s.squareTiles) {
        s.squareAssets.push_back(detail::make_tile_asset(t.instances, s.molecules));
        ++s.counters.meso;
    }
    for (const auto& t : s.cubeTiles) {
        s.cubeAssets.push_back(detail::make_tile_asset(t.instances, s.molecules));
        ++s.counters.meso;
    }

    bool anyShell = false;
    std::array<int, 3> coreDims{1, 1, 1};
    for (const auto& m : in.meshes) {
        anyShell |= m.shell;
        if (m.core) {
            const CoreGridMeta g = make_core_grid(m.mesh.bounds(), s.cubeSize);
            for (int a = 0; a < 3; ++a) coreDims[a] = std::max(coreDims[a], g.dims[a]);
        }
    }
    bool anyCore = false;
    for (const auto& m : in.meshes) anyCore |= m.core;
    if (anyShell && s.squareTiles.empty()) throw Error("shell meshes need at least one square tile");
    if (anyCore && s.cubeTiles.empty()) throw Error("core meshes need at least one cube tile");

    if (in.recipe2d) {
        s.recipe2d = *in.recipe2d;
        s.recipe2d.tileUvSize = s.tileUvSize;
    } else if (!s.squareTiles.empty()) {
        int dim = recipe_cells_for(s.tileUvSize);
        for (const auto& m : in.meshes)
            if (m.shell) {
                const WindowDims w = replication_area_dims(m.mesh, s.tileUvSize);
                dim = std::max({dim, w.nU, w.nV});
            }
        s.recipe2d = generate_recipe_2d(s.squareTiles, dim, dim, in.seed2d, s.tileUvSize);
    }
    if (in.recipe3d) {
        s.recipe3d = *in.recipe3d;
    } else if (!s.cubeTiles.empty()) {
        s.recipe3d = generate_recipe_3d(s.cubeTiles, coreDims[0], coreDims[1], coreDims[2], in.seed3d);
    }
    for (int c : s.recipe2d.cells)
        if (c < 0 || c >= static_cast<int>(s.squareTiles.size())) throw Error("2D recipe references unknown tile");
    for (int c : s.recipe3d.cells)
        if (c < 0 || c >= static_cast<int>(s.cubeTiles.size())) throw Error("3D recipe references unknown tile");

    for (std::size_t mi = 0; mi < in.meshes.size(); ++mi) {
        const auto& src = in.meshes[mi];
        MeshAsset m;
        m.name = src.name;
        m.mesh = src.mesh;
        m.shell = src.shell;
        m.core = src.core;
        for (std::size_t t = 0; t < m.mesh.triangles.size(); ++t) {
            Aabb b;
            for (const Vec3& p : m.mesh.positions(t)) b.expand(p);
            m.triangleBounds.push_back(b);
        }
        m.triangleBvh = build_bvh(m.triangleBounds);
        if (m.shell) {
            if (s.recipe2d.width < 1) throw Error("shell mesh without a 2D recipe");
            detail::build_shell(s, m);
        }
        if (m.core) {
            m.coreData.grid = make_core_grid(m.mesh.bounds(), s.cubeSize);
            const auto& g = m.coreData.grid;
            if (s.recipe3d.width < g.dims[0] || s.recipe3d.height < g.dims[1] || s.recipe3d.depth < g.dims[2])
                throw OutOfBoundsError("3D recipe smaller than the core grid of mesh '" + m.name + "'");
            detail::build_core(s, m);
        }
        s.meshes.push_back(std::move(m));
        for (const Affine& w : src.instances) s.instances.push_back({static_cast<int>(mi), w});
    }
    rebuild_instance_level(s);
    return s;
}

/// Moves one mesh instance. Only the mesh-instance level is rebuilt; tile
/// and molecule hierarchies are untouched.
inline void set_mesh_transform(Scene& s, std::size_t instanceId, const Affine& transform) {
    if (instanceId >= s.instances.size()) throw OutOfBoundsError("unknown mesh instance");
    (void)affine_invert(transform);  // throws on singular transforms
    s.instances[instanceId].worldTransform = transform;
    rebuild_instance_level(s);
}

/// Atoms the scene shows, counted from the recipes without instancing.
inline long long virtual_atom_count(const Scene& s) {
    long long total = 0;
    for (const MeshInstance& inst : s.instances) {
        const MeshAsset& m = s.meshes[inst.meshId];
        if (m.shell) total += m.shellData.atomsPerInstance;
        if (m.core) total += m.coreData.atomsPerInstance;
    }
    return total;
}

struct BuildReport {
    std::size_t moleculeCount = 0, atomCount = 0, squareTileCount = 0, cubeTileCount = 0;
    std::size_t meshCount = 0, meshInstanceCount = 0, prismCount = 0, activePrismCount = 0;
    std::size_t atomBytes = 0, atomBvhBytes = 0, tileBytes = 0, tileBvhBytes = 0, recipeBytes = 0;
    std::size_t meshBytes = 0, prismBytes = 0, prismBvhBytes = 0, repGridBytes = 0, triangleBvhBytes = 0;
    std::size_t instanceBytes = 0;
    std::vector<std::array<int, 3>> coreGridDims;
    std::vector<std::array<int, 2>> replicationDims;
    long long virtualAtoms = 0;

    /// Geometry held once regardless of how often meshes are instanced.
    std::size_t geometry_bytes() const {
        return atomBytes + atomBvhBytes + tileBytes + tileBvhBytes + recipeBytes + meshBytes + prismBytes +
               prismBvhBytes + repGridBytes + triangleBvhBytes;
    }
    bool operator==(const BuildReport&) const = default;
};

inline BuildReport build_report(const Scene& s) {
    BuildReport r;
    r.moleculeCount = s.molecules.size();
    for (const auto& m : s.molecules) {
        r.atomCount += m.type.atoms.size();
        r.atomBytes += m.type.atoms.capacity() * sizeof(Atom);
        r.atomBvhBytes += m.bvh.bytes();
    }
    r.squareTileCount = s.squareAssets.size();
    r.cubeTileCount = s.cubeAssets.size();
    for (const auto* set : {&s.squareAssets, &s.cubeAssets})
        for (const TileAsset& t : *set) {
            r.tileBytes += t.instances.capacity() * sizeof(MoleculeInstance) + t.instanceBoxes.capacity() * sizeof(Aabb);
            r.tileBvhBytes += t.bvh.bytes();
        }
    r.recipeBytes = s.recipe2d.bytes() + s.recipe3d.bytes();
    r.meshCount = s.meshes.size();
    for (const MeshAsset& m : s.meshes) {
        r.meshBytes += m.mesh.bytes();
        r.triangleBvhBytes += m.triangleBvh.bytes() + m.triangleBounds.capacity() * sizeof(Aabb);
        const ShellData& sh = m.shellData;
        r.prismCount += sh.prisms.size();
        r.activePrismCount += sh.activePrisms.size();
        r.prismBytes += sh.prisms.capacity() * sizeof(Prism) + sh.frames.capacity() * sizeof(TriangleTileFrame) +
                        sh.activePrisms.capacity() * sizeof(std::uint32_t) + sh.activeBounds.capacity() * sizeof(Aabb);
        r.prismBvhBytes += sh.prismBvh.bytes();
        r.repGridBytes += sh.repGrid.bytes();
        if (m.core) r.coreGridDims.push_back(m.coreData.grid.dims);
        if (m.shell) r.replicationDims.push_back({sh.window.nU, sh.window.nV});
    }
    r.meshInstanceCount = s.instances.size();
    r.instanceBytes = s.instances.capacity() * sizeof(MeshInstance) + s.inverseTransforms.capacity() * sizeof(Affine) +
                      (s.shellInstanceBounds.capacity() + s.coreInstanceBounds.capacity()) * sizeof(Aabb) +
                      (s.shellInstanceIds.capacity() + s.coreInstanceIds.capacity()) * sizeof(std::uint32_t) +
                      s.shellInstanceBvh.bytes() + s.coreInstanceBvh.bytes();
    r.virtualAtoms = virtual_atom_count(s);
    return r;
}

/// Invariant checks behind `validate`: recipe adjacency, prism convexity and
/// hierarchy containment. Returns one message per violation.
inline std::vector<std::string> validate_scene(const Scene& s) {
    std::vector<std::string> issues;
    if (!s.squareTiles.empty() && s.recipe2d.width > 0)
        if (auto e = check_recipe(s.recipe2d, s.squareTiles); !e.empty()) issues.push_back("2D recipe: " + e);
    if (!s.cubeTiles.empty() && s.recipe3d.width > 0)
        if (auto e = check_recipe(s.recipe3d, s.cubeTiles); !e.empty()) issues.push_back("3D recipe: " + e);
    for (std::size_t i = 0; i < s.molecules.size(); ++i)
        if (auto e = bvh_check(s.molecules[i].bvh, atom_bounds(s.molecules[i].type)))
            issues.push_back("atom hierarchy of molecule " + std::to_string(i) + ": " + *e);
    for (const auto* set : {&s.squareAssets, &s.cubeAssets})
        for (std::size_t i = 0; i < set->size(); ++i)
            if (auto e = bvh_check((*set)[i].bvh, (*set)[i].instanceBoxes))
                issues.push_back("tile hierarchy " + std::to_string(i) + ": " + *e);
    for (const MeshAsset& m : s.meshes) {
        if (auto e = bvh_check(m.triangleBvh, m.triangleBounds)) issues.push_back("mesh '" + m.name + "' triangles: " + *e);
        if (!m.shell) continue;
        const ShellData& sh = m.shellData;
        for (std::size_t t = 0; t < sh.prisms.size(); ++t) {
            if (!sh.frameValid[t]) issues.push_back("mesh '" + m.name + "' prism " + std::to_string(t) + ": degenerate triangle");
            else if (auto e = prism_check(sh.prisms[t]))
                issues.push_back("mesh '" + m.name + "' prism " + std::to_string(t) + ": " + *e);
        }
        if (auto e = bvh_check(sh.prismBvh, sh.activeBounds)) issues.push_back("mesh '" + m.name + "' prisms: " + *e);
        if (auto e = bvh_check(sh.repGrid.bvh, sh.repGrid.cellAabbs)) issues.push_back("mesh '" + m.name + "' replication grid: " + *e);
    }
    if (auto e = bvh_check(s.shellInstanceBvh, s.shellInstanceBounds)) issues.push_back("shell instances: " + *e);
    if (auto e = bvh_check(s.coreInstanceBvh, s.coreInstanceBounds)) issues.push_back("core instances: " + *e);
    return issues;
}

}  // namespace mesoray
