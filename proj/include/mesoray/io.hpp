#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "mesoray/error.hpp"
#include "mesoray/molecule.hpp"
#include "mesoray/renderer.hpp"
#include "mesoray/scene.hpp"
#include "mesoray/shell.hpp"
#include "mesoray/wang.hpp"

namespace mesoray {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr std::string_view kSceneSchema = "mesoray-scene/1";
inline constexpr std::string_view kTilesSchema = "mesoray-tiles/1";
inline constexpr std::string_view kRecipeSchema = "mesoray-recipe/1";

inline std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFileError(path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// Images

/// 8-bit RGB, rows top to bottom.
struct Image {
    int width = 0, height = 0;
    std::vector<std::uint8_t> rgb;

    bool operator==(const Image&) const = default;
};

inline Image to_image(const Framebuffer& fb) { return {fb.width, fb.height, fb.rgb}; }

inline std::string encode_ppm(const Image& img) {
    if (img.width <= 0 || img.height <= 0 ||
        img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3)
        throw Error("image size does not match its dimensions");
    std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
    return out;
}

inline void write_ppm(const Image& img, const fs::path& path) {
    const std::string bytes = encode_ppm(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing '" + path.string() + "'");
}

/// Reads the binary pixmap subset written by write_ppm (maxval 255, no
/// comments).
inline Image decode_ppm(std::string_view bytes) {
    std::size_t pos = 0;
    auto token = [&]() -> std::string_view {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        return bytes.substr(start, pos - start);
    };
    auto number = [&](std::string_view t) {
        int v = 0;
        const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
        if (r.ec != std::errc{} || r.ptr != t.data() + t.size() || v <= 0) throw Error("malformed pixmap header");
        return v;
    };
    if (token() != "P6") throw Error("not a binary pixmap");
    Image img;
    img.width = number(token());
    img.height = number(token());
    if (number(token()) != 255) throw Error("unsupported pixmap maxval");
    ++pos;  // single whitespace before the raster
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height * 3;
    if (bytes.size() < pos + n) throw Error("truncated pixmap");
    img.rgb.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return img;
}

inline Image read_ppm(const fs::path& path) { return decode_ppm(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Wavefront meshes

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        const std::size_t s = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i > s) out.push_back(line.substr(s, i - s));
    }
    return out;
}

inline real parse_real(std::string_view t, int line) {
    real v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size() || !std::isfinite(v))
        throw ParseError("bad number '" + std::string(t) + "'", line);
    return v;
}

/// Resolves a 1-based (or negative, relative) index against `count`.
inline std::size_t resolve_index(std::string_view t, std::size_t count, int line, const char* what) {
    long long v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc{} || r.ptr != t.data() + t.size() || v == 0)
        throw ParseError(std::string("malformed ") + what + " index '" + std::string(t) + "'", line);
    const long long idx = v > 0 ? v - 1 : static_cast<long long>(count) + v;
    if (idx < 0 || idx >= static_cast<long long>(count))
        throw ParseError(std::string("undefined ") + what + " index " + std::to_string(v), line);
    return static_cast<std::size_t>(idx);
}

}  // namespace detail

/// Parses the v / vt / vn / f subset. Faces with more than three corners are
/// fan-triangulated; every corner needs a uv. Missing normals become
/// area-weighted vertex normals; uvs are clamped to [0, 1].
inline ProxyMesh parse_obj(std::string_view text) {
    std::vector<Vec3> positions, normals;
    std::vector<Vec2> uvs;
    struct Corner {
        std::size_t p, t;
        std::optional<std::size_t> n;
        auto operator<=>(const Corner&) const = default;
    };
    std::vector<std::array<Corner, 3>> faces;
    int lineNo = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++lineNo;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const auto tok = detail::split_ws(line);
        if (tok.empty()) continue;
        if (tok[0] == "v") {
            if (tok.size() < 4) throw ParseError("vertex needs three coordinates", lineNo);
            positions.push_back({detail::parse_real(tok[1], lineNo), detail::parse_real(tok[2], lineNo),
                                 detail::parse_real(tok[3], lineNo)});
        } else if (tok[0] == "vt") {
            if (tok.size() < 3) throw ParseError("texture coordinate needs two values", lineNo);
            uvs.push_back({std::clamp(detail::parse_real(tok[1], lineNo), 0.0, 1.0),
                           std::clamp(detail::parse_real(tok[2], lineNo), 0.0, 1.0)});
        } else if (tok[0] == "vn") {
            if (tok.size() < 4) throw ParseError("normal needs three values", lineNo);
            normals.push_back(normalize(Vec3{detail::parse_real(tok[1], lineNo), detail::parse_real(tok[2], lineNo),
                                             detail::parse_real(tok[3], lineNo)}));
        } else if (tok[0] == "f") {
            if (tok.size() < 4) throw ParseError("malformed face: fewer than three corners", lineNo);
            std::vector<Corner> corners;
            for (std::size_t i = 1; i < tok.size(); ++i) {
                std::string_view c = tok[i];
                const auto s1 = c.find('/');
                if (s1 == std::string_view::npos) throw ParseError("missing uv index in face corner", lineNo);
                const auto s2 = c.find('/', s1 + 1);
                const std::string_view pv = c.substr(0, s1);
                const std::string_view tv = c.substr(s1 + 1, s2 == std::string_view::npos ? std::string_view::npos : s2 - s1 - 1);
                if (tv.empty()) throw ParseError("missing uv index in face corner", lineNo);
                Corner k{detail::resolve_index(pv, positions.size(), lineNo, "vertex"),
                         detail::resolve_index(tv, uvs.size(), lineNo, "uv"), std::nullopt};
                if (s2 != std::string_view::npos) {
                    const std::string_view nv = c.substr(s2 + 1);
                    if (nv.empty()) throw ParseError("malformed face corner '" + std::string(c) + "'", lineNo);
                    k.n = detail::resolve_index(nv, normals.size(), lineNo, "normal");
                }
                corners.push_back(k);
            }
            for (std::size_t i = 1; i + 1 < corners.size(); ++i) faces.push_back({corners[0], corners[i], corners[i + 1]});
        }
        // other records (o, g, s, usemtl, mtllib, ...) are ignored
    }
    if (faces.empty()) throw Error("mesh has no faces");

    ProxyMesh mesh;
    std::map<Corner, std::uint32_t> index;
    bool needNormals = false;
    for (const auto& f : faces) {
        std::array<std::uint32_t, 3> tri{};
        for (int c = 0; c < 3; ++c) {
            auto [it, inserted] = index.try_emplace(f[c], static_cast<std::uint32_t>(mesh.vertices.size()));
            if (inserted) {
                MeshVertex v;
                v.position = positions[f[c].p];
                v.uv = uvs[f[c].t];
                if (f[c].n) v.normal = normals[*f[c].n];
                else needNormals = true;
                mesh.vertices.push_back(v);
            }
            tri[c] = it->second;
        }
        mesh.triangles.push_back(tri);
    }
    if (needNormals) {
        // Area-weighted: accumulate unnormalized face normals per position
        // so uv seams do not split the shading normal.
        std::vector<Vec3> acc(positions.size());
        for (const auto& f : faces) {
            const Vec3 n = cross(positions[f[1].p] - positions[f[0].p], positions[f[2].p] - positions[f[0].p]);
            for (const Corner& c : f) acc[c.p] += n;
        }
        for (const auto& [corner, vi] : index)
            if (!corner.n) {
                const real len = length(acc[corner.p]);
                mesh.vertices[vi].normal = len > 0 ? acc[corner.p] / len : Vec3{0, 1, 0};
            }
    }
    return mesh;
}

inline ProxyMesh load_obj(const fs::path& path) { return parse_obj(read_text_file(path)); }

inline MoleculeType load_pdb(const fs::path& path, std::string name = {}) {
    return parse_pdb(read_text_file(path), name.empty() ? path.stem().string() : std::move(name));
}

// ---------------------------------------------------------------------------
// Structured-text documents

namespace detail {

/// Field access that reports the full path of whatever is wrong.
struct Node {
    const json& value;
    std::string path;

    bool has(const char* key) const { return value.is_object() && value.contains(key); }
    Node at(const char* key) const {
        if (!value.is_object()) throw SchemaError(path, "expected an object");
        if (!value.contains(key)) throw SchemaError(join(key), "required field missing");
        return {value.at(key), join(key)};
    }
    Node at(std::size_t i) const { return {value.at(i), path + "[" + std::to_string(i) + "]"}; }
    std::size_t size() const {
        if (!value.is_array()) throw SchemaError(path, "expected an array");
        return value.size();
    }
    std::string join(const char* key) const { return path.empty() ? std::string(key) : path + "." + key; }

    real number() const {
        if (!value.is_number()) throw SchemaError(path, "expected a number");
        const real v = value.get<real>();
        if (!std::isfinite(v)) throw SchemaError(path, "expected a finite number");
        return v;
    }
    real positive() const {
        const real v = number();
        if (!(v > 0)) throw SchemaError(path, "expected a positive number");
        return v;
    }
    long long integer() const {
        if (!value.is_number_integer()) throw SchemaError(path, "expected an integer");
        return value.get<long long>();
    }
    bool boolean() const {
        if (!value.is_boolean()) throw SchemaError(path, "expected true or false");
        return value.get<bool>();
    }
    std::string string() const {
        if (!value.is_string()) throw SchemaError(path, "expected a string");
        return value.get<std::string>();
    }
    std::vector<real> numbers(std::size_t n) const {
        if (size() != n) throw SchemaError(path, "expected " + std::to_string(n) + " numbers");
        std::vector<real> out;
        for (std::size_t i = 0; i < n; ++i) out.push_back(at(i).number());
        return out;
    }
    Vec3 vec3() const {
        const auto v = numbers(3);
        return {v[0], v[1], v[2]};
    }

    real number_or(const char* key, real fallback) const { return has(key) ? at(key).number() : fallback; }
    bool boolean_or(const char* key, bool fallback) const { return has(key) ? at(key).boolean() : fallback; }
    Vec3 vec3_or(const char* key, Vec3 fallback) const { return has(key) ? at(key).vec3() : fallback; }
};

inline json parse_json(std::string_view text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("", what + " is not valid structured text: " + e.what());
    }
}

inline void check_schema(const Node& root, std::string_view expected) {
    const std::string got = root.at("schema").string();
    if (got != expected) throw SchemaError(root.join("schema"), "expected '" + std::string(expected) + "', got '" + got + "'");
}

inline Quat quat_of(const Node& n) {
    const auto v = n.numbers(4);
    const Quat q{v[0], v[1], v[2], v[3]};
    if (q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z == 0) throw SchemaError(n.path, "zero quaternion");
    return q.normalized();
}

/// Without a molecule table (`moleculeIds` null) references are not checked
/// and names resolve to -1; only tile edges and placements are meaningful.
inline std::vector<MoleculeInstance> instances_of(const Node& tile, const std::map<std::string, int>* moleculeIds) {
    std::vector<MoleculeInstance> out;
    if (!tile.has("instances")) return out;
    const Node list = tile.at("instances");
    for (std::size_t i = 0; i < list.size(); ++i) {
        const Node in = list.at(i);
        MoleculeInstance m;
        const Node mol = in.at("molecule");
        if (mol.value.is_string()) {
            m.moleculeTypeId = -1;
            if (moleculeIds) {
                const auto it = moleculeIds->find(mol.string());
                if (it == moleculeIds->end()) throw SchemaError(mol.path, "unknown molecule '" + mol.string() + "'");
                m.moleculeTypeId = it->second;
            }
        } else {
            m.moleculeTypeId = static_cast<int>(mol.integer());
            if (m.moleculeTypeId < 0 || (moleculeIds && m.moleculeTypeId >= static_cast<int>(moleculeIds->size())))
                throw SchemaError(mol.path, "molecule index out of range");
        }
        m.localPosition = in.at("position").vec3();
        if (in.has("rotation")) m.rotation = quat_of(in.at("rotation"));
        out.push_back(m);
    }
    return out;
}

template <std::size_t N>
std::array<int, N> colors_of(const Node& n) {
    if (n.size() != N) throw SchemaError(n.path, "expected " + std::to_string(N) + " colors");
    std::array<int, N> c{};
    for (std::size_t i = 0; i < N; ++i) c[i] = static_cast<int>(n.at(i).integer());
    return c;
}

}  // namespace detail

struct TileSets {
    SquareTileSet squares;
    CubeTileSet cubes;
};

/// Tile document. Molecules are referenced by index or by name; `moleculeIds`
/// maps names to indices. Without it the tiles are read for their edges only.
inline TileSets parse_tiles(std::string_view text, const std::map<std::string, int>* moleculeIds = nullptr,
                            const std::string& pathPrefix = "") {
    const json doc = detail::parse_json(text, "tile document");
    const detail::Node root{doc, pathPrefix};
    detail::check_schema(root, kTilesSchema);
    TileSets out;
    if (root.has("square")) {
        const detail::Node sq = root.at("square");
        out.squares.worldSize = sq.at("worldSize").positive();
        const detail::Node list = sq.at("tiles");
        for (std::size_t i = 0; i < list.size(); ++i) {
            WangSquareTile t;
            t.id = static_cast<int>(i);
            t.edgeColors = detail::colors_of<4>(list.at(i).at("edges"));
            t.instances = detail::instances_of(list.at(i), moleculeIds);
            out.squares.tiles.push_back(std::move(t));
        }
    }
    if (root.has("cube")) {
        const detail::Node cb = root.at("cube");
        out.cubes.worldSize = cb.at("worldSize").positive();
        const detail::Node list = cb.at("tiles");
        for (std::size_t i = 0; i < list.size(); ++i) {
            WangCubeTile t;
            t.id = static_cast<int>(i);
            t.faceColors = detail::colors_of<6>(list.at(i).at("faces"));
            t.instances = detail::instances_of(list.at(i), moleculeIds);
            out.cubes.tiles.push_back(std::move(t));
        }
    }
    return out;
}

inline TileSets load_tiles(const fs::path& path, const std::map<std::string, int>* moleculeIds = nullptr) {
    return parse_tiles(read_text_file(path), moleculeIds);
}

/// A recipe document holds either a 2D or a 3D recipe.
struct RecipeFile {
    std::optional<TilingRecipe2D> recipe2d;
    std::optional<TilingRecipe3D> recipe3d;
};

inline RecipeFile parse_recipe(std::string_view text, const std::string& pathPrefix = "") {
    const json doc = detail::parse_json(text, "recipe document");
    const detail::Node root{doc, pathPrefix};
    detail::check_schema(root, kRecipeSchema);
    const detail::Node dims = root.at("dims");
    const std::size_t nd = dims.size();
    if (nd != 2 && nd != 3) throw SchemaError(dims.path, "expected [W, H] or [W, H, D]");
    std::array<int, 3> d{1, 1, 1};
    for (std::size_t a = 0; a < nd; ++a) {
        const long long v = dims.at(a).integer();
        if (v < 1) throw SchemaError(dims.at(a).path, "dimension must be at least 1");
        d[a] = static_cast<int>(v);
    }
    const detail::Node cells = root.at("cells");
    const std::size_t expected = static_cast<std::size_t>(d[0]) * d[1] * d[2];
    if (cells.size() != expected)
        throw SchemaError(cells.path, "expected " + std::to_string(expected) + " cells, got " + std::to_string(cells.size()));
    std::vector<int> c;
    for (std::size_t i = 0; i < expected; ++i) c.push_back(static_cast<int>(cells.at(i).integer()));
    RecipeFile out;
    if (nd == 2) {
        TilingRecipe2D r;
        r.width = d[0];
        r.height = d[1];
        r.cells = std::move(c);
        r.tileUvSize = root.number_or("tileUvSize", 1);
        out.recipe2d = std::move(r);
    } else {
        out.recipe3d = TilingRecipe3D{d[0], d[1], d[2], std::move(c)};
    }
    return out;
}

inline RecipeFile load_recipe(const fs::path& path) { return parse_recipe(read_text_file(path)); }

inline std::string recipe_to_text(const TilingRecipe2D& r) {
    json j{{"schema", kRecipeSchema}, {"dims", {r.width, r.height}}, {"tileUvSize", r.tileUvSize}, {"cells", r.cells}};
    return j.dump() + "\n";
}

inline std::string recipe_to_text(const TilingRecipe3D& r) {
    json j{{"schema", kRecipeSchema}, {"dims", {r.width, r.height, r.depth}}, {"cells", r.cells}};
    return j.dump() + "\n";
}

namespace detail {

/// One instance entry: optional scale, rotate, translate (applied in that
/// order) or a full 3x4 row-major matrix; `grid` replicates the result on a
/// regular lattice.
inline std::vector<Affine> transforms_of(const Node& n) {
    Affine base;
    if (n.has("matrix")) {
        const auto m = n.at("matrix").numbers(12);
        base.linear = Mat3{{m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]}};
        base.translation = {m[3], m[7], m[11]};
    } else {
        if (n.has("scale")) {
            const Node sc = n.at("scale");
            const Vec3 s = sc.value.is_number() ? Vec3{sc.number(), sc.number(), sc.number()} : sc.vec3();
            base = Affine::scale(s) * base;
        }
        if (n.has("rotate")) {
            const Node r = n.at("rotate");
            base = Affine::rotate(Quat::axis_angle(r.at("axis").vec3(), r.at("degrees").number() * kPi / 180)) * base;
        }
        if (n.has("translate")) base = Affine::translate(n.at("translate").vec3()) * base;
    }
    if (std::abs(base.linear.determinant()) <= 1e-12) throw SchemaError(n.path, "singular instance transform");
    if (!n.has("grid")) return {base};
    const Node g = n.at("grid");
    const Node counts = g.at("counts");
    if (counts.size() != 3) throw SchemaError(counts.path, "expected 3 counts");
    std::array<long long, 3> c{};
    for (std::size_t a = 0; a < 3; ++a) {
        c[a] = counts.at(a).integer();
        if (c[a] < 1) throw SchemaError(counts.at(a).path, "count must be at least 1");
    }
    const Vec3 spacing = g.at("spacing").vec3();
    std::vector<Affine> out;
    for (long long k = 0; k < c[2]; ++k)
        for (long long j = 0; j < c[1]; ++j)
            for (long long i = 0; i < c[0]; ++i)
                out.push_back(Affine::translate(hadamard(Vec3{real(i), real(j), real(k)}, spacing)) * base);
    return out;
}

inline RenderMode mode_of(const Node& n) {
    const std::string s = n.string();
    if (s == "shell") return RenderMode::kShell;
    if (s == "core") return RenderMode::kCore;
    if (s == "both") return RenderMode::kBoth;
    throw SchemaError(n.path, "expected shell, core or both");
}

}  // namespace detail

inline RenderMode parse_render_mode(const std::string& s) {
    const json j = s;
    return detail::mode_of({j, "mode"});
}

/// Parses a scene document into build inputs. Relative paths resolve
/// against `baseDir`.
inline SceneInputs parse_scene(std::string_view text, const fs::path& baseDir) {
    const json doc = detail::parse_json(text, "scene document");
    const detail::Node root{doc, ""};
    detail::check_schema(root, kSceneSchema);
    SceneInputs in;
    auto resolve = [&](const detail::Node& n) {
        const fs::path p = n.string();
        const fs::path full = p.is_absolute() ? p : baseDir / p;
        if (!fs::exists(full)) throw MissingFileError(full.string());
        return full;
    };

    std::map<std::string, int> moleculeIds;
    const detail::Node mols = root.at("molecules");
    for (std::size_t i = 0; i < mols.size(); ++i) {
        const detail::Node m = mols.at(i);
        SceneInputs::Molecule mol;
        const std::string name = m.has("name") ? m.at("name").string() : std::string{};
        mol.type = load_pdb(resolve(m.at("pdb")), name);
        mol.color = m.vec3_or("color", mol.color);
        if (!moleculeIds.try_emplace(mol.type.name, static_cast<int>(i)).second)
            throw SchemaError(m.join("name"), "duplicate molecule name '" + mol.type.name + "'");
        in.molecules.push_back(std::move(mol));
    }

    const detail::Node tilesNode = root.at("tiles");
    const fs::path tilesPath = resolve(tilesNode);
    TileSets tiles = parse_tiles(read_text_file(tilesPath), &moleculeIds, tilesPath.filename().string());
    in.squares = std::move(tiles.squares);
    in.cubes = std::move(tiles.cubes);
    in.tileUvSize = root.has("tileUvSize") ? root.at("tileUvSize").positive() : in.tileUvSize;

    if (root.has("recipes")) {
        const detail::Node r = root.at("recipes");
        if (r.has("seed2d")) in.seed2d = static_cast<std::uint64_t>(r.at("seed2d").integer());
        if (r.has("seed3d")) in.seed3d = static_cast<std::uint64_t>(r.at("seed3d").integer());
        if (r.has("recipe2d")) {
            RecipeFile f = load_recipe(resolve(r.at("recipe2d")));
            if (!f.recipe2d) throw SchemaError(r.join("recipe2d"), "expected a 2D recipe");
            in.recipe2d = std::move(f.recipe2d);
        }
        if (r.has("recipe3d")) {
            RecipeFile f = load_recipe(resolve(r.at("recipe3d")));
            if (!f.recipe3d) throw SchemaError(r.join("recipe3d"), "expected a 3D recipe");
            in.recipe3d = std::move(f.recipe3d);
        }
    }

    const detail::Node meshes = root.at("meshes");
    for (std::size_t i = 0; i < meshes.size(); ++i) {
        const detail::Node m = meshes.at(i);
        SceneInputs::Mesh mesh;
        const fs::path objPath = resolve(m.at("obj"));
        mesh.name = m.has("name") ? m.at("name").string() : objPath.stem().string();
        mesh.mesh = load_obj(objPath);
        mesh.shell = m.boolean_or("shell", true);
        mesh.core = m.boolean_or("core", true);
        if (m.has("instances")) {
            const detail::Node list = m.at("instances");
            for (std::size_t k = 0; k < list.size(); ++k)
                for (const Affine& a : detail::transforms_of(list.at(k))) mesh.instances.push_back(a);
        } else {
            mesh.instances.push_back(Affine{});
        }
        in.meshes.push_back(std::move(mesh));
    }

    if (root.has("camera")) {
        const detail::Node c = root.at("camera");
        in.camera.position = c.vec3_or("position", in.camera.position);
        in.camera.forward = c.vec3_or("forward", in.camera.forward);
        in.camera.up = c.vec3_or("up", in.camera.up);
        if (c.has("fovDegrees")) {
            const real fov = c.at("fovDegrees").number();
            if (!(fov > 0 && fov < 180)) throw SchemaError(c.join("fovDegrees"), "expected a value in (0, 180)");
            in.camera.verticalFov = fov * kPi / 180;
        }
        if (c.has("width")) in.camera.width = static_cast<int>(c.at("width").integer());
        if (c.has("height")) in.camera.height = static_cast<int>(c.at("height").integer());
        if (in.camera.width < 1 || in.camera.height < 1) throw SchemaError(c.path, "image size must be positive");
        if (length(in.camera.forward) == 0 || length(cross(in.camera.forward, in.camera.up)) == 0)
            throw SchemaError(c.path, "forward and up must be non-zero and not parallel");
    }
    if (root.has("render")) {
        const detail::Node r = root.at("render");
        RenderConfig& rc = in.render;
        rc.time = r.number_or("time", rc.time);
        rc.jitterAmplitude = r.number_or("jitterAmplitude", rc.jitterAmplitude);
        if (rc.jitterAmplitude < 0) throw SchemaError(r.join("jitterAmplitude"), "must be non-negative");
        rc.useRepLas = r.boolean_or("useRepLas", rc.useRepLas);
        rc.smoothNormals = r.boolean_or("smoothNormals", rc.smoothNormals);
        if (r.has("mode")) rc.mode = detail::mode_of(r.at("mode"));
        rc.background = r.vec3_or("background", rc.background);
        if (r.has("clip")) {
            const detail::Node c = r.at("clip");
            rc.clipPlane.normal = c.at("normal").vec3();
            rc.clipPlane.offset = c.at("offset").number();
            rc.clipPlane.enabled = c.boolean_or("enabled", true);
        }
    }
    return in;
}

inline SceneInputs load_scene_inputs(const fs::path& path) {
    return parse_scene(read_text_file(path), path.parent_path());
}

inline Scene load_scene(const fs::path& path) { return build_scene(load_scene_inputs(path)); }

/// Metadata served to the viewer and printed by `stats`.
inline json scene_info(const Scene& s) {
    json mols = json::array();
    for (const auto& m : s.molecules)
        mols.push_back({{"name", m.type.name}, {"atoms", m.type.atoms.size()}, {"color", {m.color.x, m.color.y, m.color.z}}});
    return {{"bounds", {{"min", {s.bounds.min.x, s.bounds.min.y, s.bounds.min.z}},
                        {"max", {s.bounds.max.x, s.bounds.max.y, s.bounds.max.z}}}},
            {"molecules", mols},
            {"meshInstances", s.instances.size()},
            {"virtualAtomCount", virtual_atom_count(s)}};
}

inline json build_report_json(const BuildReport& r) {
    json grids = json::array(), windows = json::array();
    for (const auto& g : r.coreGridDims) grids.push_back(g);
    for (const auto& w : r.replicationDims) windows.push_back(w);
    return {{"virtualAtomCount", r.virtualAtoms},
            {"molecules", r.moleculeCount},
            {"atoms", r.atomCount},
            {"squareTiles", r.squareTileCount},
            {"cubeTiles", r.cubeTileCount},
            {"meshes", r.meshCount},
            {"meshInstances", r.meshInstanceCount},
            {"prisms", r.prismCount},
            {"activePrisms", r.activePrismCount},
            {"coreGridDims", grids},
            {"replicationDims", windows},
            {"bytes",
             {{"atoms", r.atomBytes},
              {"atomHierarchies", r.atomBvhBytes},
              {"tiles", r.tileBytes},
              {"tileHierarchies", r.tileBvhBytes},
              {"recipes", r.recipeBytes},
              {"meshes", r.meshBytes},
              {"prisms", r.prismBytes},
              {"prismHierarchies", r.prismBvhBytes},
              {"replicationGrids", r.repGridBytes},
              {"triangleHierarchies", r.triangleBvhBytes},
              {"instances", r.instanceBytes},
              {"geometryTotal", r.geometry_bytes()}}}};
}

}  // namespace mesoray
