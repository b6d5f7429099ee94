#pragma once

#include <cctype>
#include <charconv>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mesoray/bvh.hpp"
#include "mesoray/error.hpp"
#include "mesoray/math.hpp"

namespace mesoray {

struct Atom {
    Vec3 center;
    real radius = 1.6;
    std::string element;
};

struct MoleculeMetrics {
    Aabb aabb;
    real height = 0;
    real width = 0;
};

struct MoleculeType {
    int id = 0;
    std::string name;
    std::vector<Atom> atoms;
    Aabb aabb;
    real height = 0;  // extent along y
    real width = 0;   // max extent over x and z
    Vec3 upVector{0, 1, 0};
};

/// Van der Waals radii in angstroms; anything not listed gets 1.60.
inline real vdw_radius(std::string_view element) {
    if (element == "H") return 1.20;
    if (element == "C") return 1.70;
    if (element == "N") return 1.55;
    if (element == "O") return 1.52;
    if (element == "S") return 1.80;
    if (element == "P") return 1.80;
    return 1.60;
}

inline MoleculeMetrics molecule_metrics(const std::vector<Atom>& atoms) {
    MoleculeMetrics m;
    for (const Atom& a : atoms) {
        const Vec3 r{a.radius, a.radius, a.radius};
        m.aabb.expand(Aabb{a.center - r, a.center + r});
    }
    if (m.aabb.is_empty()) return m;
    const Vec3 e = m.aabb.extent();
    m.height = e.y;
    m.width = std::max(e.x, e.z);
    return m;
}

inline MoleculeMetrics molecule_metrics(const MoleculeType& m) { return molecule_metrics(m.atoms); }

/// Fills aabb/height/width from the atoms.
inline void update_metrics(MoleculeType& m) {
    const MoleculeMetrics mm = molecule_metrics(m.atoms);
    m.aabb = mm.aabb;
    m.height = mm.height;
    m.width = mm.width;
}

/// Radius of the smallest origin-centred sphere containing every atom sphere.
inline real bounding_radius(const MoleculeType& m) {
    real r = 0;
    for (const Atom& a : m.atoms) r = std::max(r, length(a.center) + a.radius);
    return r;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::string_view columns(std::string_view line, std::size_t first, std::size_t last) {
    if (line.size() < first) return {};
    return line.substr(first - 1, std::min(line.size(), last) - (first - 1));
}

inline real parse_coordinate(std::string_view field, int lineNo) {
    field = trim(field);
    real v = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(v))
        throw ParseError("malformed coordinate '" + std::string(field) + "'", lineNo);
    return v;
}

}  // namespace detail

/// Reads ATOM/HETATM records of the first model. Coordinates come from the
/// fixed columns 31-54, the element from 77-78 (or the first letter of the
/// atom name). The result is recentred so the atom centroid is the origin.
inline MoleculeType parse_pdb(std::string_view text, std::string name = {}) {
    MoleculeType m;
    m.name = std::move(name);
    int lineNo = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++lineNo;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        const std::string_view record = detail::trim(detail::columns(line, 1, 6));
        if (record == "ENDMDL") break;
        if (record != "ATOM" && record != "HETATM") continue;
        if (line.size() < 54) throw ParseError("truncated " + std::string(record) + " record", lineNo);

        Atom atom;
        atom.center = {detail::parse_coordinate(detail::columns(line, 31, 38), lineNo),
                       detail::parse_coordinate(detail::columns(line, 39, 46), lineNo),
                       detail::parse_coordinate(detail::columns(line, 47, 54), lineNo)};
        std::string element(detail::trim(detail::columns(line, 77, 78)));
        if (element.empty()) {
            for (char c : detail::columns(line, 13, 16))
                if (std::isalpha(static_cast<unsigned char>(c))) {
                    element = std::string(1, c);
                    break;
                }
        }
        for (char& c : element) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        atom.element = element;
        atom.radius = vdw_radius(element);
        m.atoms.push_back(std::move(atom));
    }
    if (m.atoms.empty()) throw Error("molecule '" + m.name + "' has no ATOM/HETATM records");

    Vec3 centroid;
    for (const Atom& a : m.atoms) centroid += a.center;
    centroid = centroid / static_cast<real>(m.atoms.size());
    for (Atom& a : m.atoms) a.center -= centroid;
    update_metrics(m);
    return m;
}

inline std::vector<Aabb> atom_bounds(const MoleculeType& m) {
    std::vector<Aabb> boxes;
    boxes.reserve(m.atoms.size());
    for (const Atom& a : m.atoms) {
        const Vec3 r{a.radius, a.radius, a.radius};
        boxes.push_back({a.center - r, a.center + r});
    }
    return boxes;
}

inline Bvh build_atom_bvh(const MoleculeType& m) { return build_bvh(atom_bounds(m)); }

/// Closest atom along `ray` (molecule object space).
inline std::optional<BvhHit> intersect_atoms(const MoleculeType& m, const Bvh& bvh, const Ray& ray) {
    return bvh_traverse(bvh, ray, [&](std::uint32_t i, const Ray& r) {
        return ray_sphere(r, m.atoms[i].center, m.atoms[i].radius);
    });
}

}  // namespace mesoray
