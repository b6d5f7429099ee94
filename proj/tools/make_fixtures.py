#!/usr/bin/env python3
"""Generates the fixture scenes under data/.

Everything is deterministic (fixed seeds), so re-running the script
reproduces the committed files byte for byte.

  data/micro-cell/   icosphere compartment, 3 molecules, 4+4 Wang tiles
  data/box512/       8x8x8 core grid, 100 atoms per cube tile
  data/minimal/      one quad, one tile, one molecule
  data/corrupt/      scenes that `validate` must reject
"""

import json
import math
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "data"

ELEMENTS = ["C", "C", "C", "N", "O", "S", "H"]
VDW = {"H": 1.20, "C": 1.70, "N": 1.55, "O": 1.52, "S": 1.80, "P": 1.80}


def write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def write_json(path: Path, doc) -> None:
    write(path, json.dumps(doc, indent=2) + "\n")


# --------------------------------------------------------------------------
# molecules


def pdb_line(serial: int, element: str, x: float, y: float, z: float) -> str:
    name = f" {element:<3}"
    return (f"ATOM  {serial:5d} {name:4s} ALA A{1:4d}    "
            f"{x:8.3f}{y:8.3f}{z:8.3f}{1.0:6.2f}{0.0:6.2f}          {element:>2s}\n")


def make_molecule(n_atoms: int, spread: float, rng: random.Random, elongate=(1.0, 1.0, 1.0)) -> str:
    """Random-walk cluster: each atom bonds to an earlier one at ~1.5 A."""
    atoms = [(0.0, 0.0, 0.0)]
    while len(atoms) < n_atoms:
        bx, by, bz = atoms[rng.randrange(len(atoms))]
        theta = rng.uniform(0, 2 * math.pi)
        zc = rng.uniform(-1, 1)
        r = math.sqrt(1 - zc * zc)
        d = 1.5
        p = (bx + d * r * math.cos(theta) * elongate[0], by + d * zc * elongate[1],
             bz + d * r * math.sin(theta) * elongate[2])
        if math.dist(p, (0, 0, 0)) > spread:
            continue
        atoms.append(p)
    lines = ["HEADER    FIXTURE MOLECULE\n"]
    for i, (x, y, z) in enumerate(atoms):
        lines.append(pdb_line(i + 1, ELEMENTS[rng.randrange(len(ELEMENTS))], x, y, z))
    lines.append("END\n")
    return "".join(lines)


# --------------------------------------------------------------------------
# meshes


def icosphere(radius: float):
    """Icosahedron subdivided once: 42 vertices, 80 triangles, CCW outward."""
    phi = (1 + 5 ** 0.5) / 2
    verts = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
             (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
             (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
             (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
             (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
             (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [normalized(v) for v in verts]
    cache = {}

    def midpoint(a, b):
        key = (min(a, b), max(a, b))
        if key not in cache:
            va, vb = verts[a], verts[b]
            verts.append(normalized(((va[0] + vb[0]) / 2, (va[1] + vb[1]) / 2, (va[2] + vb[2]) / 2)))
            cache[key] = len(verts) - 1
        return cache[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
    return [tuple(radius * x for x in v) for v in verts], out


def normalized(v):
    n = math.sqrt(sum(x * x for x in v))
    return tuple(x / n for x in v)


def sub(a, b):
    return tuple(x - y for x, y in zip(a, b))


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


def isometric_atlas(verts, faces, slots: int, margin: float):
    """Per-triangle charts: each triangle is laid flat (edge 0->1 along +u,
    CCW preserved) in its own atlas slot with one shared uv-per-unit scale.
    Returns (uvs per corner, uv-per-unit)."""
    flat = []
    extent = 0.0
    for a, b, c in faces:
        pa, pb, pc = verts[a], verts[b], verts[c]
        e1, e2 = sub(pb, pa), sub(pc, pa)
        l1 = math.sqrt(dot(e1, e1))
        x = tuple(v / l1 for v in e1)
        n = normalized(cross(e1, e2))
        y = cross(n, x)
        pts = [(0.0, 0.0), (l1, 0.0), (dot(e2, x), dot(e2, y))]
        mu = min(p[0] for p in pts)
        pts = [(p[0] - mu, p[1]) for p in pts]
        extent = max(extent, max(p[0] for p in pts), max(p[1] for p in pts))
        flat.append(pts)
    slot = 1.0 / slots
    k = slot * (1 - 2 * margin) / extent
    uvs = []
    for i, pts in enumerate(flat):
        ox = (i % slots) * slot + margin * slot
        oy = (i // slots) * slot + margin * slot
        uvs.append([(ox + p[0] * k, oy + p[1] * k) for p in pts])
    return uvs, k


def write_obj_charted(path: Path, verts, faces, uvs, smooth=True, comment=""):
    lines = [f"# {comment}\n"] if comment else []
    for v in verts:
        lines.append(f"v {v[0]:.9f} {v[1]:.9f} {v[2]:.9f}\n")
    for tri in uvs:
        for u, v in tri:
            lines.append(f"vt {u:.9f} {v:.9f}\n")
    if smooth:
        for v in verts:
            n = normalized(v)
            lines.append(f"vn {n[0]:.9f} {n[1]:.9f} {n[2]:.9f}\n")
    for i, (a, b, c) in enumerate(faces):
        t = 3 * i + 1
        if smooth:
            lines.append(f"f {a + 1}/{t}/{a + 1} {b + 1}/{t + 1}/{b + 1} {c + 1}/{t + 2}/{c + 1}\n")
        else:
            lines.append(f"f {a + 1}/{t} {b + 1}/{t + 1} {c + 1}/{t + 2}\n")
    write(path, "".join(lines))


def box_obj(half: float) -> str:
    """Axis-aligned cube, outward CCW faces, one uv square per face."""
    corners = [(x, y, z) for z in (-half, half) for y in (-half, half) for x in (-half, half)]
    idx = {c: i + 1 for i, c in enumerate(corners)}
    quads = [((-1, -1, 1), (1, -1, 1), (1, 1, 1), (-1, 1, 1)),      # +z
             ((1, -1, -1), (-1, -1, -1), (-1, 1, -1), (1, 1, -1)),  # -z
             ((1, -1, 1), (1, -1, -1), (1, 1, -1), (1, 1, 1)),      # +x
             ((-1, -1, -1), (-1, -1, 1), (-1, 1, 1), (-1, 1, -1)),  # -x
             ((-1, 1, 1), (1, 1, 1), (1, 1, -1), (-1, 1, -1)),      # +y
             ((-1, -1, -1), (1, -1, -1), (1, -1, 1), (-1, -1, 1))]  # -y
    lines = [f"v {c[0]} {c[1]} {c[2]}\n" for c in corners]
    lines += ["vt 0 0\n", "vt 1 0\n", "vt 1 1\n", "vt 0 1\n"]
    for q in quads:
        ids = [idx[tuple(half * s for s in c)] for c in q]
        lines.append("f " + " ".join(f"{v}/{t + 1}" for t, v in enumerate(ids)) + "\n")
    return "".join(lines)


# --------------------------------------------------------------------------
# tiles


def rand_quat(rng: random.Random):
    u1, u2, u3 = rng.random(), rng.random(), rng.random()
    q = (math.sqrt(1 - u1) * math.sin(2 * math.pi * u2), math.sqrt(1 - u1) * math.cos(2 * math.pi * u2),
         math.sqrt(u1) * math.sin(2 * math.pi * u3), math.sqrt(u1) * math.cos(2 * math.pi * u3))
    return [round(x, 6) for x in q]


def place(rng, count, molecules, radii, bounds, existing=None):
    """Rejection-samples collision-free instance centres (bounding spheres
    may not overlap) inside `bounds` = ((x0,x1),(y0,y1),(z0,z1))."""
    out = list(existing or [])
    placed = []
    tries = 0
    while len(placed) < count:
        tries += 1
        if tries > 200000:
            raise RuntimeError("could not place instances")
        if tries % 2000 == 0:
            placed = []  # dead end: start the set over
        m = molecules[rng.randrange(len(molecules))]
        r = radii[m]
        p = [round(rng.uniform(lo + r, hi - r) if hi - lo > 2 * r else (lo + hi) / 2, 3) for lo, hi in bounds]
        if any(math.dist(p, q["position"]) < r + radii[q["molecule"]] for q in out + placed):
            continue
        placed.append({"molecule": m, "position": p, "rotation": rand_quat(rng)})
    return placed


def bounding_radius(pdb_text: str) -> float:
    pts = []
    for line in pdb_text.splitlines():
        if line.startswith("ATOM"):
            pts.append((float(line[30:38]), float(line[38:46]), float(line[46:54]), line[76:78].strip()))
    cx = sum(p[0] for p in pts) / len(pts)
    cy = sum(p[1] for p in pts) / len(pts)
    cz = sum(p[2] for p in pts) / len(pts)
    return max(math.dist((p[0], p[1], p[2]), (cx, cy, cz)) + VDW.get(p[3], 1.6) for p in pts)


# Complete 2-colour square set over (W, S): N, E, S, W.
SQUARE_EDGES = [[0, 1, 0, 0], [1, 0, 1, 0], [1, 1, 0, 1], [0, 0, 1, 1]]
# Complete 2-colour cube set over (-x, -y) with z colours fixed to 0:
# +x, -x, +y, -y, +z, -z.
CUBE_FACES = [[1, 0, 0, 0, 0, 0], [0, 0, 1, 1, 0, 0], [0, 1, 1, 0, 0, 0], [1, 1, 0, 1, 0, 0]]


def micro_cell():
    out = ROOT / "micro-cell"
    rng = random.Random(20240521)
    specs = [("lipid", 10, 3.5, (0.6, 1.6, 0.6), [0.95, 0.80, 0.30]),
             ("channel", 25, 5.0, (1.0, 1.3, 1.0), [0.30, 0.65, 0.95]),
             ("enzyme", 50, 6.5, (1.0, 1.0, 1.0), [0.90, 0.35, 0.40])]
    radii = {}
    for name, n, spread, el, _ in specs:
        text = make_molecule(n, spread, rng, el)
        write(out / "molecules" / f"{name}.pdb", text)
        radii[name] = bounding_radius(text)

    verts, faces = icosphere(100.0)
    uvs, k = isometric_atlas(verts, faces, slots=9, margin=0.02)
    write_obj_charted(out / "icosphere.obj", verts, faces, uvs, comment="icosphere compartment, per-triangle charts")

    s_square, s_cube = 24.0, 25.0
    h = s_square / 2
    squares = []
    for edges in SQUARE_EDGES:
        inst = place(rng, 4, ["lipid", "lipid", "channel"], radii, ((-h, h), (-1.0, 1.0), (-h, h)))
        squares.append({"edges": edges, "instances": inst})
    hc = s_cube / 2
    cubes = []
    for faces_c in CUBE_FACES:
        inst = place(rng, 4, ["enzyme", "channel"], radii, ((-hc, hc), (-hc, hc), (-hc, hc)))
        cubes.append({"faces": faces_c, "instances": inst})
    tiles = {"schema": "mesoray-tiles/1", "square": {"worldSize": s_square, "tiles": squares},
             "cube": {"worldSize": s_cube, "tiles": cubes}}
    write_json(out / "tiles.json", tiles)

    molecules = [{"name": n, "pdb": f"molecules/{n}.pdb", "color": c} for n, _, _, _, c in specs]
    tile_uv = round(s_square * k, 9)
    scene = {
        "schema": "mesoray-scene/1",
        "molecules": molecules,
        "tiles": "tiles.json",
        "tileUvSize": tile_uv,
        "recipes": {"seed2d": 7, "seed3d": 11},
        "meshes": [{"name": "cell", "obj": "icosphere.obj", "shell": True, "core": True, "instances": [{}]}],
        "camera": {"position": [60, 120, 330], "forward": [-60, -120, -330], "up": [0, 1, 0],
                   "fovDegrees": 40, "width": 256, "height": 256},
        "render": {"mode": "both", "useRepLas": True, "background": [0.08, 0.08, 0.1]},
    }
    write_json(out / "scene.json", scene)

    many = json.loads(json.dumps(scene))
    many["meshes"][0]["instances"] = [{"translate": [-1125, -1125, 0],
                                       "grid": {"counts": [10, 10, 1], "spacing": [250, 250, 0]}}]
    many["camera"] = {"position": [0, 0, 3600], "forward": [0, 0, -1], "up": [0, 1, 0],
                      "fovDegrees": 40, "width": 256, "height": 256}
    write_json(out / "scene-100.json", many)
    return tiles


def box512():
    out = ROOT / "box512"
    rng = random.Random(512)
    text = make_molecule(50, 6.5, rng)
    write(out / "molecules" / "block.pdb", text)
    r = bounding_radius(text)
    write(out / "box.obj", box_obj(100.0))
    s = 25.0
    cubes = []
    for faces in CUBE_FACES:
        inst = [{"molecule": "block", "position": [-s / 4, -s / 4, 0], "rotation": [1, 0, 0, 0]},
                {"molecule": "block", "position": [s / 4, s / 4, 0], "rotation": [1, 0, 0, 0]}]
        assert s / 2 > r
        cubes.append({"faces": faces, "instances": inst})
    write_json(out / "tiles.json", {"schema": "mesoray-tiles/1", "cube": {"worldSize": s, "tiles": cubes}})
    write_json(out / "scene.json", {
        "schema": "mesoray-scene/1",
        "molecules": [{"name": "block", "pdb": "molecules/block.pdb", "color": [0.4, 0.8, 0.5]}],
        "tiles": "tiles.json",
        "meshes": [{"name": "box", "obj": "box.obj", "shell": False, "core": True}],
        "camera": {"position": [0, 0, 50], "forward": [0, 0, -1], "up": [0, 1, 0], "fovDegrees": 60,
                   "width": 64, "height": 64},
    })


def minimal():
    out = ROOT / "minimal"
    text = "".join([pdb_line(1, "C", 0, 0, 0), pdb_line(2, "O", 1.2, 0, 0), "END\n"])
    write(out / "atom.pdb", text)
    write(out / "quad.obj", "v -10 0 -10\nv 10 0 -10\nv 10 0 10\nv -10 0 10\n"
                            "vt 0 1\nvt 1 1\nvt 1 0\nvt 0 0\nvn 0 1 0\n"
                            "f 4/4/1 3/3/1 2/2/1 1/1/1\n")
    write_json(out / "tiles.json", {"schema": "mesoray-tiles/1", "square": {"worldSize": 20, "tiles": [
        {"edges": [0, 0, 0, 0], "instances": [{"molecule": 0, "position": [0, 2, 0]}]}]}})
    write_json(out / "scene.json", {
        "schema": "mesoray-scene/1",
        "molecules": [{"name": "pair", "pdb": "atom.pdb", "color": [1, 1, 1]}],
        "tiles": "tiles.json",
        "tileUvSize": 1.0,
        "meshes": [{"obj": "quad.obj", "shell": True, "core": False}],
        "camera": {"position": [0, 30, 0.001], "forward": [0, -1, 0], "up": [0, 0, -1], "fovDegrees": 30,
                   "width": 32, "height": 32},
    })


def corrupt(tiles):
    out = ROOT / "corrupt"
    cell = ROOT / "micro-cell"
    base = json.loads((cell / "scene.json").read_text())
    for m in base["molecules"]:
        m["pdb"] = "../micro-cell/" + m["pdb"]
    base["tiles"] = "../micro-cell/tiles.json"

    # 1. Recipe with an adjacency violation: every cell tile 0, whose east
    #    edge (1) never meets its own west edge (0).
    n = math.ceil(1 / base["tileUvSize"] - 1e-9) + 2
    write_json(out / "bad-recipe.json", {"schema": "mesoray-recipe/1", "dims": [n, n],
                                         "tileUvSize": base["tileUvSize"], "cells": [0] * (n * n)})
    bad = json.loads(json.dumps(base))
    bad["meshes"][0]["obj"] = "../micro-cell/icosphere.obj"
    bad["recipes"] = {"recipe2d": "bad-recipe.json", "seed3d": 11}
    write_json(out / "bad-recipe-scene.json", bad)

    # 2. A degenerate (zero-area) proxy triangle gives a degenerate prism.
    write(out / "degenerate.obj", "v 0 0 0\nv 10 0 0\nv 0 0 -10\nv 20 0 0\n"
                                  "vt 0 0\nvt 0.5 0\nvt 0 0.5\nvt 0.9 0\nvn 0 1 0\n"
                                  "f 1/1/1 2/2/1 3/3/1\nf 1/1/1 2/2/1 4/4/1\n")
    deg = json.loads(json.dumps(base))
    deg["meshes"] = [{"name": "degenerate", "obj": "degenerate.obj", "shell": True, "core": False}]
    write_json(out / "degenerate-scene.json", deg)

    # 3. Missing molecule file.
    missing = json.loads(json.dumps(base))
    missing["meshes"][0]["obj"] = "../micro-cell/icosphere.obj"
    missing["molecules"][0]["pdb"] = "molecules/does-not-exist.pdb"
    write_json(out / "missing-pdb-scene.json", missing)


if __name__ == "__main__":
    t = micro_cell()
    box512()
    minimal()
    corrupt(t)
    print("fixtures written to", ROOT)
