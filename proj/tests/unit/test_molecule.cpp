#include <gtest/gtest.h>

#include <cstdio>

#include "mesoray/molecule.hpp"

using namespace mesoray;

namespace {

std::string atom_line(int serial, const char* name, real x, real y, real z, const char* element) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "ATOM  %5d %-4s ALA A   1    %8.3f%8.3f%8.3f  1.00  0.00          %2s\n", serial,
                  name, x, y, z, element);
    return buf;
}

}  // namespace

TEST(Pdb, ParsesFixedColumnsAndRecentres) {
    const std::string text = "HEADER    TEST\n" + atom_line(1, "N", 1, 2, 3, "N") + atom_line(2, "CA", 3, 2, 3, "C") +
                             "TER\nEND\n";
    const MoleculeType m = parse_pdb(text, "pair");
    ASSERT_EQ(m.atoms.size(), 2u);
    EXPECT_EQ(m.name, "pair");
    EXPECT_EQ(m.atoms[0].element, "N");
    EXPECT_DOUBLE_EQ(m.atoms[0].radius, 1.55);
    EXPECT_DOUBLE_EQ(m.atoms[1].radius, 1.70);
    EXPECT_NEAR(m.atoms[0].center.x, -1, 1e-12);
    EXPECT_NEAR(m.atoms[1].center.x, 1, 1e-12);
    EXPECT_NEAR(m.atoms[0].center.y, 0, 1e-12);
}

TEST(Pdb, ElementFallsBackToAtomName) {
    const MoleculeType m = parse_pdb(atom_line(1, "OG", 0, 0, 0, ""), "x");
    EXPECT_EQ(m.atoms[0].element, "O");
    EXPECT_DOUBLE_EQ(m.atoms[0].radius, 1.52);
}

TEST(Pdb, UnknownElementGetsDefaultRadius) {
    const MoleculeType m = parse_pdb(atom_line(1, "FE", 0, 0, 0, "FE"), "x");
    EXPECT_DOUBLE_EQ(m.atoms[0].radius, 1.60);
}

TEST(Pdb, HetatmIncludedAndOnlyFirstModelRead) {
    std::string het = atom_line(2, "O", 5, 0, 0, "O");
    het.replace(0, 6, "HETATM");
    const std::string text =
        "MODEL        1\n" + atom_line(1, "C", 0, 0, 0, "C") + het + "ENDMDL\nMODEL        2\n" +
        atom_line(3, "C", 9, 9, 9, "C") + "ENDMDL\n";
    EXPECT_EQ(parse_pdb(text, "x").atoms.size(), 2u);
}

TEST(Pdb, Errors) {
    EXPECT_THROW(parse_pdb("HEADER only\nEND\n", "x"), Error);
    EXPECT_THROW(parse_pdb("ATOM      1  C   ALA A   1       1.000\n", "x"), ParseError);
    std::string bad = atom_line(1, "C", 0, 0, 0, "C");
    bad.replace(30, 8, "  abc.de");
    EXPECT_THROW(parse_pdb(bad, "x"), ParseError);
}

TEST(Molecule, MetricsFromAtoms) {
    MoleculeType m;
    m.atoms = {{{0, 0, 0}, 1, "C"}, {{2, 1, 0}, 1, "C"}};
    update_metrics(m);
    EXPECT_EQ(m.aabb, (Aabb{{-1, -1, -1}, {3, 2, 1}}));
    EXPECT_DOUBLE_EQ(m.height, 3);
    EXPECT_DOUBLE_EQ(m.width, 4);
    EXPECT_DOUBLE_EQ(bounding_radius(m), std::sqrt(5.0) + 1);
}

TEST(Molecule, IntersectAtomsPicksClosest) {
    MoleculeType m;
    m.atoms = {{{0, 0, 5}, 1, "C"}, {{0, 0, 0}, 1, "C"}, {{3, 0, 0}, 1, "C"}};
    update_metrics(m);
    const Bvh bvh = build_atom_bvh(m);
    const auto hit = intersect_atoms(m, bvh, Ray{{0, 0, -10}, {0, 0, 1}});
    ASSERT_TRUE(hit);
    EXPECT_EQ(hit->primitive, 1u);
    EXPECT_DOUBLE_EQ(hit->t, 9);
    EXPECT_FALSE(intersect_atoms(m, bvh, Ray{{10, 10, -10}, {0, 0, 1}}));
}
