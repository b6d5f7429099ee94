#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mesoray/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kData = MESORAY_DATA_DIR;
const std::string kCli = MESORAY_CLI;

struct Result {
    int code = -1;
    std::string out;
};

/// Runs the command-line tool with stdout captured and stderr discarded.
Result run(const std::string& args) {
    const std::string cmd = "'" + kCli + "' " + args + " 2>/dev/null";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf{};
    while (std::size_t n = fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("mesoray-cli-" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

}  // namespace

TEST(Cli, RenderMinimalSceneWritesPixmap) {
    const fs::path out = scratch_dir("render") / "out.ppm";
    const Result r = run("render " + quoted(kData / "minimal" / "scene.json") + " -o " + quoted(out));
    EXPECT_EQ(r.code, 0);
    ASSERT_TRUE(fs::exists(out));
    const mesoray::Image img = mesoray::read_ppm(out);
    EXPECT_EQ(img.width, 32);
    EXPECT_EQ(img.height, 32);
    std::ifstream in(out, std::ios::binary);
    std::string header(13, '\0');
    in.read(header.data(), 13);
    EXPECT_EQ(header, "P6\n32 32\n255\n");
}

TEST(Cli, RenderOptionsOverrideScene) {
    const fs::path dir = scratch_dir("options");
    const std::string scene = quoted(kData / "minimal" / "scene.json");
    ASSERT_EQ(run("render " + scene + " -o " + quoted(dir / "a.ppm") + " --width 20 --height 10 --threads 2").code, 0);
    const mesoray::Image img = mesoray::read_ppm(dir / "a.ppm");
    EXPECT_EQ(img.width, 20);
    EXPECT_EQ(img.height, 10);
    ASSERT_EQ(run("render " + scene + " -o " + quoted(dir / "b.ppm") + " --width 20 --height 10 --no-replas").code, 0);
    EXPECT_EQ(mesoray::read_ppm(dir / "b.ppm"), img);
    ASSERT_EQ(run("render " + scene + " -o " + quoted(dir / "c.ppm") + " --clip 0,1,0,100").code, 0);
    const mesoray::Image clipped = mesoray::read_ppm(dir / "c.ppm");
    for (std::size_t i = 3; i < clipped.rgb.size(); ++i) EXPECT_EQ(clipped.rgb[i], clipped.rgb[i % 3]);
}

TEST(Cli, RenderIsByteIdenticalAcrossRuns) {
    const fs::path dir = scratch_dir("golden");
    const std::string scene = quoted(kData / "micro-cell" / "scene.json");
    ASSERT_EQ(run("render " + scene + " -o " + quoted(dir / "a.ppm") + " --width 64 --height 64").code, 0);
    ASSERT_EQ(run("render " + scene + " -o " + quoted(dir / "b.ppm") + " --width 64 --height 64").code, 0);
    EXPECT_EQ(mesoray::read_text_file(dir / "a.ppm"), mesoray::read_text_file(dir / "b.ppm"));
}

TEST(Cli, StatsOnBoxScene) {
    const Result r = run("stats " + quoted(kData / "box512" / "scene.json"));
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("virtual atom count: 51200"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("core grid dims: 8x8x8"), std::string::npos) << r.out;
    const Result j = run("stats --json " + quoted(kData / "box512" / "scene.json"));
    EXPECT_EQ(j.code, 0);
    EXPECT_EQ(nlohmann::json::parse(j.out)["virtualAtomCount"].get<long long>(), 51200);
}

TEST(Cli, ValidateFixtures) {
    for (const char* scene : {"minimal/scene.json", "box512/scene.json", "micro-cell/scene.json"}) {
        const Result r = run("validate " + quoted(kData / scene));
        EXPECT_EQ(r.code, 0) << scene << ": " << r.out;
        EXPECT_EQ(r.out, "OK\n");
    }
}

TEST(Cli, ValidateCorruptFixturesFails) {
    const Result bad = run("validate " + quoted(kData / "corrupt" / "bad-recipe-scene.json"));
    EXPECT_EQ(bad.code, 1);
    EXPECT_NE(bad.out.find("adjacency violation"), std::string::npos) << bad.out;
    const Result degenerate = run("validate " + quoted(kData / "corrupt" / "degenerate-scene.json"));
    EXPECT_EQ(degenerate.code, 1);
    EXPECT_NE(degenerate.out.find("degenerate"), std::string::npos) << degenerate.out;
    EXPECT_EQ(run("validate " + quoted(kData / "corrupt" / "missing-pdb-scene.json")).code, 1);
}

TEST(Cli, RecipeGenerationIsValidAndSeeded) {
    const fs::path dir = scratch_dir("recipe");
    const std::string tiles = quoted(kData / "micro-cell" / "tiles.json");
    ASSERT_EQ(run("recipe-gen " + tiles + " --dims 6x5 --seed 3 -o " + quoted(dir / "a.json")).code, 0);
    ASSERT_EQ(run("recipe-gen " + tiles + " --dims 6x5 --seed 3 -o " + quoted(dir / "b.json")).code, 0);
    ASSERT_EQ(run("recipe-gen " + tiles + " --dims 3x3x2 --seed 3 -o " + quoted(dir / "c.json")).code, 0);
    EXPECT_EQ(mesoray::read_text_file(dir / "a.json"), mesoray::read_text_file(dir / "b.json"));
    const auto sets = mesoray::load_tiles(kData / "micro-cell" / "tiles.json");
    const auto r2 = mesoray::load_recipe(dir / "a.json");
    ASSERT_TRUE(r2.recipe2d);
    EXPECT_EQ(r2.recipe2d->width, 6);
    EXPECT_EQ(mesoray::check_recipe(*r2.recipe2d, sets.squares.tiles), "");
    const auto r3 = mesoray::load_recipe(dir / "c.json");
    ASSERT_TRUE(r3.recipe3d);
    EXPECT_EQ(mesoray::check_recipe(*r3.recipe3d, sets.cubes.tiles), "");
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run("").code, 2);
    EXPECT_EQ(run("frobnicate").code, 2);
    EXPECT_EQ(run("--help").code, 0);
    EXPECT_EQ(run("render").code, 2);
    const std::string scene = quoted(kData / "minimal" / "scene.json");
    const std::string out = quoted(scratch_dir("codes") / "x.ppm");
    EXPECT_EQ(run("render " + scene + " -o " + out + " --clip 1,2").code, 2);
    EXPECT_EQ(run("render " + scene + " -o " + out + " --mode sideways").code, 2);
    EXPECT_EQ(run("render " + scene + " -o " + out + " --width 0").code, 2);
    EXPECT_EQ(run("recipe-gen " + quoted(kData / "micro-cell" / "tiles.json") + " --dims 3 -o " + out).code, 2);
    EXPECT_EQ(run("render " + quoted(kData / "nope.json") + " -o " + out).code, 1);
    EXPECT_EQ(run("render " + scene + " -o /nonexistent-dir/x.ppm").code, 1);
}
