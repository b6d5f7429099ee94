// Command-line front end: render, stats, recipe-gen, validate, serve.
//
// Exit codes: 0 success, 1 validation/render failure, 2 usage error.

#include <csignal>
#include <fstream>
#include <iostream>
#include <regex>
#include <string>

#include <CLI11.hpp>

#include "mesoray/io.hpp"
#include "mesoray/renderer.hpp"
#include "mesoray/scene.hpp"
#include "mesoray/server.hpp"

namespace {

using namespace mesoray;

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ClipPlane parse_clip(const std::string& text) {
    const std::regex number(R"(\s*([-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?)\s*)");
    std::vector<real> v;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string part = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        if (!std::regex_match(part, number)) throw UsageError("--clip expects nx,ny,nz,offset");
        v.push_back(std::stod(part));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (v.size() != 4) throw UsageError("--clip expects nx,ny,nz,offset");
    ClipPlane c{{v[0], v[1], v[2]}, v[3], true};
    if (length(c.normal) == 0) throw UsageError("--clip normal must be non-zero");
    return c;
}

std::vector<int> parse_dims(const std::string& text) {
    const std::regex pattern(R"((\d+)x(\d+)(?:x(\d+))?)");
    std::smatch m;
    if (!std::regex_match(text, m, pattern)) throw UsageError("--dims expects WxH or WxHxD");
    std::vector<int> d{std::stoi(m[1]), std::stoi(m[2])};
    if (m[3].matched) d.push_back(std::stoi(m[3]));
    for (int x : d)
        if (x < 1) throw UsageError("--dims entries must be at least 1");
    return d;
}

void print_stats(const Scene& s, bool asJson) {
    const BuildReport r = build_report(s);
    if (asJson) {
        std::cout << build_report_json(r).dump(2) << "\n";
        return;
    }
    std::cout << "virtual atom count: " << r.virtualAtoms << "\n"
              << "molecules: " << r.moleculeCount << " (" << r.atomCount << " atoms)\n"
              << "tiles: " << r.squareTileCount << " square, " << r.cubeTileCount << " cube\n"
              << "meshes: " << r.meshCount << ", mesh instances: " << r.meshInstanceCount << "\n"
              << "prisms: " << r.prismCount << " (" << r.activePrismCount << " with content)\n";
    for (std::size_t i = 0; i < r.coreGridDims.size(); ++i)
        std::cout << "core grid dims: " << r.coreGridDims[i][0] << "x" << r.coreGridDims[i][1] << "x"
                  << r.coreGridDims[i][2] << "\n";
    for (std::size_t i = 0; i < r.replicationDims.size(); ++i)
        std::cout << "replication area dims: " << r.replicationDims[i][0] << "x" << r.replicationDims[i][1] << "\n";
    std::cout << "bytes:\n"
              << "  atoms                 " << r.atomBytes << "\n"
              << "  atom hierarchies      " << r.atomBvhBytes << "\n"
              << "  tiles                 " << r.tileBytes << "\n"
              << "  tile hierarchies      " << r.tileBvhBytes << "\n"
              << "  recipes               " << r.recipeBytes << "\n"
              << "  meshes                " << r.meshBytes << "\n"
              << "  prisms                " << r.prismBytes << "\n"
              << "  prism hierarchies     " << r.prismBvhBytes << "\n"
              << "  replication grids     " << r.repGridBytes << "\n"
              << "  triangle hierarchies  " << r.triangleBvhBytes << "\n"
              << "  geometry total        " << r.geometry_bytes() << "\n"
              << "  mesh instance table   " << r.instanceBytes << "\n";
}

FrameServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) std::thread([] { g_server->stop(); }).detach();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Virtual-instancing molecular ray tracer"};
    app.require_subcommand(1);

    std::string scenePath, output, clip, mode = "both", dims, tilesPath, staticDir;
    int width = 0, height = 0, threads = 0, port = 8080;
    double time = 0, jitter = -1;
    bool noRepLas = false, smooth = false, asJson = false;
    std::uint64_t seed = 1;

    auto* render = app.add_subcommand("render", "Render a scene to a binary pixmap");
    render->add_option("scene", scenePath, "Scene file")->required();
    render->add_option("-o,--output", output, "Output image (.ppm)")->required();
    render->add_option("--width", width, "Image width")->check(CLI::Range(1, kMaxFrameDimension));
    render->add_option("--height", height, "Image height")->check(CLI::Range(1, kMaxFrameDimension));
    render->add_option("--time", time, "Animation time in seconds");
    render->add_option("--jitter", jitter, "Jitter amplitude in radians")->check(CLI::NonNegativeNumber);
    render->add_option("--clip", clip, "Clipping plane nx,ny,nz,offset");
    render->add_flag("--no-replas", noRepLas, "Walk replication areas tile by tile");
    render->add_flag("--smooth-normals", smooth, "Orient shell instances by interpolated normals");
    render->add_option("--mode", mode, "shell, core or both")->check(CLI::IsMember({"shell", "core", "both"}));
    render->add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);

    auto* stats = app.add_subcommand("stats", "Print scene statistics");
    stats->add_option("scene", scenePath, "Scene file")->required();
    stats->add_flag("--json", asJson, "Machine-readable output");

    auto* recipe = app.add_subcommand("recipe-gen", "Generate a Wang tiling recipe");
    recipe->add_option("tileset", tilesPath, "Tile file")->required();
    recipe->add_option("--dims", dims, "WxH (square tiles) or WxHxD (cube tiles)")->required();
    recipe->add_option("--seed", seed, "Random seed");
    recipe->add_option("-o,--output", output, "Output recipe file")->required();

    auto* validate = app.add_subcommand("validate", "Check scene invariants");
    validate->add_option("scene", scenePath, "Scene file")->required();

    auto* serve = app.add_subcommand("serve", "Serve frames over HTTP and WebSocket");
    serve->add_option("scene", scenePath, "Scene file")->required();
    serve->add_option("--port", port, "TCP port")->check(CLI::Range(0, 65535));
    serve->add_option("--static", staticDir, "Directory with viewer assets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*render) {
            RenderConfig config;
            std::optional<ClipPlane> clipPlane;
            if (!clip.empty()) clipPlane = parse_clip(clip);
            Scene s = load_scene(scenePath);
            config = s.render;
            Camera camera = s.camera;
            if (width) camera.width = width;
            if (height) camera.height = height;
            if (render->count("--time")) config.time = time;
            if (jitter >= 0) config.jitterAmplitude = jitter;
            if (clipPlane) config.clipPlane = *clipPlane;
            if (noRepLas) config.useRepLas = false;
            if (smooth) config.smoothNormals = true;
            if (render->count("--mode")) config.mode = parse_render_mode(mode);
            const Framebuffer fb = render_frame(s, camera, config, nullptr, threads);
            write_ppm(to_image(fb), output);
            return kOk;
        }
        if (*stats) {
            print_stats(load_scene(scenePath), asJson);
            return kOk;
        }
        if (*recipe) {
            const std::vector<int> d = parse_dims(dims);
            const TileSets tiles = load_tiles(tilesPath);
            std::string text;
            if (d.size() == 2) {
                if (tiles.squares.tiles.empty()) throw UsageError("tile file has no square tiles");
                text = recipe_to_text(generate_recipe_2d(tiles.squares.tiles, d[0], d[1], seed));
            } else {
                if (tiles.cubes.tiles.empty()) throw UsageError("tile file has no cube tiles");
                text = recipe_to_text(generate_recipe_3d(tiles.cubes.tiles, d[0], d[1], d[2], seed));
            }
            std::ofstream out(output, std::ios::binary);
            if (!out || !(out << text)) throw Error("cannot write '" + output + "'");
            return kOk;
        }
        if (*validate) {
            const Scene s = load_scene(scenePath);
            const auto issues = validate_scene(s);
            for (const auto& issue : issues) std::cout << "FAIL " << issue << "\n";
            if (!issues.empty()) return kFailure;
            std::cout << "OK\n";
            return kOk;
        }
        if (*serve) {
            const Scene s = load_scene(scenePath);
            FrameServer server(s, static_cast<unsigned short>(port), staticDir);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cout << "serving on http://127.0.0.1:" << server.port() << "/" << std::endl;
            server.run();
            g_server = nullptr;
            return kOk;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kFailure;
    }
    return kUsage;
}
