#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "bodyfit/body_template.hpp"
#include "bodyfit/camera.hpp"
#include "bodyfit/errors.hpp"
#include "bodyfit/mesh_export.hpp"
#include "bodyfit/synth.hpp"

using namespace bodyfit;
namespace fs = std::filesystem;

namespace {

const BodyTemplate& tpl() {
    static const BodyTemplate t = builtin_humanoid();
    return t;
}

fs::path fresh_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("obj: write/read round trip preserves geometry and topology") {
    const fs::path dir = fresh_dir("bodyfit_obj_rt");
    const fs::path f = dir / "mesh.obj";

    std::vector<Vec3<double>> verts{{0.0, 0.0, 0.0}, {1.25, -3.5, 0.001}, {-2.0, 0.75, 9.0}};
    std::vector<std::array<int, 3>> faces{{0, 1, 2}, {2, 1, 0}};
    export_obj(verts, faces, f.string());

    const ObjMesh mesh = import_obj(f.string());
    REQUIRE(mesh.vertices.size() == verts.size());
    REQUIRE(mesh.faces == faces);
    for (std::size_t i = 0; i < verts.size(); ++i) {
        CHECK(std::abs(mesh.vertices[i].x - verts[i].x) < 1e-6);
        CHECK(std::abs(mesh.vertices[i].y - verts[i].y) < 1e-6);
        CHECK(std::abs(mesh.vertices[i].z - verts[i].z) < 1e-6);
    }
}

TEST_CASE("obj: whole-template round trip stays within export precision") {
    const fs::path dir = fresh_dir("bodyfit_obj_tpl");
    const fs::path f = dir / "body.obj";
    export_obj(tpl().vertices, tpl().faces, f.string());
    const ObjMesh mesh = import_obj(f.string());
    REQUIRE((int)mesh.vertices.size() == tpl().n_vertices());
    REQUIRE(mesh.faces.size() == tpl().faces.size());
    double worst = 0.0;
    for (int v = 0; v < tpl().n_vertices(); ++v)
        worst = std::max(worst, norm(mesh.vertices[v] - tpl().vertices[v]));
    CHECK(worst < 1e-6);
}

TEST_CASE("obj: contract and io failures") {
    const fs::path dir = fresh_dir("bodyfit_obj_err");

    std::vector<Vec3<double>> verts{{0, 0, 0}, {1, 0, 0}};
    std::vector<std::array<int, 3>> bad{{0, 1, 2}};
    CHECK_THROWS_AS(export_obj(verts, bad, (dir / "x.obj").string()), ContractViolation);

    // Point clouds (no faces) are fine.
    export_obj(verts, {}, (dir / "cloud.obj").string());
    const ObjMesh cloud = import_obj((dir / "cloud.obj").string());
    CHECK(cloud.vertices.size() == 2);
    CHECK(cloud.faces.empty());

    CHECK_THROWS_AS(import_obj((dir / "missing.obj").string()), IoError);
    std::ofstream(dir / "broken.obj") << "v 1 2\nf 1 2 3\n";
    CHECK_THROWS_AS(import_obj((dir / "broken.obj").string()), IoError);
    CHECK_THROWS_AS(export_obj(verts, {}, (dir / "nodir" / "deep" / "x.obj").string()), IoError);
}

TEST_CASE("export_mesh: posed surface, vertex count enforced") {
    const fs::path dir = fresh_dir("bodyfit_mesh");
    BodyParams p = BodyParams::t_pose();
    p.pose[1] = {0.3, 0.0, 0.1};
    const PosedBody posed = pose_body(tpl(), p);

    const fs::path f = dir / "posed.obj";
    export_mesh(tpl(), posed, f.string());
    const ObjMesh mesh = import_obj(f.string());
    REQUIRE((int)mesh.vertices.size() == tpl().n_vertices());
    double worst = 0.0;
    for (int v = 0; v < tpl().n_vertices(); ++v)
        worst = std::max(worst, norm(mesh.vertices[v] - posed.vertices[v]));
    CHECK(worst < 1e-6);

    PosedBody truncated = posed;
    truncated.vertices.resize(10);
    CHECK_THROWS_AS(export_mesh(tpl(), truncated, (dir / "bad.obj").string()),
                    ContractViolation);
}

TEST_CASE("overlay svg: well-formed with and without an annotation") {
    const fs::path dir = fresh_dir("bodyfit_svg");
    SynthConfig cfg;
    cfg.count = 1;
    cfg.dense_points = 20;
    cfg.seed = 71;
    const KeypointMap& map = KeypointMap::standard16();
    const SynthDataset data = synth_dataset(tpl(), map, cfg);

    const BodyParams& p = data.truth[0];
    const PosedBody posed = pose_body(tpl(), p);
    const WeakPerspectiveCamera cam{p.rotation_raw, p.scale, p.translation};
    const auto pixels = project(posed.vertices, cam);

    const fs::path with = dir / "with.svg";
    export_overlay_svg(with.string(), 512, 512, pixels, tpl().faces, &data.samples[0]);
    const std::string s = slurp(with);
    CHECK(s.find("<svg") != std::string::npos);
    CHECK(s.find("</svg>") != std::string::npos);
    CHECK(s.find("<circle") != std::string::npos);
    CHECK(s.find("<path") != std::string::npos);

    const fs::path bare = dir / "bare.svg";
    export_overlay_svg(bare.string(), 512, 512, pixels, tpl().faces);
    const std::string t = slurp(bare);
    CHECK(t.find("<svg") != std::string::npos);
    CHECK(t.find("</svg>") != std::string::npos);
}
