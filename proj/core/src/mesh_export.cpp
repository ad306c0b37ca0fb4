#include "bodyfit/mesh_export.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "bodyfit/errors.hpp"

namespace bodyfit {

void export_obj(const std::vector<Vec3<double>>& vertices,
                const std::vector<std::array<int, 3>>& faces, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path);
    out << std::setprecision(9);
    for (const auto& v : vertices) out << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& f : faces) {
        for (int k : f)
            if (k < 0 || k >= (int)vertices.size())
                throw ContractViolation("export_obj: face index out of range");
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
    if (!out.flush()) throw IoError("write failed: " + path);
}

ObjMesh import_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    ObjMesh mesh;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream is(line);
        std::string tag;
        if (!(is >> tag) || tag == "#") continue;
        if (tag == "v") {
            Vec3<double> v;
            if (!(is >> v.x >> v.y >> v.z))
                throw IoError(path + ":" + std::to_string(lineno) + ": malformed vertex");
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::array<int, 3> f;
            if (!(is >> f[0] >> f[1] >> f[2]))
                throw IoError(path + ":" + std::to_string(lineno) + ": malformed face");
            for (int& k : f) {
                if (k < 1 || k > (int)mesh.vertices.size())
                    throw IoError(path + ":" + std::to_string(lineno) + ": face index out of range");
                --k;
            }
            mesh.faces.push_back(f);
        }
        // other record types are ignored
    }
    return mesh;
}

void export_mesh(const BodyTemplate& tpl, const PosedBody& posed, const std::string& path) {
    if (posed.vertices.size() != tpl.vertices.size())
        throw ContractViolation("export_mesh: posed vertex count differs from template");
    export_obj(posed.vertices, tpl.faces, path);
}

void export_overlay_svg(const std::string& path, int width, int height,
                        const std::vector<Vec2<double>>& pixels,
                        const std::vector<std::array<int, 3>>& faces,
                        const SampleAnnotation* anno) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path);
    out << std::setprecision(6);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<g stroke=\"#8ab\" stroke-width=\"0.3\" fill=\"none\">\n";
    for (const auto& f : faces) {
        for (int k : f)
            if (k < 0 || k >= (int)pixels.size())
                throw ContractViolation("export_overlay_svg: face index out of range");
        const Vec2<double>&a = pixels[f[0]], &b = pixels[f[1]], &c = pixels[f[2]];
        out << "<path d=\"M" << a.x << ' ' << a.y << " L" << b.x << ' ' << b.y << " L" << c.x
            << ' ' << c.y << " Z\"/>\n";
    }
    out << "</g>\n";
    if (anno) {
        out << "<g fill=\"#d33\">\n";
        for (const auto& d : anno->dense)
            out << "<circle cx=\"" << d.pixel.x << "\" cy=\"" << d.pixel.y << "\" r=\"1\"/>\n";
        out << "</g>\n<g fill=\"none\" stroke=\"#2a2\" stroke-width=\"1\">\n";
        for (const auto& kp : anno->keypoints)
            if (kp.visible)
                out << "<circle cx=\"" << kp.pos.x << "\" cy=\"" << kp.pos.y << "\" r=\"3\"/>\n";
        out << "</g>\n";
    }
    out << "</svg>\n";
    if (!out.flush()) throw IoError("write failed: " + path);
}

}  // namespace bodyfit
