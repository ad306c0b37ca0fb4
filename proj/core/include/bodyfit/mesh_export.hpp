#pragma once

#include <array>
#include <string>
#include <vector>

#include "bodyfit/annotation.hpp"
#include "bodyfit/body_model.hpp"

namespace bodyfit {

// Wavefront OBJ with v/f records, 1-based indices. Faces may be empty
// (point-cloud export). Unwritable path -> IoError.
void export_obj(const std::vector<Vec3<double>>& vertices,
                const std::vector<std::array<int, 3>>& faces, const std::string& path);

struct ObjMesh {
    std::vector<Vec3<double>> vertices;
    std::vector<std::array<int, 3>> faces;
};

// Reads back only what export_obj writes (v and triangular f records);
// malformed records -> IoError with the line number.
ObjMesh import_obj(const std::string& path);

// Posed template surface as OBJ.
void export_mesh(const BodyTemplate& tpl, const PosedBody& posed, const std::string& path);

// 2D overlay: projected mesh edges plus annotation dense points / keypoints.
void export_overlay_svg(const std::string& path, int width, int height,
                        const std::vector<Vec2<double>>& pixels,
                        const std::vector<std::array<int, 3>>& faces,
                        const SampleAnnotation* anno = nullptr);

}  // namespace bodyfit
