#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "bodyfit/geom.hpp"

namespace bodyfit {

// Rest-pose surface + skeleton + skinning + per-part UV charts. Immutable
// after construction, shareable across threads. Joints are stored in
// topological order (parent index < joint index, root first).
struct BodyTemplate {
    static constexpr int kNumJoints = 24;

    std::vector<Vec3<double>> vertices;  // rest positions, meters
    std::vector<std::array<int, 3>> faces;
    std::array<int, kNumJoints> parents{};            // -1 for the root
    std::array<Vec3<double>, kNumJoints> rest_offsets{};  // from parent, meters

    // Sparse row-stochastic skinning weights, (joint, weight) pairs per vertex.
    std::vector<std::vector<std::pair<int, double>>> skin_weights;

    // Hinge joints (elbows, knees) with unit axes oriented so natural flexion
    // projects negative.
    std::vector<std::pair<int, Vec3<double>>> hinge_axes;

    std::vector<std::pair<int, int>> symmetry_pairs;  // (left bone, right bone)
    std::vector<std::pair<int, int>> adjacency;       // unordered segment pairs
    int trunk_bone = 3;

    // Part chart: every vertex belongs to exactly one of 24 parts, with a UV
    // position inside that part's unit square.
    std::vector<int> vertex_part;
    std::vector<Vec2<double>> vertex_uv;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    std::array<Vec3<double>, kNumJoints> rest_joints() const;
    double skeleton_height() const;
    double rest_bone_length_sum() const;

    void validate() const;  // throws ContractViolation with the failing field
};

// Per-part vertex index lists, built once per template for nearest-UV lookups.
struct PartCharts {
    std::array<std::vector<int>, BodyTemplate::kNumJoints> members;
    static PartCharts build(const BodyTemplate& tpl);
};

// Procedural low-poly humanoid: one capsule-like tube per joint segment,
// distance-based two-bone skinning, cylindrical per-part UV charts.
// target_vertices is matched exactly when (target-2) divides by 8.
BodyTemplate builtin_humanoid(int target_vertices = 1730);

const std::array<std::string, BodyTemplate::kNumJoints>& joint_names();

BodyTemplate load_template(const std::string& path);
void save_template(const BodyTemplate& tpl, const std::string& path);

// Area-weighted vertex normals of a triangle mesh.
std::vector<Vec3<double>> compute_vertex_normals(std::span<const Vec3<double>> verts,
                                                 std::span<const std::array<int, 3>> faces);

}  // namespace bodyfit
