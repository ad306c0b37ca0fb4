#include "bodyfit/body_template.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bodyfit {

namespace {

constexpr int kJ = BodyTemplate::kNumJoints;

struct SkeletonDef {
    std::array<int, kJ> parents;
    std::array<Vec3<double>, kJ> offsets;
};

// T-pose skeleton, y up, person facing +z listed as model forward. Left side
// of the body is +x.
const SkeletonDef& skeleton_def() {
    static const SkeletonDef def = [] {
        SkeletonDef d;
        auto set = [&](int j, int parent, double x, double y, double z) {
            d.parents[j] = parent;
            d.offsets[j] = {x, y, z};
        };
        set(0, -1, 0.00, 0.00, 0.00);    // pelvis
        set(1, 0, 0.09, -0.06, 0.00);    // l_hip
        set(2, 0, -0.09, -0.06, 0.00);   // r_hip
        set(3, 0, 0.00, 0.11, 0.00);     // spine1
        set(4, 1, 0.00, -0.42, 0.00);    // l_knee
        set(5, 2, 0.00, -0.42, 0.00);    // r_knee
        set(6, 3, 0.00, 0.13, 0.00);     // spine2
        set(7, 4, 0.00, -0.41, 0.00);    // l_ankle
        set(8, 5, 0.00, -0.41, 0.00);    // r_ankle
        set(9, 6, 0.00, 0.12, 0.00);     // spine3
        set(10, 7, 0.00, -0.06, 0.12);   // l_foot
        set(11, 8, 0.00, -0.06, 0.12);   // r_foot
        set(12, 9, 0.00, 0.10, 0.00);    // neck
        set(13, 9, 0.08, 0.05, 0.00);    // l_collar
        set(14, 9, -0.08, 0.05, 0.00);   // r_collar
        set(15, 12, 0.00, 0.13, 0.00);   // head
        set(16, 13, 0.10, 0.00, 0.00);   // l_shoulder
        set(17, 14, -0.10, 0.00, 0.00);  // r_shoulder
        set(18, 16, 0.27, 0.00, 0.00);   // l_elbow
        set(19, 17, -0.27, 0.00, 0.00);  // r_elbow
        set(20, 18, 0.25, 0.00, 0.00);   // l_wrist
        set(21, 19, -0.25, 0.00, 0.00);  // r_wrist
        set(22, 20, 0.08, 0.00, 0.00);   // l_hand
        set(23, 21, -0.08, 0.00, 0.00);  // r_hand
        return d;
    }();
    return def;
}

// Primary child used as the tube axis target of each non-leaf part.
constexpr std::array<int, kJ> kPrimaryChild = {3,  4,  5,  6,  7,  8,  9,  10,
                                               11, 12, -1, -1, 15, 16, 17, -1,
                                               18, 19, 20, 21, 22, 23, -1, -1};

constexpr std::array<double, kJ> kPartRadius = {
    0.11,   // pelvis
    0.07,  0.07,   // hips -> thighs
    0.105,          // spine1 tube
    0.055, 0.055,  // knees -> shanks
    0.105,          // spine2
    0.04,  0.04,   // ankles -> lower shank
    0.11,           // spine3 chest
    0.035, 0.035,  // feet
    0.05,           // neck
    0.06,  0.06,   // collars
    0.09,           // head
    0.045, 0.045,  // shoulders -> upper arms
    0.04,  0.04,   // elbows -> forearms
    0.035, 0.035,  // wrists -> hands
    0.03,  0.03,   // hand tips
};

constexpr double kLeafExtension[kJ] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0.10, 0.10,
                                       0, 0, 0, 0.20, 0, 0, 0, 0, 0, 0, 0.07, 0.07};

Vec3<double> normalized(const Vec3<double>& v) {
    const double n = norm(v);
    return {v.x / n, v.y / n, v.z / n};
}

double point_segment_distance(const Vec3<double>& p, const Vec3<double>& a,
                              const Vec3<double>& b) {
    const Vec3<double> ab = b - a;
    const double len2 = squared_norm(ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec3<double> q = a + t * ab;
    return norm(p - q);
}

}  // namespace

std::array<Vec3<double>, kJ> BodyTemplate::rest_joints() const {
    std::array<Vec3<double>, kJ> joints;
    for (int j = 0; j < kJ; ++j)
        joints[j] = parents[j] < 0 ? rest_offsets[j] : joints[parents[j]] + rest_offsets[j];
    return joints;
}

double BodyTemplate::skeleton_height() const {
    const auto joints = rest_joints();
    double lo = joints[0].y, hi = joints[0].y;
    for (const auto& j : joints) {
        lo = std::min(lo, j.y);
        hi = std::max(hi, j.y);
    }
    return hi - lo;
}

double BodyTemplate::rest_bone_length_sum() const {
    double total = 0.0;
    for (int j = 0; j < kJ; ++j)
        if (parents[j] >= 0) total += norm(rest_offsets[j]);
    return total;
}

void BodyTemplate::validate() const {
    const int n = n_vertices();
    if (n <= 0) throw ContractViolation("template: no vertices");
    int roots = 0;
    for (int j = 0; j < kJ; ++j) {
        if (parents[j] < 0) {
            ++roots;
        } else if (parents[j] >= j) {
            throw ContractViolation("template: joints must be in topological order (parent < child)");
        }
    }
    if (roots != 1) throw ContractViolation("template: joint tree must have exactly one root");
    if (static_cast<int>(skin_weights.size()) != n)
        throw ContractViolation("template: skin_weights size mismatch");
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (const auto& [j, w] : skin_weights[i]) {
            if (j < 0 || j >= kJ) throw ContractViolation("template: skin weight joint out of range");
            if (w < 0.0) throw ContractViolation("template: negative skin weight");
            row += w;
        }
        if (std::fabs(row - 1.0) > 1e-9)
            throw ContractViolation("template: skin weight row does not sum to 1");
    }
    if (static_cast<int>(vertex_part.size()) != n || static_cast<int>(vertex_uv.size()) != n)
        throw ContractViolation("template: part chart size mismatch");
    for (int i = 0; i < n; ++i) {
        if (vertex_part[i] < 0 || vertex_part[i] >= kJ)
            throw ContractViolation("template: part id out of range");
        const auto& uv = vertex_uv[i];
        if (uv.x < 0.0 || uv.x > 1.0 || uv.y < 0.0 || uv.y > 1.0)
            throw ContractViolation("template: UV outside the unit square");
    }
    for (const auto& f : faces)
        for (int v : f)
            if (v < 0 || v >= n) throw ContractViolation("template: face index out of range");
    for (const auto& [j, axis] : hinge_axes) {
        if (j < 0 || j >= kJ) throw ContractViolation("template: hinge joint out of range");
        if (std::fabs(norm(axis) - 1.0) > 1e-6)
            throw ContractViolation("template: hinge axis must be unit length");
    }
    for (const auto& [a, b] : adjacency)
        if (a < 0 || a >= kJ || b < 0 || b >= kJ)
            throw ContractViolation("template: adjacency index out of range");
    if (trunk_bone < 0 || trunk_bone >= kJ)
        throw ContractViolation("template: trunk bone out of range");
}

PartCharts PartCharts::build(const BodyTemplate& tpl) {
    PartCharts charts;
    for (int i = 0; i < tpl.n_vertices(); ++i) charts.members[tpl.vertex_part[i]].push_back(i);
    return charts;
}

const std::array<std::string, kJ>& joint_names() {
    static const std::array<std::string, kJ> names = {
        "pelvis",     "l_hip",      "r_hip",      "spine1",  "l_knee",   "r_knee",
        "spine2",     "l_ankle",    "r_ankle",    "spine3",  "l_foot",   "r_foot",
        "neck",       "l_collar",   "r_collar",   "head",    "l_shoulder", "r_shoulder",
        "l_elbow",    "r_elbow",    "l_wrist",    "r_wrist", "l_hand",   "r_hand"};
    return names;
}

BodyTemplate builtin_humanoid(int target_vertices) {
    if (target_vertices < kJ * 2 * 8 + 2)
        throw ContractViolation("builtin_humanoid: target vertex count too small");

    const auto& def = skeleton_def();
    BodyTemplate tpl;
    tpl.parents = def.parents;
    tpl.rest_offsets = def.offsets;
    const auto joints = tpl.rest_joints();

    constexpr int kSegs = 8;

    // Tube axis per part: joint -> primary child, or a short extension past a
    // leaf joint along its own bone direction.
    std::array<Vec3<double>, kJ> axis_a, axis_b;
    for (int j = 0; j < kJ; ++j) {
        axis_a[j] = joints[j];
        if (kPrimaryChild[j] >= 0) {
            axis_b[j] = joints[kPrimaryChild[j]];
        } else {
            const Vec3<double> dir = normalized(joints[j] - joints[def.parents[j]]);
            axis_b[j] = joints[j] + kLeafExtension[j] * dir;
        }
    }

    // Ring apportionment: proportional to tube length, >= 2 per part, total
    // rings = (target - 2 poles) / kSegs via largest remainder.
    const int rings_total = (target_vertices - 2) / kSegs;
    std::array<double, kJ> length;
    double length_sum = 0.0;
    for (int j = 0; j < kJ; ++j) {
        length[j] = norm(axis_b[j] - axis_a[j]);
        length_sum += length[j];
    }
    std::array<int, kJ> rings;
    std::array<double, kJ> frac;
    int assigned = 0;
    for (int j = 0; j < kJ; ++j) {
        const double share = length[j] / length_sum * rings_total;
        rings[j] = std::max(2, static_cast<int>(std::floor(share)));
        frac[j] = share - std::floor(share);
        assigned += rings[j];
    }
    std::array<int, kJ> order;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return frac[a] > frac[b]; });
    for (int k = 0; assigned < rings_total; k = (k + 1) % kJ, ++assigned) rings[order[k]] += 1;
    while (assigned > rings_total) {
        int pick = -1;
        for (int k = kJ - 1; k >= 0; --k)
            if (rings[order[k]] > 2) {
                pick = order[k];
                break;
            }
        if (pick < 0) break;
        rings[pick] -= 1;
        --assigned;
    }

    for (int j = 0; j < kJ; ++j) {
        const Vec3<double> w = normalized(axis_b[j] - axis_a[j]);
        Vec3<double> ref = std::fabs(w.y) < 0.9 ? Vec3<double>{0, 1, 0} : Vec3<double>{1, 0, 0};
        Vec3<double> u = normalized(cross(ref, w));
        Vec3<double> v = cross(w, u);

        const int r = rings[j];
        const int base = tpl.n_vertices();
        for (int i = 0; i < r; ++i) {
            const double tv = (i + 0.5) / r;
            const Vec3<double> center = axis_a[j] + (length[j] * tv) * w;
            for (int k = 0; k < kSegs; ++k) {
                const double phi = 2.0 * M_PI * (k + 0.5) / kSegs;
                const Vec3<double> radial = std::cos(phi) * u + std::sin(phi) * v;
                tpl.vertices.push_back(center + kPartRadius[j] * radial);
                tpl.vertex_part.push_back(j);
                tpl.vertex_uv.push_back({(k + 0.5) / kSegs, tv});
            }
        }
        for (int i = 0; i + 1 < r; ++i)
            for (int k = 0; k < kSegs; ++k) {
                const int k1 = (k + 1) % kSegs;
                const int a0 = base + i * kSegs + k;
                const int a1 = base + i * kSegs + k1;
                const int b0 = base + (i + 1) * kSegs + k;
                const int b1 = base + (i + 1) * kSegs + k1;
                tpl.faces.push_back({a0, a1, b0});
                tpl.faces.push_back({a1, b1, b0});
            }

        // Pole caps on the head top and below the pelvis.
        if (j == 15 || j == 0) {
            const bool top = (j == 15);
            const Vec3<double> pole =
                top ? axis_b[j] + kPartRadius[j] * w : axis_a[j] - (1.2 * kPartRadius[j]) * w;
            const int pole_idx = tpl.n_vertices();
            tpl.vertices.push_back(pole);
            tpl.vertex_part.push_back(j);
            tpl.vertex_uv.push_back({0.5, top ? 1.0 : 0.0});
            const int ring0 = top ? base + (r - 1) * kSegs : base;
            for (int k = 0; k < kSegs; ++k) {
                const int k1 = (k + 1) % kSegs;
                if (top)
                    tpl.faces.push_back({ring0 + k, ring0 + k1, pole_idx});
                else
                    tpl.faces.push_back({ring0 + k1, ring0 + k, pole_idx});
            }
        }
    }

    // Two-nearest-segment inverse-distance skinning (power 4 sharpens the
    // blend away from joints), normalized per vertex.
    tpl.skin_weights.resize(tpl.n_vertices());
    for (int i = 0; i < tpl.n_vertices(); ++i) {
        const Vec3<double>& p = tpl.vertices[i];
        int best = -1, second = -1;
        double bd = 1e30, sd = 1e30;
        for (int j = 0; j < kJ; ++j) {
            const double d = point_segment_distance(p, axis_a[j], axis_b[j]);
            if (d < bd) {
                second = best;
                sd = bd;
                best = j;
                bd = d;
            } else if (d < sd) {
                second = j;
                sd = d;
            }
        }
        const double w1 = 1.0 / std::pow(bd + 1e-4, 4);
        const double w2 = 1.0 / std::pow(sd + 1e-4, 4);
        const double sum = w1 + w2;
        tpl.skin_weights[i] = {{best, w1 / sum}, {second, w2 / sum}};
    }

    // Hinges: knees and elbows, axes oriented so natural flexion is negative.
    tpl.hinge_axes = {
        {4, {-1, 0, 0}},   // l_knee
        {5, {-1, 0, 0}},   // r_knee
        {18, {0, 1, 0}},   // l_elbow
        {19, {0, -1, 0}},  // r_elbow
    };

    tpl.symmetry_pairs = {{1, 2},   {4, 5},   {7, 8},   {10, 11}, {13, 14},
                          {16, 17}, {18, 19}, {20, 21}, {22, 23}};

    for (int j = 1; j < kJ; ++j) tpl.adjacency.push_back({def.parents[j], j});

    tpl.trunk_bone = 3;
    tpl.validate();
    return tpl;
}

std::vector<Vec3<double>> compute_vertex_normals(std::span<const Vec3<double>> verts,
                                                 std::span<const std::array<int, 3>> faces) {
    std::vector<Vec3<double>> normals(verts.size(), Vec3<double>{0, 0, 0});
    for (const auto& f : faces) {
        const Vec3<double> n =
            cross(verts[f[1]] - verts[f[0]], verts[f[2]] - verts[f[0]]);  // area-weighted
        for (int v : f) normals[v] = normals[v] + n;
    }
    for (auto& n : normals) {
        const double len = norm(n);
        if (len > 1e-12) n = (1.0 / len) * n;
    }
    return normals;
}

}  // namespace bodyfit
