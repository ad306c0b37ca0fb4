#include "bodyfit/keypoints.hpp"

namespace bodyfit {

std::vector<int> KeypointMap::bones() const {
    std::vector<int> out;
    for (int k = 0; k < size(); ++k)
        if (parent[k] >= 0) out.push_back(k);
    return out;
}

const KeypointMap& KeypointMap::standard16() {
    static const KeypointMap map = [] {
        KeypointMap m;
        // 0 pelvis, 1 spine, 2 neck, 3 head, 4-6 left leg, 7-9 right leg,
        // 10-12 left arm, 13-15 right arm.
        m.model_joint = {0, 9, 12, 15, 1, 4, 7, 2, 5, 8, 16, 18, 20, 17, 19, 21};
        m.parent = {-1, 0, 1, 2, 0, 4, 5, 0, 7, 8, 2, 10, 11, 2, 13, 14};
        m.sym_bones = {{4, 7}, {5, 8}, {6, 9}, {10, 13}, {11, 14}, {12, 15}};
        m.trunk_root = 0;
        m.trunk_top = 2;
        return m;
    }();
    return map;
}

SkeletonStats SkeletonStats::from_template(const BodyTemplate& tpl, const KeypointMap& map) {
    const auto joints = tpl.rest_joints();
    SkeletonStats stats;
    stats.sym_bones = map.sym_bones;
    stats.trunk_root = map.trunk_root;
    stats.trunk_top = map.trunk_top;
    const Vec3<double> trunk =
        joints[map.model_joint[map.trunk_top]] - joints[map.model_joint[map.trunk_root]];
    const double trunk_len = norm(trunk);
    if (trunk_len < 1e-9) throw DegenerateInput("SkeletonStats: zero trunk length");
    for (int k = 0; k < map.size(); ++k) {
        if (map.parent[k] < 0) continue;
        stats.bones.push_back(k);
        stats.bone_parent.push_back(map.parent[k]);
        const double len =
            norm(joints[map.model_joint[k]] - joints[map.model_joint[map.parent[k]]]);
        stats.ratio.push_back(len / trunk_len);
    }
    return stats;
}

}  // namespace bodyfit
