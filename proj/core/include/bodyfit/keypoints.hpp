#pragma once

#include <utility>
#include <vector>

#include "bodyfit/body_template.hpp"

namespace bodyfit {

// Fixed mapping between the model skeleton and the N-joint 2D keypoint
// skeleton used by annotations and the pose prior. The keypoint tree carries
// its own bone list (indexed by child keypoint), symmetry pairs and the
// pelvis->neck trunk used for normalization and bone ratios.
struct KeypointMap {
    std::vector<int> model_joint;  // keypoint -> model joint index
    std::vector<int> parent;       // keypoint tree, -1 at the root
    std::vector<std::pair<int, int>> sym_bones;  // (left bone, right bone), bone = child kp
    int trunk_root = 0;
    int trunk_top = 2;

    int size() const { return static_cast<int>(model_joint.size()); }
    std::vector<int> bones() const;  // child keypoints of all tree edges

    static const KeypointMap& standard16();
};

// Canonical bone-length ratios of a keypoint skeleton, used by the prior's
// geometric losses. Ratios are bone length over trunk length.
struct SkeletonStats {
    std::vector<int> bones;            // child keypoint per bone
    std::vector<int> bone_parent;      // parent keypoint per bone
    std::vector<double> ratio;         // canonical l_e / l_trunk
    std::vector<std::pair<int, int>> sym_bones;
    int trunk_root = 0;
    int trunk_top = 2;

    static SkeletonStats from_template(const BodyTemplate& tpl, const KeypointMap& map);
};

}  // namespace bodyfit
