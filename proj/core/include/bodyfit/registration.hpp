#pragma once

#include <string>
#include <vector>

#include "bodyfit/regist_losses.hpp"

namespace bodyfit {

struct RegistTrace {
    std::vector<double> loss;  // weighted total at each forward pass; entry 0 is the init loss
    RegistTerms<double> final_terms{};  // unweighted terms at the returned parameters
    bool aborted = false;
    bool kp_warning = false;  // some pass saw every keypoint invisible
    std::string note;         // diagnostic when aborted
};

struct RegistrationResult {
    std::vector<BodyParams> fitted;
    std::vector<RegistTrace> traces;
    int aborted_count = 0;
};

// T-pose plus a camera guess read off the annotation: front view, scale from
// the ratio of the visible-keypoint (fallback: dense-point) bounding-box
// height to the rest skeleton height, translation placing the pelvis at its
// keypoint (fallback: box center).
BodyParams default_init(const BodyTemplate& tpl, const SampleAnnotation& anno,
                        const KeypointMap& map);

// Per-sample independent Adam over the flat 108 parameters. init may be empty
// (default_init per sample) or one entry per sample. A sample whose loss or
// gradient goes non-finite, or whose rotation degenerates, is aborted with a
// diagnostic and reports its last finite parameters; other samples proceed.
// Returned rotations are orthonormalized. Batching/threading never changes
// the per-sample results.
RegistrationResult register_samples(const BodyTemplate& tpl,
                                    const std::vector<SampleAnnotation>& samples,
                                    const std::vector<BodyParams>& init, const RegistConfig& cfg,
                                    const KeypointMap& map);

}  // namespace bodyfit
