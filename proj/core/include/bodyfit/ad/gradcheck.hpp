#pragma once

#include <functional>
#include <span>
#include <vector>

#include "bodyfit/ad/tape.hpp"

namespace bodyfit::ad {

struct GradCheckResult {
    double max_rel_err = 0.0;
    int nonfinite_count = 0;  // evaluations that produced NaN/Inf
};

using TapeFn = std::function<Value(Tape&, std::span<const Value>)>;

// Central finite differences against the reverse-mode gradient of f at x.
// Relative error per coordinate is |analytic - fd| / (|analytic| + |fd| + 1e-12);
// the max over coordinates is returned. Non-finite f values are counted, not thrown.
//
// scale_floor > 0 adds scale_floor * max(1, ||g||_inf) to every denominator.
// Large composite losses need it: a coordinate many orders below the gradient
// norm carries differences near the roundoff of f itself, which no finite
// step can resolve; the floor scores such coordinates against the gradient's
// scale instead of their own vanishing magnitude.
GradCheckResult check_gradient(const TapeFn& f, std::span<const double> x, double step,
                               double scale_floor = 0.0);

}  // namespace bodyfit::ad
