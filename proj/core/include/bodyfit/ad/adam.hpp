#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bodyfit/errors.hpp"

namespace bodyfit::ad {

// Adam with bias correction. One state per optimized vector; moments match the
// parameter length for the whole lifetime of the run.
struct AdamState {
    double lr;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step_count = 0;
    std::vector<double> m;
    std::vector<double> v;

    AdamState(std::size_t dim, double learning_rate)
        : lr(learning_rate), m(dim, 0.0), v(dim, 0.0) {}
};

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace bodyfit::ad
