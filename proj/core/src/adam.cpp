#include "bodyfit/ad/adam.hpp"

#include <cmath>

namespace bodyfit::ad {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size() || params.size() != state.m.size())
        throw ContractViolation("adam_step: params/grads/state length mismatch");
    state.step_count += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / c1;
        const double vhat = state.v[i] / c2;
        params[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
    }
}

}  // namespace bodyfit::ad
