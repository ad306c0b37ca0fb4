#include "bodyfit/ad/gradcheck.hpp"

#include <cmath>

namespace bodyfit::ad {

namespace {

// Fresh tape per probe so value-dependent graph structure is rebuilt honestly.
double eval_at(const TapeFn& f, std::span<const double> x) {
    Tape tape;
    std::vector<Value> leaves;
    leaves.reserve(x.size());
    for (double xi : x) leaves.push_back(tape.var(xi));
    return f(tape, leaves).value();
}

}  // namespace

GradCheckResult check_gradient(const TapeFn& f, std::span<const double> x, double step,
                               double scale_floor) {
    GradCheckResult result;

    Tape tape;
    std::vector<Value> leaves;
    leaves.reserve(x.size());
    for (double xi : x) leaves.push_back(tape.var(xi));
    const Value root = f(tape, leaves);
    if (!std::isfinite(root.value())) result.nonfinite_count += 1;
    const Gradients grads = tape.backward(root);

    double floor = 1e-12;
    if (scale_floor > 0.0) {
        double gmax = 1.0;
        for (std::size_t i = 0; i < x.size(); ++i) gmax = std::max(gmax, std::fabs(grads[leaves[i]]));
        floor += scale_floor * gmax;
    }

    std::vector<double> probe(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + step;
        const double fp = eval_at(f, probe);
        probe[i] = saved - step;
        const double fm = eval_at(f, probe);
        probe[i] = saved;

        if (!std::isfinite(fp)) result.nonfinite_count += 1;
        if (!std::isfinite(fm)) result.nonfinite_count += 1;

        const double fd = (fp - fm) / (2.0 * step);
        const double an = grads[leaves[i]];
        const double rel = std::fabs(an - fd) / (std::fabs(an) + std::fabs(fd) + 1e-12);
        if (!std::isfinite(rel) || rel > result.max_rel_err) result.max_rel_err = rel;
    }
    return result;
}

}  // namespace bodyfit::ad
