#pragma once

#include <functional>
#include <string>
#include <vector>

#include "irsr/nn/layers.hpp"

namespace irsr::losses {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::string worst_param;
    int64_t worst_index = -1;
    int64_t checked = 0;

    bool pass(double tol) const { return max_rel_err <= tol; }
};

// Central finite differences against already-accumulated analytic gradients.
// loss_fn must be a pure function of the current parameter values; the
// caller runs its analytic backward pass first so params' grad buffers hold
// the gradients under test. Relative error uses max(|fd|, |analytic|,
// rel_floor) in the denominator so near-zero gradients do not blow up the
// ratio. `stride` checks every stride-th entry for large models.
GradCheckResult grad_check(const std::function<double()>& loss_fn, const std::vector<nn::ParamRef>& params,
                           double step = 1e-4, double rel_floor = 1e-6, int stride = 1);

}  // namespace irsr::losses
