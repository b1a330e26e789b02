#include "irsr/losses/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace irsr::losses {

GradCheckResult grad_check(const std::function<double()>& loss_fn, const std::vector<nn::ParamRef>& params,
                           double step, double rel_floor, int stride) {
    if (step <= 0.0 || stride < 1)
        throw std::invalid_argument("grad_check: bad step or stride");

    GradCheckResult res;
    for (const nn::ParamRef& p : params) {
        double* v = p.value->data();
        const double* g = p.grad->data();
        const int64_t n = p.value->size();
        for (int64_t i = 0; i < n; i += stride) {
            const double orig = v[i];
            v[i] = orig + step;
            const double lp = loss_fn();
            v[i] = orig - step;
            const double lm = loss_fn();
            v[i] = orig;

            const double fd = (lp - lm) / (2.0 * step);
            const double an = g[i];
            const double rel = std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), rel_floor});
            ++res.checked;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_param = p.name;
                res.worst_index = i;
            }
        }
    }
    return res;
}

}  // namespace irsr::losses
