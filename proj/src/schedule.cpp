#include "irsr/diffusion/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace irsr::diffusion {

ScheduleKind schedule_kind_from_name(const std::string& name) {
    if (name == "linear")
        return ScheduleKind::Linear;
    if (name == "cosine")
        return ScheduleKind::Cosine;
    throw std::runtime_error("unknown schedule kind: " + name);
}

const char* schedule_kind_name(ScheduleKind k) {
    return k == ScheduleKind::Linear ? "linear" : "cosine";
}

NoiseSchedule NoiseSchedule::make(int T, ScheduleKind kind) {
    if (T < 1)
        throw std::invalid_argument("NoiseSchedule: T must be >= 1");
    NoiseSchedule s;
    s.T = T;
    s.kind = kind;
    s.alpha.assign(T + 1, 1.0);
    s.alpha_bar.assign(T + 1, 1.0);

    if (kind == ScheduleKind::Linear) {
        const double beta_lo = 1e-4, beta_hi = 2e-2;
        for (int t = 1; t <= T; ++t) {
            double beta = T == 1 ? beta_hi : beta_lo + (beta_hi - beta_lo) * (t - 1) / (T - 1);
            s.alpha[t] = 1.0 - beta;
            s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
        }
    } else {
        const double off = 0.008;
        auto f = [&](double t) {
            double v = std::cos((t / T + off) / (1.0 + off) * M_PI / 2.0);
            return v * v;
        };
        const double f0 = f(0.0);
        for (int t = 1; t <= T; ++t) {
            double ab = f(static_cast<double>(t)) / f0;
            double a = ab / s.alpha_bar[t - 1];
            a = std::max(a, 1.0 - 0.999);  // clip beta at 0.999
            s.alpha[t] = a;
            s.alpha_bar[t] = s.alpha_bar[t - 1] * a;
        }
    }
    s.validate();
    return s;
}

void NoiseSchedule::validate() const {
    if (static_cast<int>(alpha.size()) != T + 1 || static_cast<int>(alpha_bar.size()) != T + 1)
        throw std::runtime_error("NoiseSchedule: vector sizes do not match T");
    if (alpha_bar[0] != 1.0)
        throw std::runtime_error("NoiseSchedule: alpha_bar[0] must be 1");
    for (int t = 1; t <= T; ++t) {
        if (!(alpha[t] > 0.0 && alpha[t] < 1.0))
            throw std::runtime_error("NoiseSchedule: alpha_t out of (0, 1) at t=" + std::to_string(t));
        if (!(alpha_bar[t] < alpha_bar[t - 1]))
            throw std::runtime_error("NoiseSchedule: alpha_bar not strictly decreasing at t=" + std::to_string(t));
    }
}

}  // namespace irsr::diffusion
