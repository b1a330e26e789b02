#pragma once

#include <string>
#include <vector>

namespace irsr::diffusion {

enum class ScheduleKind { Linear, Cosine };

ScheduleKind schedule_kind_from_name(const std::string& name);
const char* schedule_kind_name(ScheduleKind k);

// Per-step retention factors alpha_t and their running product alpha_bar_t,
// indexed 0..T with the convention alpha_bar_0 = 1. Linear: beta ramps over
// [1e-4, 2e-2]. Cosine: squared-cosine alpha_bar with offset 0.008, betas
// clipped at 0.999.
struct NoiseSchedule {
    int T = 1000;
    ScheduleKind kind = ScheduleKind::Linear;
    std::vector<double> alpha;      // size T+1, alpha[0] = 1 (sentinel)
    std::vector<double> alpha_bar;  // size T+1, alpha_bar[0] = 1

    static NoiseSchedule make(int T, ScheduleKind kind);

    void validate() const;  // throws unless 0 < alpha_t < 1 and alpha_bar strictly decreasing
};

}  // namespace irsr::diffusion
