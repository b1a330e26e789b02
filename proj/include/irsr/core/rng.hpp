#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

namespace irsr {

// splitmix64; used to derive independent stream seeds from (seed, stream id).
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) {
    return mix64(mix64(a) ^ (0x9e3779b97f4a7c15ULL + b));
}

inline uint64_t mix64(uint64_t a, uint64_t b, uint64_t c) {
    return mix64(mix64(a, b), c);
}

// Seeded generator with a stateless normal draw (no cached spare), so the
// stream position is always exactly the number of engine draws consumed.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : engine_(seed) {}

    static Rng derived(uint64_t seed, uint64_t stream) { return Rng(mix64(seed, stream)); }
    static Rng derived(uint64_t seed, uint64_t stream, uint64_t idx) { return Rng(mix64(seed, stream, idx)); }

    // uniform in [0, 1)
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t next_below(uint64_t n) {
        // rejection sampling keeps the draw unbiased
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }

    int uniform_int(int lo, int hi) {  // inclusive
        return lo + static_cast<int>(next_below(static_cast<uint64_t>(hi - lo + 1)));
    }

    // standard normal via Box-Muller; consumes exactly two engine draws
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 <= 0.0)
            u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    std::string state() const {
        std::ostringstream os;
        os << engine_;
        return os.str();
    }

    void set_state(const std::string& s) {
        std::istringstream is(s);
        is >> engine_;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace irsr
