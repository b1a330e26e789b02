#pragma once

#include <ostream>

namespace irsr {

// Fast invariant sweep across every module; prints one line per check and
// returns the number of failures.
int run_selftest(std::ostream& os);

}  // namespace irsr
