#pragma once

#include <iosfwd>

namespace avgctl {

// Exit codes: 0 pass, 1 verification failure, 2 input error, 3 numerical
// failure. AVGCTL_SEED overrides the scenario seed.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace avgctl
