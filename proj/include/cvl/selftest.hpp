// Quick invariant checks shipped with the CLI.
#pragma once

#include <ostream>

namespace cvl {

// Prints one line per check; true if all passed.
bool run_selftest(std::ostream& out);

}  // namespace cvl
