#pragma once

namespace qsim::cli {

// Entry point shared by the binary and the tests. Returns the process exit
// code; errors are reported on stderr as one structured line.
int dispatch(int argc, const char* const* argv);

}  // namespace qsim::cli
