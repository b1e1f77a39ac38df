#include "qsim/cli.hpp"

int main(int argc, char** argv) { return qsim::cli::dispatch(argc, argv); }
