#include "rclevr/cli/cli.hpp"

int main(int argc, char** argv) { return rclevr::cli::run(argc, argv); }
