#include "linshap/cli.hpp"

int main(int argc, char** argv) { return linshap::cli::cli_dispatch(argc, argv); }
