#include "oscillab/cli.hpp"

int main(int argc, char** argv) { return oscillab::cli::run_cli(argc, argv); }
