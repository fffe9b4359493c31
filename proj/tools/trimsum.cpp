#include "trimsum/cli.hpp"

int main(int argc, char** argv) { return trimsum::cli::run_command(argc, argv); }
