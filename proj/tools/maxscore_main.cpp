#include "maxscore/cli.hpp"

int main(int argc, char** argv) { return maxscore::cli::run_cli(argc, argv); }
