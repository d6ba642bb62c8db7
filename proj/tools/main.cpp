#include "genrec/cli.hpp"

int main(int argc, char** argv) { return genrec::cli::run_cli(argc, argv); }
