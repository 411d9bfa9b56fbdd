#include "kalls/cli.hpp"

int main(int argc, char** argv) { return kalls::cli::main(argc, argv); }
