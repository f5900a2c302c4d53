#include "vgka/cli.hpp"

int main(int argc, char** argv) { return vgka::cli::cli_main(argc, argv); }
