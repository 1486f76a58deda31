#include "varclust/cli.hpp"

int main(int argc, char** argv) { return varclust::cli_run(argc, argv); }
