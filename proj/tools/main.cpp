#include "hystdyn/cli.hpp"

int main(int argc, char** argv) { return hystdyn::cli::run(argc, argv); }
