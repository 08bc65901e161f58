#include <iostream>

#include "ctrack_cli/cli.hpp"

int main(int argc, char** argv) { return ctrack::cli::run(argc, argv, std::cout, std::cerr); }
