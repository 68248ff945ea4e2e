#include <iostream>

#include "p2s/cli/cli.hpp"

int main(int argc, char** argv) { return p2s::cli::run(argc, argv, std::cout, std::cerr); }
