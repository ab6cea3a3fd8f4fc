#include <iostream>

#include "hrc/cli.hpp"

int main(int argc, char** argv) { return hrc::cli::run_cli(argc, argv, std::cin, std::cout, std::cerr); }
