#include <iostream>

#include "faec/cli/commands.hpp"

int main(int argc, char** argv) { return faec::cli::run_cli(argc, argv, std::cout, std::cerr); }
