#include <iostream>

#include "lot/cli.hpp"

int main(int argc, char** argv) { return lot::cli::run_cli(argc, argv, std::cout, std::cerr); }
