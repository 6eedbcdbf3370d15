#include "biogate/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return biogate::cli::run_cli(argc, argv, std::cout, std::cerr); }
