#include <iostream>

#include "dircalc/cli.hpp"

int main(int argc, char** argv) { return dircalc::run_cli(argc, argv, std::cout, std::cerr); }
