#include <iostream>

#include "cbg/cli.hpp"

int main(int argc, char** argv) { return cbg::run_cli(argc, argv, std::cout, std::cerr); }
