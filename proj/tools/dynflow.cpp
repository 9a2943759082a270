#include <iostream>

#include "dynflow/cli.hpp"

int main(int argc, char** argv) { return dynflow::run_cli(argc, argv, std::cout, std::cerr); }
