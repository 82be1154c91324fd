#include <iostream>

#include "gdd/cli.hpp"

int main(int argc, char** argv) { return gdd::run_cli(argc, argv, std::cout, std::cerr); }
