#include <iostream>

#include "gvps/cli.hpp"

int main(int argc, char** argv) { return gvps::run_cli(argc, argv, std::cout, std::cerr); }
