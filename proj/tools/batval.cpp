#include <iostream>

#include "batval/cli.hpp"

int main(int argc, char** argv) { return batval::run_cli(argc, argv, std::cout, std::cerr); }
