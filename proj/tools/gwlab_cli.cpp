#include "gwlab/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return gwlab::run_cli(argc, argv, std::cout, std::cerr); }
