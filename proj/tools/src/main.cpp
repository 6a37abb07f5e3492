#include <iostream>

#include "gridrestore_cli/cli.hpp"

int main(int argc, char** argv) { return gridrestore::run_cli(argc, argv, std::cout, std::cerr); }
