#include "smoothedvotes/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return smoothedvotes::run_cli(argc, argv, std::cout, std::cerr); }
