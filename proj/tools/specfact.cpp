#include <iostream>

#include "specfact/cli.hpp"

int main(int argc, char** argv) { return specfact::cli::run(argc, argv, std::cout, std::cerr); }
