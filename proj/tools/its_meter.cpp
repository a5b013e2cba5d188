#include <iostream>

#include "its/cli.hpp"

int main(int argc, char** argv) { return its::cli::run(argc, argv, std::cout, std::cerr); }
