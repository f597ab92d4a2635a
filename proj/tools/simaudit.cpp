#include <iostream>

#include "simaudit/cli.hpp"

int main(int argc, char** argv) { return simaudit::cli::run(argc, argv, std::cout, std::cerr); }
