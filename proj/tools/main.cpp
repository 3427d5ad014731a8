#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return switchstab::cli::run(argc, argv, std::cout, std::cerr); }
