#include "fractv/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fractv::cli::run(argc, argv, std::cout, std::cerr); }
