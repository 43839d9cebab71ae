#include <iostream>

#include "coughscreen/cli.hpp"

int main(int argc, char** argv) { return coughscreen::cli::run(argc, argv, std::cout, std::cerr); }
