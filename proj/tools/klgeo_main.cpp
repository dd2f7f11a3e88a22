#include <iostream>

#include "klgeo/cli.hpp"

int main(int argc, char** argv) { return klgeo::run_cli(argc, argv, std::cout, std::cerr); }
