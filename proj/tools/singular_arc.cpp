#include <iostream>

#include "singarc/cli.hpp"

int main(int argc, char** argv) { return singarc::run_cli(argc, argv, std::cout, std::cerr); }
