#include <iostream>

#include "thor/cli.hpp"

int main(int argc, char** argv) { return thor::cli_main(argc, argv, std::cout, std::cerr); }
