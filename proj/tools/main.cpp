#include <iostream>

#include "cfgame/cli.hpp"

int main(int argc, char** argv) { return cfgame::cli::run(argc, argv, std::cout, std::cerr); }
