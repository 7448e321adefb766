#include <iostream>

#include "osclaims/cli.hpp"

int main(int argc, char** argv) { return osclaims::run(argc, argv, std::cout, std::cerr); }
