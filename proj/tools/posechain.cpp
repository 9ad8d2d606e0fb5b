#include "posechain/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return posechain::run_cli(argc, argv, std::cout, std::cerr); }
