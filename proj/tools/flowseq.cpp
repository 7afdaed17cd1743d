#include <iostream>

#include "flowseq/cli/commands.hpp"

int main(int argc, char** argv) { return flowseq::cli::run(argc, argv, std::cout, std::cerr); }
