#include <iostream>

#include "npss_cli.hpp"

int main(int argc, char** argv) { return npss::cli::run(argc, argv, std::cout, std::cerr); }
