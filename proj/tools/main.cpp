#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return shapespace::cli::run(argc, argv, std::cout, std::cerr); }
