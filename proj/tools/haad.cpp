#include <iostream>
#include <string>
#include <vector>

#include "haad/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return haad::cli::run(args, std::cout, std::cerr);
}
