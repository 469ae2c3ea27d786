#include <iostream>

#include "splitcall/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return splitcall::run_cli(args, std::cout, std::cerr);
}
