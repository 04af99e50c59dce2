#include <iostream>

#include "sp/cli.hpp"

int main(int argc, char** argv) {
    return sp::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
