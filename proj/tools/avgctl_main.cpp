#include <iostream>

#include "avgctl/cli.hpp"

int main(int argc, char** argv) {
    return avgctl::run_cli(argc, argv, std::cout, std::cerr);
}
