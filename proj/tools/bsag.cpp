#include <iostream>

#include "bsag/cli.hpp"

int main(int argc, char** argv) {
    return bsag::cli::run(argc, argv, std::cout, std::cerr);
}
