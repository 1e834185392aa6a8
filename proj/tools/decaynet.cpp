#include <iostream>

#include "decaynet/cli.hpp"

int main(int argc, char** argv) {
    return decaynet::cli::parse_and_dispatch(argc, argv, std::cout, std::cerr);
}
