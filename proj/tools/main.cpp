#include <iostream>
#include <string>
#include <vector>

#include "combu/cli.hpp"

int main(int argc, char** argv) {
    return combu::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
