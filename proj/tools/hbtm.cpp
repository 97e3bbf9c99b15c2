#include <iostream>
#include <string>
#include <vector>

#include "hbtm/cli.hpp"

int main(int argc, char** argv) {
    return hbtm::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
