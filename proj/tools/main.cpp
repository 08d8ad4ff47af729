#include <iostream>

#include "crcpanel/cli.hpp"

int main(int argc, char** argv) {
    return crcpanel::run_cli({argv + 1, argv + argc}, std::cout, std::cerr);
}
