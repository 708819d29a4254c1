#include "cbo/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return cbo::cli_main(argc, argv, std::cout, std::cerr);
}
