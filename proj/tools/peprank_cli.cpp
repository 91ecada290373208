// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "peprank/cli.hpp"

int main(int argc, char** argv) { return peprank::run_cli(argc, argv, std::cout, std::cerr); }
