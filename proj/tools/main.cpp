// Copyright 2026 The walkstack Authors.
// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "walkstack/tools/cli.hpp"

int main(int argc, char** argv) {
  return walkstack::tools::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
