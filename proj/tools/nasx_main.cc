#include <iostream>

#include "nasx/cli.h"

int main(int argc, char** argv) {
  return nasx::run_cli(argc, argv, std::cout, std::cerr);
}
