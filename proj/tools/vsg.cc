#include <iostream>
#include <string>
#include <vector>

#include "vsg/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return vsg::RunCli(args, std::cout, std::cerr);
}
