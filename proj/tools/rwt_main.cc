#include <iostream>
#include <string>
#include <vector>

#include "rwt/cli/app.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rwt::cli::RunCli(args, std::cout, std::cerr);
}
