#include <string>
#include <vector>

#include "binsim/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return binsim::run_cli(args);
}
