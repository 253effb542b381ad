#include "fns/cli.hpp"

int main(int argc, char** argv) {
  return fns::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
