#include <string>
#include <vector>

#include "sbx/cli.hpp"

int main(int argc, char** argv) {
  return sbx::run_command(std::vector<std::string>(argv + 1, argv + argc));
}
