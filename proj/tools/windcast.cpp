#include <string>
#include <vector>

#include "windcast/cli.hpp"

int main(int argc, char** argv) {
  return windcast::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
