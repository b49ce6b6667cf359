#include <string>
#include <vector>

#include "nes/cli.hpp"

int main(int argc, char** argv) {
  return nes::dispatch(std::vector<std::string>(argv + 1, argv + argc));
}
