#include "actionmqa/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
  return actionmqa::cli::run(argc, argv, std::cout, std::cerr);
}
