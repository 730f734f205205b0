#include <csignal>
#include <iostream>
#include <string>
#include <vector>

#include "oba/cli.hpp"

namespace {

void request_stop(int) { oba::g_stop_requested.store(true); }

}  // namespace

int main(int argc, char** argv) {
  std::signal(SIGINT, request_stop);
  std::signal(SIGTERM, request_stop);
  std::vector<std::string> args(argv + 1, argv + argc);
  return oba::cli_dispatch(args, std::cout, std::cerr);
}
