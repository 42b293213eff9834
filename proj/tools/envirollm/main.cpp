#include <csignal>
#include <iostream>
#include <stop_token>
#include <thread>

#include <pthread.h>

#include "cli.hpp"

int main(int argc, char** argv) {
  // First SIGINT/SIGTERM requests a stop, the second exits at once.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::stop_source stop;
  std::thread([signals, stop]() mutable {
    int received = 0;
    sigwait(&signals, &received);
    stop.request_stop();
    // a second signal exits immediately
    sigwait(&signals, &received);
    std::_Exit(130);
  }).detach();

  envirollm::cli::CliContext ctx{std::cout, std::cerr, std::cin};
  ctx.stop = stop.get_token();
  return envirollm::cli::run({argv + 1, argv + argc}, ctx);
}
