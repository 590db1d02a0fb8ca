// Acceptance suite runner: one pass/fail line per criterion, nonzero exit
// if anything fails. Seed and thread count can be overridden through the
// environment (FRAGCHOICE_SEED, FRAGCHOICE_THREADS).
#include <cstdio>
#include <cstdlib>
#include <string>

#include "fragchoice/verification.hpp"

int main() {
  std::uint64_t seed = 42;
  int threads = 0;
  if (const char* s = std::getenv("FRAGCHOICE_SEED")) seed = std::strtoull(s, nullptr, 10);
  if (const char* t = std::getenv("FRAGCHOICE_THREADS")) threads = std::atoi(t);

  int failed = 0;
  auto progress = [&](const fragchoice::CheckResult& r) {
    std::printf("%s  %-36s metric=%-11.4g bound=%-9.4g [%6.1f s]  %s\n",
                r.pass ? "PASS" : "FAIL", r.name.c_str(), r.metric, r.threshold,
                r.seconds, r.detail.c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  };
  fragchoice::run_acceptance(true, seed, threads, progress);
  if (failed) std::printf("%d criterion(s) failed\n", failed);
  else std::printf("all 15 criteria passed\n");
  return failed == 0 ? 0 : 1;
}
