// Acceptance suite: runs every criterion at its pinned size and tolerance
// and prints one PASS/FAIL line per criterion. Exit status is nonzero when
// any criterion fails.

#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "stablebox/experiments.hpp"
#include "stablebox/kernels.hpp"

int main(int argc, char** argv) {
  std::uint64_t seed = 20080125;
  unsigned threads = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc)
      seed = std::strtoull(argv[++i], nullptr, 10);
    else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
      threads = static_cast<unsigned>(std::strtoul(argv[++i], nullptr, 10));
  }

  std::printf("acceptance suite: seed=%llu backend=%s\n",
              static_cast<unsigned long long>(seed),
              std::string(stablebox::kernels::backend_name()).c_str());

  const auto results = stablebox::experiments::run_acceptance_suite(seed,
                                                                    threads);
  bool all = true;
  for (const auto& c : results) {
    std::printf("[%s] %s %s (%.1fs)\n", c.pass ? "PASS" : "FAIL", c.id.c_str(),
                c.name.c_str(), c.wall_seconds);
    for (const auto& m : c.metrics) {
      const std::string tol =
          m.tolerance ? stablebox::experiments::format_double(*m.tolerance)
                      : std::string("-");
      const char* flag = m.pass ? (*m.pass ? "ok" : "FAIL") : "info";
      std::printf("    %-46s value=%-24s tol=%-12s %s\n", m.name.c_str(),
                  stablebox::experiments::format_double(m.value).c_str(),
                  tol.c_str(), flag);
      if (!m.note.empty()) std::printf("        note: %s\n", m.note.c_str());
    }
    std::fflush(stdout);
    all = all && c.pass;
  }
  std::printf("%s\n", all ? "ALL CRITERIA PASS" : "SOME CRITERIA FAILED");
  return all ? 0 : 1;
}
