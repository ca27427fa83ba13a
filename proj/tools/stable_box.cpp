#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "stablebox/experiments.hpp"
#include "stablebox/kernels.hpp"
#include "stablebox/lepage.hpp"
#include "stablebox/limit_law.hpp"
#include "stablebox/rng.hpp"
#include "stablebox/stable.hpp"
#include "stablebox/version.hpp"

namespace {

namespace ex = stablebox::experiments;

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << content;
}

int emit_report(const ex::ExperimentReport& report) {
  const std::string csv = ex::report_csv(report);
  if (!report.config.output_path.empty()) {
    if (report.config.format == "json")
      write_file(report.config.output_path, ex::report_json_sidecar(report));
    else
      write_file(report.config.output_path, csv);
    write_file(report.config.output_path + ".meta.json",
               ex::report_json_sidecar(report));
  }
  std::cout << csv;
  std::cerr << "wall_seconds=" << ex::format_double(report.wall_seconds)
            << " backend=" << report.kernel_backend << "\n";
  return report.all_pass() ? 0 : 2;
}

int cmd_run(const std::string& config_path,
            const std::optional<std::uint64_t>& seed,
            const std::vector<std::string>& overrides) {
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "cannot read config: " << config_path << "\n";
    return 1;
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  ex::ExperimentConfig cfg = ex::config_from_json_text(text);
  if (seed) cfg.seed = *seed;
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("override must be key=value: " + ov);
    ex::apply_override(cfg, ov.substr(0, eq), ov.substr(eq + 1));
  }
  return emit_report(ex::run_experiment(cfg));
}

int cmd_verify(std::uint64_t seed, unsigned threads) {
  const auto results = ex::run_acceptance_suite(seed, threads);
  bool all = true;
  for (const auto& c : results) {
    std::printf("[%s] %s %s (%.1fs)\n", c.pass ? "PASS" : "FAIL",
                c.id.c_str(), c.name.c_str(), c.wall_seconds);
    for (const auto& m : c.metrics) {
      std::string tol = m.tolerance ? ex::format_double(*m.tolerance) : "-";
      std::printf("    %-44s value=%-24s tol=%s %s\n", m.name.c_str(),
                  ex::format_double(m.value).c_str(), tol.c_str(),
                  m.pass ? (*m.pass ? "ok" : "FAIL") : "info");
    }
    all = all && c.pass;
  }
  std::printf("%s\n", all ? "ALL CRITERIA PASS" : "CRITERIA FAILED");
  return all ? 0 : 2;
}

int cmd_sample(const std::string& kind, double alpha, double p,
               std::size_t count, std::uint64_t seed, std::size_t k,
               const std::string& out_path) {
  stablebox::rng::RngStream stream(seed, 0);
  std::string out;
  if (kind == "stable") {
    out = "value\n";
    const auto xs = stablebox::stable::sample_stable(
        stablebox::stable::StableParams(alpha, 2.0 * p - 1.0), count, stream);
    for (double v : xs) out += ex::format_double(v) + "\n";
  } else if (kind == "eta") {
    out = "eta,z\n";
    const stablebox::stable::TailParams tp(alpha, p);
    const stablebox::lepage::EtaSampler sampler(tp, k);
    stablebox::lepage::Workspace ws;
    for (std::size_t i = 0; i < count; ++i) {
      const auto d = sampler.draw(stream, ws);
      out += ex::format_double(d.eta) + "," + ex::format_double(d.z) + "\n";
    }
  } else if (kind == "bridge") {
    out = "draw,t,w,b,z\n";
    const stablebox::stable::TailParams tp(alpha, p);
    std::vector<double> grid;
    for (int i = 0; i <= 20; ++i) grid.push_back(i / 20.0);
    const stablebox::lepage::BridgeSampler sampler(tp, grid, k);
    stablebox::lepage::Workspace ws;
    for (std::size_t i = 0; i < count; ++i) {
      const auto path = sampler.draw(stream, ws);
      for (std::size_t g = 0; g < path.grid.size(); ++g)
        out += std::to_string(i) + "," + ex::format_double(path.grid[g]) +
               "," + ex::format_double(path.w_values[g]) + "," +
               ex::format_double(path.b_values[g]) + "," +
               ex::format_double(path.z) + "\n";
    }
  } else if (kind == "r-limit") {
    out = "draw,t,value\n";
    const stablebox::stable::TailParams tp(alpha, p);
    const auto env = stablebox::lepage::sample_environment(k, stream);
    const double ts[3] = {0.25, 0.5, 0.75};
    const auto draws = stablebox::limit_law::sample_r_conditional(
        env, tp, ts, k, count, stream);
    for (std::size_t i = 0; i < draws.size(); ++i)
      for (std::size_t j = 0; j < draws[i].ts.size(); ++j)
        out += std::to_string(i) + "," + ex::format_double(draws[i].ts[j]) +
               "," + ex::format_double(draws[i].values[j]) + "\n";
  } else {
    std::cerr << "unknown sample kind: " << kind << "\n";
    return 1;
  }
  if (out_path.empty())
    std::cout << out;
  else
    write_file(out_path, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stable-box: CUSUM and permutation statistics under heavy "
               "tails, with seeded Monte Carlo experiment suites"};
  app.set_version_flag("--version", stablebox::kVersion);
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run one experiment from a config");
  std::string config_path;
  std::optional<std::uint64_t> run_seed;
  std::vector<std::string> overrides;
  run->add_option("--config", config_path, "JSON config file")->required();
  run->add_option("--seed", run_seed, "override the config seed");
  run->add_option("--override", overrides,
                  "key=value config override (repeatable)");

  // verify
  auto* verify = app.add_subcommand("verify", "run acceptance experiments");
  std::string what{"all"};
  std::uint64_t verify_seed = 20080125;
  unsigned verify_threads = 0;
  verify->add_option("what", what, "what to verify (all)");
  verify->add_option("--seed", verify_seed, "master seed");
  verify->add_option("--threads", verify_threads, "worker threads (0 = auto)");

  // sample
  auto* sample = app.add_subcommand("sample", "draw from one of the samplers");
  std::string kind;
  double alpha = 1.5, p = 0.5;
  std::size_t count = 1000, k = 10000;
  std::uint64_t sample_seed = 1;
  std::string out_path;
  sample->add_option("kind", kind, "stable | eta | bridge | r-limit")
      ->required();
  sample->add_option("--alpha", alpha, "stability / tail index");
  sample->add_option("--p", p, "right-tail weight");
  sample->add_option("--count", count, "number of draws");
  sample->add_option("--seed", sample_seed, "seed");
  sample->add_option("--k", k, "series truncation");
  sample->add_option("--out", out_path, "output CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(config_path, run_seed, overrides);
    if (*verify) {
      if (what != "all") {
        std::cerr << "only 'verify all' is supported\n";
        return 1;
      }
      return cmd_verify(verify_seed, verify_threads);
    }
    if (*sample)
      return cmd_sample(kind, alpha, p, count, sample_seed, k, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
