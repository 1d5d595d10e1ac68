// pe3d command-line front end: run, bench, selftest.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pe3d/pe3d.hpp"

namespace {

std::vector<std::size_t> parse_sweep(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& tok : pe3d::detail::split(text, ',')) {
    const auto t = pe3d::detail::trim(tok);
    if (t.empty()) continue;
    std::size_t pos = 0;
    const long long v = std::stoll(std::string(t), &pos);
    if (pos != t.size() || v < 1) throw CLI::ValidationError("sweep", "'" + std::string(t) + "' is not a count >= 1");
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw CLI::ValidationError("sweep", "empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pe3d: 3D wide-angle parabolic-equation transmission-loss solver"};
  app.set_version_flag("--version", std::string("pe3d ") + pe3d::version);
  app.require_subcommand(1);

  pe3d::RunArgs run;
  std::string run_format;
  auto* run_cmd = app.add_subcommand("run", "Solve every configured frequency and write TL files");
  run_cmd->add_option("--config", run.config, "Scenario INI file")->required();
  run_cmd->add_option("--threads", run.threads, "Intra-step threads per frequency")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--workers", run.workers, "Concurrent frequency workers")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--output", run.output, "Output directory");
  run_cmd->add_option("--stride", run.stride, "Range-sample stride for TL output")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--format", run_format, "TL file format")
      ->check(CLI::IsMember({"csv", "binary"}));

  pe3d::BenchArgs bench;
  std::string threads_sweep = "1", workers_sweep = "1";
  auto* bench_cmd = app.add_subcommand("bench", "Time a grid of (threads, workers) configurations");
  bench_cmd->add_option("--config", bench.config, "Scenario INI file")->required();
  bench_cmd->add_option("--threads-sweep", threads_sweep, "Comma-separated thread counts");
  bench_cmd->add_option("--workers-sweep", workers_sweep, "Comma-separated worker counts");
  bench_cmd->add_option("--repeats", bench.repeats, "Timed repeats per configuration")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--output", bench.output, "Output directory");

  pe3d::SelftestOptions st;
  auto* self_cmd = app.add_subcommand("selftest", "Run the built-in invariant checks");
  self_cmd->add_option("--seed", st.seed, "RNG seed");
  self_cmd->add_flag("--inject-solver-fault", st.corrupt_solver)->group("");

  try {
    app.parse(argc, argv);
    if (*bench_cmd) {
      bench.threads_sweep = parse_sweep(threads_sweep);
      bench.workers_sweep = parse_sweep(workers_sweep);
    }
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "pe3d: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*run_cmd) {
      if (run_format == "csv") run.format = pe3d::TlFormat::csv;
      if (run_format == "binary") run.format = pe3d::TlFormat::binary;
      return pe3d::cmd_run(run, std::cout, std::cerr);
    }
    if (*bench_cmd) return pe3d::cmd_bench(bench, std::cout, std::cerr);
    return pe3d::cmd_selftest(st, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "pe3d: " << e.what() << "\n";
    return 1;
  }
}
