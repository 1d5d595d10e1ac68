#pragma once

// Command implementations behind the `pe3d` executable. They take parsed
// arguments and output streams so tests can drive them in-process.

#include <algorithm>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pe3d/config.hpp"
#include "pe3d/farm.hpp"
#include "pe3d/selftest.hpp"
#include "pe3d/tl_io.hpp"
#include "pe3d/tridiag.hpp"

namespace pe3d {

inline constexpr const char* version = "1.0.0";

struct RunArgs {
  std::filesystem::path config;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> workers;
  std::optional<std::filesystem::path> output;
  std::optional<std::size_t> stride;
  std::optional<TlFormat> format;
};

struct BenchArgs {
  std::filesystem::path config;
  std::vector<std::size_t> threads_sweep{1};
  std::vector<std::size_t> workers_sweep{1};
  std::size_t repeats = 3;
  std::optional<std::filesystem::path> output;
  std::vector<std::size_t> kernel_batches{1, 4, 16, 64, 256, 1024};
};

inline const char* manifest_name = "manifest.json";

namespace detail {

inline std::string build_info() {
  std::string out = std::string("pe3d ") + version;
#ifdef __VERSION__
  out += " (" __VERSION__ ")";
#endif
  return out;
}

inline void apply_run_overrides(Scenario& sc, const RunArgs& a) {
  if (a.threads) sc.options.executor.intra_threads = *a.threads;
  if (a.workers) sc.options.executor.freq_workers = *a.workers;
  if (a.output) sc.options.output_dir = *a.output;
  if (a.stride) sc.options.output_stride = *a.stride;
  if (a.format) sc.options.tl_format = *a.format;
  sc.options.executor.validate();
  if (a.stride && *a.stride < 1) throw invariant_error("output_stride >= 1", "");
}

}  // namespace detail

/// Runs every configured frequency and writes one TL file per frequency plus
/// manifest.json. If a previous manifest for the same inputs exists, the new
/// digests are checked against it.
///
/// Exit codes: 0 success, 1 some frequency failed, 2 bad configuration or
/// output directory, 3 digest mismatch against the previous manifest.
inline int cmd_run(const RunArgs& args, std::ostream& out, std::ostream& err) {
  std::optional<Scenario> loaded;
  try {
    loaded.emplace(load_config(args.config));
    detail::apply_run_overrides(*loaded, args);
  } catch (const error& e) {
    err << "pe3d run: " << e.what() << "\n";
    return 2;
  }
  const Scenario& sc = *loaded;
  const auto& dir = sc.options.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    err << "pe3d run: output directory '" << dir.string() << "' is not writable\n";
    return 2;
  }

  const std::string config_digest = sha256_hex(sc.input_bytes);
  nlohmann::json previous;
  if (std::ifstream prev(dir / manifest_name); prev) {
    try {
      prev >> previous;
    } catch (const nlohmann::json::exception&) {
      previous = nullptr;
    }
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto farm = frequency_farm(sc, sc.options.executor);
  const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json manifest;
  manifest["tool"] = detail::build_info();
  manifest["config"] = std::filesystem::absolute(args.config).string();
  manifest["config_sha256"] = config_digest;
  manifest["threads"] = sc.options.executor.intra_threads;
  manifest["workers"] = sc.options.executor.freq_workers;
  manifest["grid"] = {sc.grid.n_range, sc.grid.n_azimuth, sc.grid.n_depth};
  manifest["total_seconds"] = total;
  manifest["files"] = nlohmann::json::array();
  manifest["failures"] = nlohmann::json::array();

  int status = 0;
  for (const auto& o : farm.outcomes) {
    if (!o.ok()) {
      manifest["failures"].push_back({{"frequency_hz", o.frequency}, {"error", o.error}});
      err << "pe3d run: " << format_number(o.frequency) << " Hz failed: " << o.error << "\n";
      status = 1;
      continue;
    }
    const auto& res = *o.result;
    const auto path = write_tl_file(TLGridFile::from_result(res, sc.grid), dir, sc.options.tl_format);
    manifest["files"].push_back({{"frequency_hz", res.frequency},
                                 {"file", path.filename().string()},
                                 {"sha256", sha256_file(path)},
                                 {"seconds", res.seconds},
                                 {"range_samples", res.n_ranges()},
                                 {"clamped_samples", res.clamped}});
    out << "wrote " << path.string() << " (" << res.n_ranges() << " range samples, "
        << std::fixed << std::setprecision(3) << res.seconds << " s)\n";
    out.unsetf(std::ios::fixed);
  }

  if (previous.is_object() && previous.value("config_sha256", "") == config_digest) {
    std::size_t checked = 0, mismatched = 0;
    for (const auto& f : manifest["files"]) {
      for (const auto& p : previous.value("files", nlohmann::json::array())) {
        if (p.value("file", "") != f["file"].get<std::string>()) continue;
        ++checked;
        if (p.value("sha256", "") != f["sha256"].get<std::string>()) {
          ++mismatched;
          err << "pe3d run: digest of " << f["file"].get<std::string>()
              << " differs from the previous run\n";
        }
      }
    }
    manifest["verified_against_previous"] = {{"checked", checked}, {"mismatched", mismatched}};
    out << "verified " << checked - mismatched << "/" << checked
        << " files against the previous manifest\n";
    if (mismatched != 0 && status == 0) status = 3;
  }

  std::ofstream mf(dir / manifest_name, std::ios::trunc);
  mf << manifest.dump(2) << "\n";
  if (!mf) {
    err << "pe3d run: cannot write manifest\n";
    return 2;
  }
  return status;
}

struct KernelBenchRow {
  std::size_t batch_size = 0;
  std::size_t n = 0;
  double systems_per_second = 0.0;
};

/// Single-threaded throughput of the batched kernel for each batch size.
inline std::vector<KernelBenchRow> kernel_benchmark(std::size_t n, Topology topo,
                                                    const std::vector<std::size_t>& batch_sizes,
                                                    double min_seconds = 0.05) {
  std::mt19937_64 rng(7);
  ThreadPool pool(1);
  std::vector<KernelBenchRow> rows;
  for (std::size_t count : batch_sizes) {
    std::vector<TriDiagSystem<complex>> systems;
    for (std::size_t b = 0; b < count; ++b) systems.push_back(random_dominant_system(rng, n, topo));
    const auto batch = SolveBatch<complex>::from_systems(systems);
    std::vector<complex> x(batch.n * batch.count);
    std::size_t solved = 0;
    const auto t0 = std::chrono::steady_clock::now();
    double elapsed = 0.0;
    do {
      solve_batch_into<complex>(batch, x, pool);
      solved += count;
      elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } while (elapsed < min_seconds);
    rows.push_back({count, n, static_cast<double>(solved) / elapsed});
  }
  return rows;
}

inline std::string ceil_div_string(std::size_t a, std::size_t b) {
  return std::to_string((a + b - 1) / b);
}

/// Text table of speedup and efficiency per configuration.
inline std::string render_summary(const std::vector<TimingRecord>& records,
                                  const std::vector<KernelBenchRow>& kernel) {
  std::ostringstream os;
  const unsigned hw = std::thread::hardware_concurrency();
  os << "Scaling summary (baseline " << (records.empty() ? "-" : records.front().label)
     << ", hardware threads " << hw << ")\n";
  os << std::left << std::setw(10) << "workers" << std::setw(10) << "threads" << std::setw(14)
     << "wall_s" << std::setw(10) << "speedup" << std::setw(12) << "efficiency" << std::setw(14)
     << "max_jobs/wkr" << "note\n";
  for (const auto& r : records) {
    os << std::left << std::setw(10) << r.freq_workers << std::setw(10) << r.intra_threads;
    if (r.ok()) {
      os << std::setw(14) << format_error(r.wall_seconds) << std::setw(10) << std::fixed
         << std::setprecision(3) << r.speedup() << std::setw(12) << r.efficiency();
      os.unsetf(std::ios::fixed);
    } else {
      os << std::setw(14) << "void" << std::setw(10) << "-" << std::setw(12) << "-";
    }
    os << std::setw(14) << ceil_div_string(r.frequency_count, r.freq_workers);
    std::string note;
    if (!r.ok()) note = "void: " + r.void_reason;
    else if (hw != 0 && r.resources() > hw) note = "oversubscribed";
    os << note << "\n";
  }
  if (!kernel.empty()) {
    os << "\nTri-diagonal kernel throughput (n = " << kernel.front().n << ", 1 thread)\n";
    os << std::left << std::setw(12) << "batch" << "systems_per_s\n";
    for (const auto& k : kernel)
      os << std::left << std::setw(12) << k.batch_size << format_error(k.systems_per_second) << "\n";
  }
  return os.str();
}

/// Exit codes: 0 all records valid, 1 some records voided, 2 bad input.
inline int cmd_bench(const BenchArgs& args, std::ostream& out, std::ostream& err) {
  std::optional<Scenario> loaded;
  try {
    loaded.emplace(load_config(args.config));
    if (args.output) loaded->options.output_dir = *args.output;
    if (args.repeats < 1) throw invariant_error("repeats >= 1", "");
  } catch (const error& e) {
    err << "pe3d bench: " << e.what() << "\n";
    return 2;
  }
  const Scenario& sc = *loaded;
  std::error_code ec;
  std::filesystem::create_directories(sc.options.output_dir, ec);
  if (ec) {
    err << "pe3d bench: cannot create '" << sc.options.output_dir.string() << "'\n";
    return 2;
  }

  std::vector<TimingRecord> records;
  try {
    HarnessOptions ho;
    ho.repeats = args.repeats;
    ho.scheduling = sc.options.executor.scheduling;
    records = scaling_harness(sc, args.threads_sweep, args.workers_sweep, ho);
  } catch (const error& e) {
    err << "pe3d bench: " << e.what() << "\n";
    return 2;
  }
  const auto kernel = kernel_benchmark(sc.grid.n_depth, Topology::open, args.kernel_batches);

  const auto dir = sc.options.output_dir;
  {
    std::ofstream csv(dir / "timings.csv", std::ios::trunc);
    write_timing_csv(records, csv);
  }
  {
    std::ofstream csv(dir / "kernel_bench.csv", std::ios::trunc);
    csv << "batch_size,n,systems_per_s\n";
    for (const auto& k : kernel)
      csv << k.batch_size << "," << k.n << "," << format_number(k.systems_per_second) << "\n";
  }
  const std::string summary = render_summary(records, kernel);
  {
    std::ofstream txt(dir / "summary.txt", std::ios::trunc);
    txt << summary;
  }
  out << summary;
  const bool all_ok = std::all_of(records.begin(), records.end(), [](const auto& r) { return r.ok(); });
  for (const auto& r : records)
    if (!r.ok()) err << "pe3d bench: " << r.label << " voided: " << r.void_reason << "\n";
  return all_ok ? 0 : 1;
}

}  // namespace pe3d
