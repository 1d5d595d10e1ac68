#pragma once

// Coarse-grain parallelism across source frequencies, and the timing
// harness that sweeps (threads, workers) configurations.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstddef>
#include <exception>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pe3d/config.hpp"
#include "pe3d/marching.hpp"
#include "pe3d/parallel.hpp"
#include "pe3d/thread_pool.hpp"

namespace pe3d {

/// Static block assignment of `jobs` to `workers`: contiguous index ranges,
/// the first jobs % workers workers taking one extra job. F = 8, W = 3
/// yields loads (3, 3, 2).
inline std::vector<std::vector<std::size_t>> assign_static(std::size_t jobs, std::size_t workers) {
  if (workers == 0) throw invariant_error("freq_workers >= 1", "");
  std::vector<std::vector<std::size_t>> out(workers);
  const std::size_t base = jobs / workers;
  const std::size_t extra = jobs % workers;
  std::size_t next = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t n = base + (w < extra ? 1 : 0);
    for (std::size_t k = 0; k < n; ++k) out[w].push_back(next++);
  }
  return out;
}

inline std::size_t max_load(const std::vector<std::vector<std::size_t>>& assignment) {
  std::size_t out = 0;
  for (const auto& jobs : assignment) out = std::max(out, jobs.size());
  return out;
}

struct FrequencyOutcome {
  double frequency = 0.0;
  std::optional<FrequencyResult> result;
  std::string error;

  bool ok() const { return result.has_value(); }
};

struct FarmResult {
  std::vector<FrequencyOutcome> outcomes;            // in input frequency order
  std::vector<std::vector<std::size_t>> worker_jobs;  // job indices each worker ran, in order

  bool all_ok() const {
    return std::all_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.ok(); });
  }
};

/// Solves every frequency as an independent job. Each worker owns its own
/// intra-step pool of exec.intra_threads threads; nothing is shared between
/// jobs except the read-only scenario. Failures are reported per frequency.
inline FarmResult frequency_farm(const Scenario& sc, std::span<const double> frequencies,
                                 const ExecutorSpec& exec) {
  if (frequencies.empty()) throw invariant_error("at least one frequency", "");
  exec.validate();
  const std::size_t F = frequencies.size();
  const std::size_t W = std::min(exec.freq_workers, F);

  FarmResult farm;
  farm.outcomes.resize(F);
  farm.worker_jobs.resize(W);
  for (std::size_t i = 0; i < F; ++i) farm.outcomes[i].frequency = frequencies[i];

  const auto assignment = assign_static(F, W);
  std::atomic<std::size_t> next_job{0};

  auto run_job = [&](std::size_t i, ThreadPool& pool) {
    auto& slot = farm.outcomes[i];
    try {
      slot.result = run_frequency(sc, frequencies[i], pool);
    } catch (const std::exception& e) {
      slot.error = e.what();
    }
  };

  auto worker = [&](std::size_t w) {
    ThreadPool pool(exec.intra_threads);
    if (exec.scheduling == Scheduling::static_blocks) {
      for (std::size_t i : assignment[w]) {
        farm.worker_jobs[w].push_back(i);
        run_job(i, pool);
      }
    } else {
      for (std::size_t i = next_job++; i < F; i = next_job++) {
        farm.worker_jobs[w].push_back(i);
        run_job(i, pool);
      }
    }
  };

  if (W == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(W);
    for (std::size_t w = 0; w < W; ++w) threads.emplace_back(worker, w);
  }
  return farm;
}

inline FarmResult frequency_farm(const Scenario& sc, const ExecutorSpec& exec) {
  return frequency_farm(sc, sc.source.frequencies, exec);
}

/// One timed configuration. Speedup and efficiency are always recomputed
/// from the stored wall times of this record and its baseline.
struct TimingRecord {
  std::string label;
  std::size_t intra_threads = 1;
  std::size_t freq_workers = 1;
  std::size_t frequency_count = 0;
  std::array<std::size_t, 3> grid_dims{};  // nr, ntheta, nz
  double wall_seconds = 0.0;
  std::string void_reason;  // nonempty when the run failed

  std::string baseline_label;
  double baseline_seconds = 0.0;
  std::size_t baseline_resources = 1;

  bool ok() const { return void_reason.empty() && wall_seconds > 0.0; }
  std::size_t resources() const { return intra_threads * freq_workers; }
  double speedup() const {
    return ok() ? baseline_seconds / wall_seconds : std::numeric_limits<double>::quiet_NaN();
  }
  double efficiency() const {
    return speedup() / (static_cast<double>(resources()) / static_cast<double>(baseline_resources));
  }
};

/// Points `rec` at `base` as its baseline.
inline void set_baseline(TimingRecord& rec, const TimingRecord& base) {
  rec.baseline_label = base.label;
  rec.baseline_seconds = base.wall_seconds;
  rec.baseline_resources = base.resources();
}

/// T(base) / T(doubled): the gain of a doubling comparison such as going
/// from 3 workers x 4 threads to 6 x 4.
inline double doubling_gain(const TimingRecord& base, const TimingRecord& doubled) {
  return base.wall_seconds / doubled.wall_seconds;
}

inline std::string config_label(std::size_t threads, std::size_t workers) {
  return std::to_string(workers) + "x" + std::to_string(threads);
}

struct HarnessOptions {
  std::size_t repeats = 3;
  bool warmup = true;
  Scheduling scheduling = Scheduling::static_blocks;
};

/// Times the scenario for every (threads, workers) pair, taking the minimum
/// over `repeats` runs after an untimed warm-up. Records are measured
/// against the 1x1 configuration, which is run first if the sweep lacks it.
inline std::vector<TimingRecord> scaling_harness(const Scenario& sc,
                                                 std::span<const std::size_t> thread_counts,
                                                 std::span<const std::size_t> worker_counts,
                                                 const HarnessOptions& opt = {}) {
  if (thread_counts.empty() || worker_counts.empty())
    throw invariant_error("sweep lists nonempty", "");
  if (opt.repeats < 1) throw invariant_error("repeats >= 1", "");
  for (auto c : thread_counts)
    if (c < 1) throw invariant_error("thread counts >= 1", "");
  for (auto c : worker_counts)
    if (c < 1) throw invariant_error("worker counts >= 1", "");

  std::vector<std::pair<std::size_t, std::size_t>> configs;
  for (auto w : worker_counts)
    for (auto t : thread_counts) configs.emplace_back(t, w);
  if (std::find(configs.begin(), configs.end(), std::pair<std::size_t, std::size_t>{1, 1}) ==
      configs.end())
    configs.insert(configs.begin(), {1, 1});
  else
    std::stable_partition(configs.begin(), configs.end(),
                          [](const auto& c) { return c.first == 1 && c.second == 1; });

  std::vector<TimingRecord> records;
  for (const auto& [threads, workers] : configs) {
    TimingRecord rec;
    rec.label = config_label(threads, workers);
    rec.intra_threads = threads;
    rec.freq_workers = workers;
    rec.frequency_count = sc.source.frequencies.size();
    rec.grid_dims = {sc.grid.n_range, sc.grid.n_azimuth, sc.grid.n_depth};
    ExecutorSpec exec{threads, workers, sc.options.executor.pinning, opt.scheduling};
    try {
      auto once = [&] {
        const auto t0 = std::chrono::steady_clock::now();
        const auto farm = frequency_farm(sc, exec);
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!farm.all_ok()) {
          for (const auto& o : farm.outcomes)
            if (!o.ok()) throw error("frequency " + std::to_string(o.frequency) + ": " + o.error);
        }
        return dt;
      };
      if (opt.warmup) once();
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < opt.repeats; ++k) best = std::min(best, once());
      rec.wall_seconds = std::max(best, 1e-9);
    } catch (const std::exception& e) {
      rec.void_reason = e.what();
    }
    records.push_back(std::move(rec));
  }

  const TimingRecord base = records.front();
  for (auto& r : records) set_baseline(r, base);
  return records;
}

}  // namespace pe3d
