#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "pe3d/env_model.hpp"
#include "pe3d/error.hpp"
#include "pe3d/thread_pool.hpp"

namespace pe3d {

enum class Pinning { none, compact };
enum class Scheduling { static_blocks, dynamic };

/// Thread counts for the two parallel levels: threads inside one range step
/// and concurrent frequency jobs. Pinning is advisory and currently unused
/// by the executor.
struct ExecutorSpec {
  std::size_t intra_threads = 1;
  std::size_t freq_workers = 1;
  Pinning pinning = Pinning::none;
  Scheduling scheduling = Scheduling::static_blocks;

  void validate() const {
    if (intra_threads < 1) throw invariant_error("intra_threads >= 1", "");
    if (freq_workers < 1) throw invariant_error("freq_workers >= 1", "");
  }
};

inline constexpr const char* threads_env_var = "PE3D_THREADS";
inline constexpr const char* workers_env_var = "PE3D_WORKERS";

/// Positive integer from the environment, or `fallback` when unset/invalid.
inline std::size_t count_from_env(const char* name, std::size_t fallback) {
  const char* raw = std::getenv(name);
  if (raw == nullptr || *raw == '\0') return fallback;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 1) return fallback;
  return static_cast<std::size_t>(v);
}

/// Applies task(m, in_column, out_column) to every azimuth column of `slab`,
/// with contiguous blocks of columns per thread. Any failure discards the
/// result and throws column_error listing every failing column.
template <class Task>
FieldSlab parallel_map_columns(const FieldSlab& slab, Task&& task, ThreadPool& pool) {
  FieldSlab out(slab.n_azimuth(), slab.n_depth(), slab.range());
  std::mutex mu;
  std::vector<std::pair<std::size_t, std::string>> failures;

  pool.for_blocks(slab.n_azimuth(), [&](std::size_t first, std::size_t last) {
    for (std::size_t m = first; m < last; ++m) {
      try {
        task(m, slab.column(m), out.column(m));
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        failures.emplace_back(m, e.what());
      }
    }
  });

  if (failures.empty()) return out;
  std::sort(failures.begin(), failures.end());
  std::vector<std::size_t> columns;
  for (const auto& f : failures) columns.push_back(f.first);
  throw column_error(std::move(columns), failures.front().second);
}

template <class Task>
FieldSlab parallel_map_columns(const FieldSlab& slab, Task&& task, std::size_t threads) {
  ThreadPool pool(threads);
  return parallel_map_columns(slab, std::forward<Task>(task), pool);
}

}  // namespace pe3d
