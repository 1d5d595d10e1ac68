#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pe3d {

/// Base of every error thrown by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable configuration. `line` is 0 when the problem is
/// tied to a field rather than to a source line.
class config_error : public error {
 public:
  config_error(std::string field, std::size_t line, const std::string& what)
      : error(format(field, line, what)), field_(std::move(field)), line_(line) {}

  const std::string& field() const noexcept { return field_; }
  std::size_t line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& field, std::size_t line, const std::string& what) {
    std::string out = "config error";
    if (line != 0) out += " at line " + std::to_string(line);
    if (!field.empty()) out += " in field '" + field + "'";
    return out + ": " + what;
  }

  std::string field_;
  std::size_t line_;
};

/// A named invariant does not hold, e.g. `delta_z > 0`.
class invariant_error : public error {
 public:
  invariant_error(std::string constraint, const std::string& detail)
      : error("constraint violated: " + constraint + (detail.empty() ? "" : " (" + detail + ")")),
        constraint_(std::move(constraint)) {}

  const std::string& constraint() const noexcept { return constraint_; }

 private:
  std::string constraint_;
};

class domain_error : public error {
 public:
  using error::error;
};

class shape_error : public error {
 public:
  using error::error;
};

/// Elimination hit a pivot with magnitude below the singularity threshold.
class singular_error : public error {
 public:
  singular_error(std::size_t index, const std::string& what)
      : error(what + " (pivot index " + std::to_string(index) + ")"), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// A batched solve failed; `member` is the lowest failing system index.
class batch_error : public error {
 public:
  batch_error(std::size_t member, std::size_t pivot)
      : error("batch member " + std::to_string(member) + " is singular at pivot " +
              std::to_string(pivot)),
        member_(member),
        pivot_(pivot) {}

  std::size_t member() const noexcept { return member_; }
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t member_;
  std::size_t pivot_;
};

/// One or more per-column tasks threw.
class column_error : public error {
 public:
  column_error(std::vector<std::size_t> columns, const std::string& first_reason)
      : error(format(columns, first_reason)), columns_(std::move(columns)) {}

  const std::vector<std::size_t>& columns() const noexcept { return columns_; }

 private:
  static std::string format(const std::vector<std::size_t>& columns, const std::string& reason) {
    std::string out = "task failed on columns {";
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i != 0) out += ",";
      out += std::to_string(columns[i]);
    }
    return out + "}: " + reason;
  }

  std::vector<std::size_t> columns_;
};

enum class Sweep { depth, azimuth };

/// A range step failed. `index` is the azimuth index m for depth solves and
/// the depth index l for azimuth solves.
class step_error : public error {
 public:
  step_error(std::size_t step, Sweep sweep, std::size_t index, const std::string& reason)
      : error("range step " + std::to_string(step) + " failed in " +
              (sweep == Sweep::depth ? "depth solve at m=" : "azimuth solve at l=") +
              std::to_string(index) + ": " + reason),
        step_(step),
        sweep_(sweep),
        index_(index) {}

  std::size_t step() const noexcept { return step_; }
  Sweep sweep() const noexcept { return sweep_; }
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t step_;
  Sweep sweep_;
  std::size_t index_;
};

}  // namespace pe3d
