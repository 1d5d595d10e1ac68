#pragma once

// Grid, medium and source description, the starter field, and the
// pressure / transmission-loss reconstruction.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pe3d/error.hpp"

namespace pe3d {

using complex = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// TL reported for samples whose pressure magnitude is (numerically) zero.
inline constexpr double tl_floor_db = 300.0;

enum class AzimuthTopology { periodic, sector };

inline const char* to_string(AzimuthTopology t) {
  return t == AzimuthTopology::periodic ? "periodic" : "sector";
}

/// Cylindrical discretization. Range samples sit at r_start + j*delta_r,
/// azimuth samples at m*delta_theta, depth samples at l*delta_z with the
/// pressure-release surface at l = 0.
struct Grid3D {
  std::size_t n_range = 0;
  std::size_t n_azimuth = 0;
  std::size_t n_depth = 0;
  double delta_r = 0.0;
  double delta_theta = 0.0;
  double delta_z = 0.0;
  double r_start = 0.0;
  AzimuthTopology azimuth_topology = AzimuthTopology::periodic;

  double max_range() const { return static_cast<double>(n_range) * delta_r; }
  double bottom_depth() const { return static_cast<double>(n_depth - 1) * delta_z; }
  double depth(std::size_t l) const { return static_cast<double>(l) * delta_z; }
  double azimuth(std::size_t m) const { return static_cast<double>(m) * delta_theta; }
  double range(std::size_t j) const { return r_start + static_cast<double>(j) * delta_r; }
  std::size_t points_per_slab() const { return n_azimuth * n_depth; }

  /// Number of marching steps taken while r < max_range.
  std::size_t step_count() const {
    const double remaining = (max_range() - r_start) / delta_r;
    if (remaining <= 1e-9) return 0;
    return static_cast<std::size_t>(std::ceil(remaining - 1e-9));
  }

  void validate() const {
    auto require = [](bool ok, const char* constraint, const std::string& detail = {}) {
      if (!ok) throw invariant_error(constraint, detail);
    };
    require(n_range >= 3, "n_range >= 3", "n_range = " + std::to_string(n_range));
    require(n_azimuth >= 3, "n_azimuth >= 3", "n_azimuth = " + std::to_string(n_azimuth));
    require(n_depth >= 3, "n_depth >= 3", "n_depth = " + std::to_string(n_depth));
    require(delta_r > 0.0, "delta_r > 0");
    require(delta_theta > 0.0, "delta_theta > 0");
    require(delta_z > 0.0, "delta_z > 0");
    require(r_start > 0.0, "r_start > 0");
    if (azimuth_topology == AzimuthTopology::periodic) {
      const double span = static_cast<double>(n_azimuth) * delta_theta;
      require(std::abs(span - two_pi) <= 1e-9 * two_pi, "n_azimuth * delta_theta = 2*pi (periodic)",
              "span = " + std::to_string(span) + " rad");
    }
  }
};

enum class DepthInterpolation { linear, nearest };

/// Sound speed versus depth. Depths strictly increasing; values outside the
/// sampled interval take the nearest end value.
struct DepthProfile {
  std::vector<double> depths;
  std::vector<double> speeds;

  double speed_at(double z, DepthInterpolation interp) const {
    if (depths.size() == 1 || z <= depths.front()) return speeds.front();
    if (z >= depths.back()) return speeds.back();
    const auto hi = static_cast<std::size_t>(
        std::upper_bound(depths.begin(), depths.end(), z) - depths.begin());
    const std::size_t lo = hi - 1;
    const double t = (z - depths[lo]) / (depths[hi] - depths[lo]);
    if (interp == DepthInterpolation::nearest) return t < 0.5 ? speeds[lo] : speeds[hi];
    return speeds[lo] + t * (speeds[hi] - speeds[lo]);
  }
};

/// Profiles on a (range x azimuth) lattice, looked up by nearest node.
/// `profiles[ir * azimuths.size() + ia]`.
struct SoundSpeedField {
  std::vector<double> ranges{0.0};
  std::vector<double> azimuths{0.0};
  std::vector<DepthProfile> profiles;
  DepthInterpolation interpolation = DepthInterpolation::linear;

  static SoundSpeedField uniform(DepthProfile profile,
                                 DepthInterpolation interp = DepthInterpolation::linear) {
    SoundSpeedField f;
    f.profiles.push_back(std::move(profile));
    f.interpolation = interp;
    return f;
  }

  static SoundSpeedField homogeneous(double speed) { return uniform({{0.0}, {speed}}); }
};

struct Bathymetry {
  std::vector<double> ranges{0.0};
  std::vector<double> depths;

  static Bathymetry flat(double depth) { return {{0.0}, {depth}}; }
};

/// Artificial attenuation below `start_depth`, ramping quadratically to
/// `max_attenuation` (imaginary part of n) at the grid bottom.
struct Absorber {
  double start_depth = 0.0;
  double max_attenuation = 0.0;
};

namespace detail {

inline std::size_t nearest_index(const std::vector<double>& nodes, double x) {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), x);
  if (it == nodes.begin()) return 0;
  if (it == nodes.end()) return nodes.size() - 1;
  const auto hi = static_cast<std::size_t>(it - nodes.begin());
  return (x - nodes[hi - 1] <= nodes[hi] - x) ? hi - 1 : hi;
}

inline std::size_t nearest_angle(const std::vector<double>& nodes, double theta, bool periodic) {
  if (!periodic) return nearest_index(nodes, theta);
  std::size_t best = 0;
  double best_dist = 1e300;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    double d = std::fmod(std::abs(theta - nodes[i]), two_pi);
    d = std::min(d, two_pi - d);
    if (d < best_dist) {
      best_dist = d;
      best = i;
    }
  }
  return best;
}

inline bool strictly_increasing(const std::vector<double>& v) {
  return std::adjacent_find(v.begin(), v.end(), std::greater_equal<>()) == v.end();
}

}  // namespace detail

/// Medium description bound to the extent of one grid. Immutable after
/// construction and safe to share between threads.
class Environment {
 public:
  Environment(const Grid3D& grid, double reference_speed, SoundSpeedField sound_speed,
              Bathymetry water_depth, Absorber absorber)
      : c0_(reference_speed),
        sound_speed_(std::move(sound_speed)),
        water_depth_(std::move(water_depth)),
        absorber_(absorber),
        max_range_(grid.max_range()),
        bottom_depth_(grid.bottom_depth()),
        periodic_(grid.azimuth_topology == AzimuthTopology::periodic) {
    validate();
  }

  double reference_speed() const { return c0_; }
  const SoundSpeedField& sound_speed() const { return sound_speed_; }
  const Bathymetry& bathymetry() const { return water_depth_; }
  const Absorber& absorber() const { return absorber_; }
  double max_range() const { return max_range_; }
  double bottom_depth() const { return bottom_depth_; }

  std::size_t profile_index(double r, double theta) const {
    const std::size_t ir = detail::nearest_index(sound_speed_.ranges, r);
    const std::size_t ia = detail::nearest_angle(sound_speed_.azimuths, theta, periodic_);
    return ir * sound_speed_.azimuths.size() + ia;
  }

  double speed(double r, double theta, double z) const {
    return sound_speed_.profiles[profile_index(r, theta)].speed_at(z, sound_speed_.interpolation);
  }

  double water_depth(double r) const {
    return water_depth_.depths[detail::nearest_index(water_depth_.ranges, r)];
  }

  /// Imaginary part of the refraction index contributed by the absorber.
  double attenuation(double z) const {
    if (z <= absorber_.start_depth) return 0.0;
    const double t = (z - absorber_.start_depth) / (bottom_depth_ - absorber_.start_depth);
    return absorber_.max_attenuation * t * t;
  }

  bool contains(double r, double z) const {
    return r >= 0.0 && r <= max_range_ * (1.0 + 1e-12) && z >= 0.0 &&
           z <= bottom_depth_ * (1.0 + 1e-12);
  }

 private:
  void validate() const {
    auto require = [](bool ok, const char* constraint, const std::string& detail = {}) {
      if (!ok) throw invariant_error(constraint, detail);
    };
    require(c0_ > 0.0, "c0 > 0");
    const auto& f = sound_speed_;
    require(!f.ranges.empty() && !f.azimuths.empty() && detail::strictly_increasing(f.ranges) &&
                detail::strictly_increasing(f.azimuths),
            "sound-speed lattice nodes strictly increasing");
    require(f.profiles.size() == f.ranges.size() * f.azimuths.size(),
            "one sound-speed profile per lattice node");
    for (const auto& p : f.profiles) {
      require(!p.depths.empty() && p.depths.size() == p.speeds.size(),
              "profile depths and speeds have equal nonzero length");
      require(detail::strictly_increasing(p.depths), "profile depths strictly increasing");
      for (double c : p.speeds)
        require(c > 100.0 && c < 100000.0, "100 < sound speed < 100000 m/s",
                "c = " + std::to_string(c));
    }
    require(!water_depth_.depths.empty() && water_depth_.ranges.size() == water_depth_.depths.size() &&
                detail::strictly_increasing(water_depth_.ranges),
            "bathymetry samples well formed");
    for (double d : water_depth_.depths) require(d > 0.0, "water depth > 0");
    require(absorber_.start_depth < bottom_depth_, "absorber.start_depth < grid bottom depth",
            std::to_string(absorber_.start_depth) + " >= " + std::to_string(bottom_depth_));
    require(absorber_.max_attenuation >= 0.0, "absorber.max_attenuation >= 0");
  }

  double c0_;
  SoundSpeedField sound_speed_;
  Bathymetry water_depth_;
  Absorber absorber_;
  double max_range_;
  double bottom_depth_;
  bool periodic_;
};

enum class StarterKind { gaussian };

struct SourceSpec {
  std::vector<double> frequencies;
  double depth = 0.0;
  StarterKind starter = StarterKind::gaussian;

  void validate(const Environment& env) const {
    if (frequencies.empty()) throw invariant_error("at least one source frequency", "");
    for (double f : frequencies)
      if (!(f > 0.0)) throw invariant_error("frequency > 0", "f = " + std::to_string(f));
    const double d0 = env.water_depth(0.0);
    if (!(depth > 0.0 && depth < d0))
      throw invariant_error("0 < source depth < water depth at r = 0",
                            "z_s = " + std::to_string(depth) + ", D(0) = " + std::to_string(d0));
  }
};

/// Complex field on one (azimuth x depth) slice. Storage is azimuth-major so
/// each depth column is contiguous.
class FieldSlab {
 public:
  FieldSlab() = default;
  FieldSlab(std::size_t n_azimuth, std::size_t n_depth, double range = 0.0)
      : n_azimuth_(n_azimuth), n_depth_(n_depth), range_(range), values_(n_azimuth * n_depth) {}

  std::size_t n_azimuth() const { return n_azimuth_; }
  std::size_t n_depth() const { return n_depth_; }
  double range() const { return range_; }
  void set_range(double r) { range_ = r; }

  complex& operator()(std::size_t m, std::size_t l) { return values_[m * n_depth_ + l]; }
  const complex& operator()(std::size_t m, std::size_t l) const { return values_[m * n_depth_ + l]; }

  std::span<complex> column(std::size_t m) { return {values_.data() + m * n_depth_, n_depth_}; }
  std::span<const complex> column(std::size_t m) const {
    return {values_.data() + m * n_depth_, n_depth_};
  }

  std::span<complex> values() { return values_; }
  std::span<const complex> values() const { return values_; }

  bool matches(const Grid3D& g) const { return n_azimuth_ == g.n_azimuth && n_depth_ == g.n_depth; }

  double max_abs() const {
    double out = 0.0;
    for (const auto& v : values_) out = std::max(out, std::abs(v));
    return out;
  }

  friend bool operator==(const FieldSlab&, const FieldSlab&) = default;

 private:
  std::size_t n_azimuth_ = 0;
  std::size_t n_depth_ = 0;
  double range_ = 0.0;
  std::vector<complex> values_;
};

inline double wavenumber(double frequency_hz, double c0) {
  if (!(frequency_hz > 0.0) || !(c0 > 0.0))
    throw domain_error("wavenumber requires f > 0 and c0 > 0");
  return two_pi * frequency_hz / c0;
}

/// n = c0 / c(r, theta, z) + i * absorber(z).
inline complex refraction_index(const Environment& env, double r, double theta, double z) {
  if (!env.contains(r, z) || !std::isfinite(theta))
    throw domain_error("refraction_index: point (r=" + std::to_string(r) + ", z=" +
                       std::to_string(z) + ") outside the grid domain");
  return {env.reference_speed() / env.speed(r, theta, z), env.attenuation(z)};
}

/// Refraction index sampled on the depth grid for every sound-speed lattice
/// node, built once before marching so the range loop never touches the
/// profile data.
class MediumTable {
 public:
  MediumTable(const Grid3D& grid, const Environment& env) : grid_(grid), env_(&env) {
    const auto& f = env.sound_speed();
    columns_.resize(f.profiles.size());
    for (std::size_t p = 0; p < f.profiles.size(); ++p) {
      auto& col = columns_[p];
      col.resize(grid.n_depth);
      for (std::size_t l = 0; l < grid.n_depth; ++l) {
        const double z = grid.depth(l);
        col[l] = {env.reference_speed() / f.profiles[p].speed_at(z, f.interpolation),
                  env.attenuation(z)};
      }
    }
  }

  const Grid3D& grid() const { return grid_; }
  const Environment& environment() const { return *env_; }

  std::span<const complex> column(double r, std::size_t m) const {
    return columns_[env_->profile_index(r, grid_.azimuth(m))];
  }

  /// One n column per azimuth index at range r.
  std::vector<std::span<const complex>> slice(double r) const {
    std::vector<std::span<const complex>> out(grid_.n_azimuth);
    for (std::size_t m = 0; m < grid_.n_azimuth; ++m) out[m] = column(r, m);
    return out;
  }

 private:
  Grid3D grid_;
  const Environment* env_;
  std::vector<std::vector<complex>> columns_;
};

/// Gaussian starter sqrt(k0) * exp(-(k0^2/2) (z - z_s)^2), the same at every
/// azimuth, with the surface sample forced to zero.
inline FieldSlab gaussian_starter(const Grid3D& grid, const SourceSpec& src, double k0) {
  if (!(src.depth > 0.0 && src.depth < grid.bottom_depth()))
    throw domain_error("gaussian_starter: source depth must lie strictly inside the depth grid");
  FieldSlab slab(grid.n_azimuth, grid.n_depth, grid.r_start);
  const double amp = std::sqrt(k0);
  std::vector<complex> col(grid.n_depth);
  for (std::size_t l = 1; l < grid.n_depth; ++l) {
    const double d = k0 * (grid.depth(l) - src.depth);
    col[l] = amp * std::exp(-0.5 * d * d);
  }
  for (std::size_t m = 0; m < grid.n_azimuth; ++m)
    std::copy(col.begin(), col.end(), slab.column(m).begin());
  return slab;
}

/// Far-field Hankel envelope exp(i k0 r) / sqrt(r).
inline complex hankel_factor(double k0, double r) {
  if (!(r > 0.0)) throw domain_error("hankel_factor: r must be > 0");
  return std::polar(1.0 / std::sqrt(r), k0 * r);
}

struct TransmissionLoss {
  double db;
  bool clamped;
};

/// TL = -20 log10 |u w| re unit pressure at 1 m; clamped to tl_floor_db.
inline TransmissionLoss transmission_loss(complex u, complex w) {
  const double mag = std::abs(u * w);
  if (!(mag > 0.0)) return {tl_floor_db, true};
  const double tl = -20.0 * std::log10(mag);
  if (!(tl < tl_floor_db)) return {tl_floor_db, true};
  return {tl, false};
}

}  // namespace pe3d
