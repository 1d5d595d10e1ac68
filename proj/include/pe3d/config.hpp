#pragma once

// INI-style run configuration. Sections [grid], [environment], [source] and
// [run]; keys are listed in README.md. Angles are given in degrees and
// converted to radians here. Everything, including an external sound-speed
// file, is read and validated before any marching starts.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "pe3d/env_model.hpp"
#include "pe3d/error.hpp"
#include "pe3d/parallel.hpp"

namespace pe3d {

enum class Mode { run, bench, selftest };
enum class TlFormat { csv, binary };

struct RunOptions {
  Mode mode = Mode::run;
  std::filesystem::path output_dir = "pe3d_out";
  std::size_t output_stride = 0;  // 0: choose so that at most 512 range samples are kept
  TlFormat tl_format = TlFormat::csv;
  ExecutorSpec executor;
};

inline constexpr std::size_t max_auto_range_samples = 512;

/// Stride actually used for TL output.
inline std::size_t resolve_output_stride(const Grid3D& grid, const RunOptions& opt) {
  if (opt.output_stride >= 1) return opt.output_stride;
  const std::size_t samples = grid.step_count() + 1;
  return (samples + max_auto_range_samples - 1) / max_auto_range_samples;
}

/// A fully validated problem description.
struct Scenario {
  Grid3D grid;
  Environment environment;
  SourceSpec source;
  RunOptions options;
  std::string input_bytes;  // config text plus referenced files, for digests
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos
                                                                       : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

/// Reads key/value pairs and remembers the source line of every key so value
/// errors can point at it.
class ConfigReader {
 public:
  ConfigReader(const std::string& text, std::string origin) : origin_(std::move(origin)) {
    std::istringstream in(text);
    try {
      boost::property_tree::ini_parser::read_ini(in, tree_);
    } catch (const boost::property_tree::ini_parser_error& e) {
      throw config_error("", e.line(), origin_ + ": " + e.message());
    }
    std::istringstream scan(text);
    std::string line, section;
    for (std::size_t no = 1; std::getline(scan, line); ++no) {
      const std::string t = trim(line);
      if (t.empty() || t[0] == ';' || t[0] == '#') continue;
      if (t.front() == '[' && t.back() == ']') {
        section = trim(std::string_view(t).substr(1, t.size() - 2));
        continue;
      }
      const auto eq = t.find('=');
      if (eq != std::string::npos) lines_[section + "." + trim(t.substr(0, eq))] = no;
    }
  }

  void check_known(const std::map<std::string, std::set<std::string>>& schema) const {
    for (const auto& [section, keys] : tree_) {
      const auto it = schema.find(section);
      if (it == schema.end()) throw config_error(section, 0, "unknown section [" + section + "]");
      for (const auto& [key, _] : keys)
        if (!it->second.count(key))
          fail(section + "." + key, "unknown key (see README for the schema)");
    }
  }

  std::optional<std::string> raw(const std::string& path) const {
    const auto v = tree_.get_optional<std::string>(path);
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::string require(const std::string& path) const {
    auto v = raw(path);
    if (!v || v->empty()) fail(path, "required key is missing");
    return *v;
  }

  double number(const std::string& path) const { return to_number(path, require(path)); }

  std::optional<double> number_opt(const std::string& path) const {
    const auto v = raw(path);
    if (!v) return std::nullopt;
    return to_number(path, *v);
  }

  std::size_t count(const std::string& path) const { return to_count(path, require(path)); }

  std::optional<std::size_t> count_opt(const std::string& path) const {
    const auto v = raw(path);
    if (!v) return std::nullopt;
    return to_count(path, *v);
  }

  std::vector<double> number_list(const std::string& path) const {
    std::vector<double> out;
    for (const auto& item : split(require(path), ',')) out.push_back(to_number(path, item));
    return out;
  }

  template <class Enum>
  Enum choice(const std::string& path, const std::vector<std::pair<std::string, Enum>>& options,
              Enum fallback) const {
    const auto v = raw(path);
    if (!v) return fallback;
    std::string allowed;
    for (const auto& [name, value] : options) {
      if (*v == name) return value;
      allowed += (allowed.empty() ? "" : "|") + name;
    }
    fail(path, "expected one of " + allowed + ", got '" + *v + "'");
  }

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    const auto it = lines_.find(path);
    throw config_error(path, it == lines_.end() ? 0 : it->second, origin_ + ": " + what);
  }

 private:
  double to_number(const std::string& path, const std::string& s) const {
    const auto v = parse_double(s);
    if (!v) fail(path, "'" + s + "' is not a number");
    return *v;
  }

  std::size_t to_count(const std::string& path, const std::string& s) const {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) fail(path, "'" + s + "' is not a count");
    return v;
  }

  boost::property_tree::ptree tree_;
  std::string origin_;
  std::map<std::string, std::size_t> lines_;
};

inline std::string read_file(const std::filesystem::path& path, const std::string& field) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error(field, 0, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// "depth:speed, depth:speed, ..." (whitespace also accepted inside a pair).
inline DepthProfile parse_inline_profile(const ConfigReader& cfg, const std::string& path,
                                         const std::string& text) {
  DepthProfile p;
  for (const auto& item : split(text, ',')) {
    std::string pair = item;
    for (char& ch : pair)
      if (ch == ':') ch = ' ';
    std::istringstream is(pair);
    std::string a, b, extra;
    is >> a >> b;
    const auto z = parse_double(a);
    const auto c = parse_double(b);
    if (!z || !c || (is >> extra)) cfg.fail(path, "bad depth:speed pair '" + item + "'");
    p.depths.push_back(*z);
    p.speeds.push_back(*c);
  }
  return p;
}

/// Two columns, depth (m) and speed (m/s); '#' starts a comment.
inline DepthProfile parse_profile_file(const std::string& text, const std::string& origin) {
  DepthProfile p;
  std::istringstream in(text);
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    for (char& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    std::istringstream is(line);
    std::string a, b, extra;
    if (!(is >> a)) continue;
    is >> b;
    const auto z = parse_double(a);
    const auto c = parse_double(b);
    if (!z || !c || (is >> extra))
      throw config_error("environment.ssp_file", no, origin + ": expected 'depth speed'");
    p.depths.push_back(*z);
    p.speeds.push_back(*c);
  }
  if (p.depths.empty()) throw config_error("environment.ssp_file", 0, origin + ": no samples");
  return p;
}

inline double degrees_to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace detail

/// Parses and validates a configuration given as text. Relative file
/// references resolve against `base_dir`.
inline Scenario parse_config(const std::string& text, const std::filesystem::path& base_dir,
                             const std::string& origin = "<config>") {
  using detail::ConfigReader;
  const ConfigReader cfg(text, origin);
  cfg.check_known({
      {"grid",
       {"n_range", "n_azimuth", "n_depth", "delta_r", "delta_theta_deg", "delta_z", "r_start",
        "azimuth_topology"}},
      {"environment",
       {"c0", "ssp", "ssp_file", "ssp_interpolation", "water_depth", "absorber_start_depth",
        "absorber_max_attenuation"}},
      {"source", {"frequencies", "depth", "starter"}},
      {"run",
       {"mode", "output_dir", "output_stride", "tl_format", "threads", "workers", "pinning",
        "scheduling"}},
  });

  Grid3D grid;
  grid.n_range = cfg.count("grid.n_range");
  grid.n_azimuth = cfg.count("grid.n_azimuth");
  grid.n_depth = cfg.count("grid.n_depth");
  grid.delta_r = cfg.number("grid.delta_r");
  grid.delta_z = cfg.number("grid.delta_z");
  grid.azimuth_topology = cfg.choice<AzimuthTopology>(
      "grid.azimuth_topology",
      {{"periodic", AzimuthTopology::periodic}, {"sector", AzimuthTopology::sector}},
      AzimuthTopology::periodic);
  if (const auto d = cfg.number_opt("grid.delta_theta_deg")) {
    grid.delta_theta = detail::degrees_to_radians(*d);
  } else if (grid.azimuth_topology == AzimuthTopology::periodic && grid.n_azimuth > 0) {
    grid.delta_theta = two_pi / static_cast<double>(grid.n_azimuth);
  } else {
    cfg.fail("grid.delta_theta_deg", "required for sector topology");
  }
  grid.r_start = cfg.number_opt("grid.r_start").value_or(grid.delta_r);
  grid.validate();

  std::string input_bytes = text;
  const double c0 = cfg.number_opt("environment.c0").value_or(1500.0);
  const auto interp = cfg.choice<DepthInterpolation>(
      "environment.ssp_interpolation",
      {{"linear", DepthInterpolation::linear}, {"nearest", DepthInterpolation::nearest}},
      DepthInterpolation::linear);
  SoundSpeedField ssp = SoundSpeedField::homogeneous(c0);
  const auto inline_ssp = cfg.raw("environment.ssp");
  const auto ssp_file = cfg.raw("environment.ssp_file");
  if (inline_ssp && ssp_file) cfg.fail("environment.ssp_file", "give either ssp or ssp_file, not both");
  if (inline_ssp) {
    ssp = SoundSpeedField::uniform(detail::parse_inline_profile(cfg, "environment.ssp", *inline_ssp),
                                   interp);
  } else if (ssp_file) {
    const auto path = base_dir / *ssp_file;
    const std::string body = detail::read_file(path, "environment.ssp_file");
    input_bytes += body;
    ssp = SoundSpeedField::uniform(detail::parse_profile_file(body, path.string()), interp);
  }
  const double water_depth = cfg.number("environment.water_depth");
  Absorber absorber;
  absorber.start_depth =
      cfg.number_opt("environment.absorber_start_depth").value_or(0.75 * grid.bottom_depth());
  absorber.max_attenuation = cfg.number_opt("environment.absorber_max_attenuation").value_or(0.01);
  Environment env(grid, c0, std::move(ssp), Bathymetry::flat(water_depth), absorber);

  SourceSpec src;
  src.frequencies = cfg.number_list("source.frequencies");
  src.depth = cfg.number("source.depth");
  src.starter =
      cfg.choice<StarterKind>("source.starter", {{"gaussian", StarterKind::gaussian}}, StarterKind::gaussian);
  src.validate(env);

  RunOptions opt;
  opt.mode = cfg.choice<Mode>("run.mode",
                              {{"run", Mode::run}, {"bench", Mode::bench}, {"selftest", Mode::selftest}},
                              Mode::run);
  if (const auto d = cfg.raw("run.output_dir")) {
    const std::filesystem::path p(*d);
    opt.output_dir = p.is_absolute() ? p : base_dir / p;
  }
  opt.output_stride = cfg.count_opt("run.output_stride").value_or(0);
  opt.tl_format = cfg.choice<TlFormat>("run.tl_format",
                                       {{"csv", TlFormat::csv}, {"binary", TlFormat::binary}},
                                       TlFormat::csv);
  opt.executor.intra_threads =
      count_from_env(threads_env_var, cfg.count_opt("run.threads").value_or(1));
  opt.executor.freq_workers =
      count_from_env(workers_env_var, cfg.count_opt("run.workers").value_or(1));
  opt.executor.pinning = cfg.choice<Pinning>(
      "run.pinning", {{"none", Pinning::none}, {"compact", Pinning::compact}}, Pinning::none);
  opt.executor.scheduling = cfg.choice<Scheduling>(
      "run.scheduling", {{"static", Scheduling::static_blocks}, {"dynamic", Scheduling::dynamic}},
      Scheduling::static_blocks);
  opt.executor.validate();

  return {grid, std::move(env), std::move(src), std::move(opt), std::move(input_bytes)};
}

inline Scenario load_config(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path, "");
  return parse_config(text, path.parent_path(), path.string());
}

}  // namespace pe3d
