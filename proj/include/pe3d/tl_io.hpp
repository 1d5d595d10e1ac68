#pragma once

// On-disk formats: TL grids (CSV or binary), timing CSV, content digests.
//
// TL CSV: '#'-prefixed key=value header lines, then the column header
// `range_m,azimuth_deg,depth_m,tl_db` and one row per sample in
// (range, azimuth, depth) row-major order.
//
// TL binary (little-endian):
//   char[8]   magic "PE3DTL01"
//   uint64    n_ranges, n_azimuth, n_depth, stride, clamped
//   float64   frequency_hz, r_start_m, delta_r_m, delta_theta_rad, delta_z_m
//   float64   ranges[n_ranges]
//   float64   tl_db[n_ranges * n_azimuth * n_depth]

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <istream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <openssl/evp.h>

#include "pe3d/env_model.hpp"
#include "pe3d/error.hpp"
#include "pe3d/farm.hpp"
#include "pe3d/marching.hpp"

namespace pe3d {

inline std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw error("sha256 digest failed");
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i)
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return out.str();
}

inline std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

/// Shortest round-trip decimal form.
inline std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc{}) throw error("number formatting failed");
  return std::string(buf.data(), ptr);
}

inline std::string tl_file_name(double frequency, TlFormat fmt) {
  return "tl_" + format_number(frequency) + "Hz" + (fmt == TlFormat::csv ? ".csv" : ".bin");
}

/// In-memory image of a TL grid file.
struct TLGridFile {
  double frequency = 0.0;
  std::size_t n_azimuth = 0;
  std::size_t n_depth = 0;
  std::size_t stride = 1;
  std::size_t clamped = 0;
  double r_start = 0.0;
  double delta_r = 0.0;
  double delta_theta = 0.0;
  double delta_z = 0.0;
  std::vector<double> ranges;
  std::vector<double> tl;

  std::size_t n_ranges() const { return ranges.size(); }

  static TLGridFile from_result(const FrequencyResult& res, const Grid3D& grid) {
    return {res.frequency, res.n_azimuth, res.n_depth, res.stride, res.clamped, grid.r_start,
            grid.delta_r, grid.delta_theta, grid.delta_z, res.ranges, res.tl};
  }

  void validate() const {
    if (tl.size() != ranges.size() * n_azimuth * n_depth)
      throw shape_error("TL grid: sample count does not match header dimensions");
    for (double v : tl)
      if (!std::isfinite(v)) throw invariant_error("TL samples finite", "");
  }
};

inline void write_tl_csv(const TLGridFile& f, std::ostream& out) {
  f.validate();
  const double deg = 180.0 / std::numbers::pi;
  out << "# format=pe3d-tl-csv\n"
      << "# version=1\n"
      << "# frequency_hz=" << format_number(f.frequency) << "\n"
      << "# n_range_samples=" << f.n_ranges() << "\n"
      << "# n_azimuth=" << f.n_azimuth << "\n"
      << "# n_depth=" << f.n_depth << "\n"
      << "# stride=" << f.stride << "\n"
      << "# r_start_m=" << format_number(f.r_start) << "\n"
      << "# delta_r_m=" << format_number(f.delta_r) << "\n"
      << "# delta_theta_deg=" << format_number(f.delta_theta * deg) << "\n"
      << "# delta_z_m=" << format_number(f.delta_z) << "\n"
      << "# units=dB\n"
      << "# tl_floor_db=" << format_number(tl_floor_db) << "\n"
      << "# clamped=" << f.clamped << "\n"
      << "range_m,azimuth_deg,depth_m,tl_db\n";
  std::vector<std::string> az(f.n_azimuth), dz(f.n_depth);
  for (std::size_t m = 0; m < f.n_azimuth; ++m)
    az[m] = format_number(static_cast<double>(m) * f.delta_theta * deg);
  for (std::size_t l = 0; l < f.n_depth; ++l)
    dz[l] = format_number(static_cast<double>(l) * f.delta_z);
  std::string row;
  for (std::size_t i = 0; i < f.n_ranges(); ++i) {
    const std::string r = format_number(f.ranges[i]);
    for (std::size_t m = 0; m < f.n_azimuth; ++m) {
      for (std::size_t l = 0; l < f.n_depth; ++l) {
        row.clear();
        row.append(r).append(",").append(az[m]).append(",").append(dz[l]).append(",");
        row.append(format_number(f.tl[(i * f.n_azimuth + m) * f.n_depth + l])).append("\n");
        out << row;
      }
    }
  }
}

namespace detail {

inline double parse_field(std::string_view s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw shape_error("TL CSV: bad " + what + " '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

inline constexpr std::string_view tl_csv_columns = "range_m,azimuth_deg,depth_m,tl_db";

/// Reads a TL CSV back; checks the column header and the header dimensions.
inline TLGridFile read_tl_csv(std::istream& in) {
  std::map<std::string, std::string> header;
  std::string line;
  while (std::getline(in, line) && line.starts_with("#")) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    header[detail::trim(std::string_view(line).substr(1, eq - 1))] = detail::trim(line.substr(eq + 1));
  }
  if (line != tl_csv_columns) throw shape_error("TL CSV: unexpected column header '" + line + "'");
  auto num = [&](const char* key) {
    const auto it = header.find(key);
    if (it == header.end()) throw shape_error(std::string("TL CSV: missing header ") + key);
    return detail::parse_field(it->second, key);
  };
  TLGridFile f;
  f.frequency = num("frequency_hz");
  const auto nr = static_cast<std::size_t>(num("n_range_samples"));
  f.n_azimuth = static_cast<std::size_t>(num("n_azimuth"));
  f.n_depth = static_cast<std::size_t>(num("n_depth"));
  f.stride = static_cast<std::size_t>(num("stride"));
  f.clamped = static_cast<std::size_t>(num("clamped"));
  f.r_start = num("r_start_m");
  f.delta_r = num("delta_r_m");
  f.delta_theta = num("delta_theta_deg") * std::numbers::pi / 180.0;
  f.delta_z = num("delta_z_m");
  const std::size_t per_range = f.n_azimuth * f.n_depth;
  f.tl.reserve(nr * per_range);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = detail::split(line, ',');
    if (cols.size() != 4) throw shape_error("TL CSV: row " + std::to_string(row) + " needs 4 columns");
    if (row % per_range == 0) f.ranges.push_back(detail::parse_field(cols[0], "range"));
    f.tl.push_back(detail::parse_field(cols[3], "tl"));
    ++row;
  }
  if (f.ranges.size() != nr) throw shape_error("TL CSV: range sample count mismatch");
  f.validate();
  return f;
}

inline constexpr std::array<char, 8> tl_binary_magic{'P', 'E', '3', 'D', 'T', 'L', '0', '1'};

namespace detail {

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw shape_error("TL binary: truncated");
  return v;
}

}  // namespace detail

inline void write_tl_binary(const TLGridFile& f, std::ostream& out) {
  f.validate();
  out.write(tl_binary_magic.data(), tl_binary_magic.size());
  for (std::uint64_t v : {std::uint64_t(f.n_ranges()), std::uint64_t(f.n_azimuth),
                          std::uint64_t(f.n_depth), std::uint64_t(f.stride), std::uint64_t(f.clamped)})
    detail::put(out, v);
  for (double v : {f.frequency, f.r_start, f.delta_r, f.delta_theta, f.delta_z}) detail::put(out, v);
  out.write(reinterpret_cast<const char*>(f.ranges.data()),
            static_cast<std::streamsize>(f.ranges.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(f.tl.data()),
            static_cast<std::streamsize>(f.tl.size() * sizeof(double)));
}

inline TLGridFile read_tl_binary(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != tl_binary_magic)
    throw shape_error("TL binary: bad magic");
  TLGridFile f;
  const auto nr = detail::get<std::uint64_t>(in);
  f.n_azimuth = detail::get<std::uint64_t>(in);
  f.n_depth = detail::get<std::uint64_t>(in);
  f.stride = detail::get<std::uint64_t>(in);
  f.clamped = detail::get<std::uint64_t>(in);
  f.frequency = detail::get<double>(in);
  f.r_start = detail::get<double>(in);
  f.delta_r = detail::get<double>(in);
  f.delta_theta = detail::get<double>(in);
  f.delta_z = detail::get<double>(in);
  f.ranges.resize(nr);
  f.tl.resize(nr * f.n_azimuth * f.n_depth);
  for (auto& v : f.ranges) v = detail::get<double>(in);
  for (auto& v : f.tl) v = detail::get<double>(in);
  f.validate();
  return f;
}

/// Writes one TL file; returns its path.
inline std::filesystem::path write_tl_file(const TLGridFile& f, const std::filesystem::path& dir,
                                           TlFormat fmt) {
  const auto path = dir / tl_file_name(f.frequency, fmt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw error("cannot write '" + path.string() + "'");
  if (fmt == TlFormat::csv) write_tl_csv(f, out);
  else write_tl_binary(f, out);
  if (!out) throw error("write to '" + path.string() + "' failed");
  return path;
}

inline TLGridFile read_tl_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot read '" + path.string() + "'");
  return path.extension() == ".bin" ? read_tl_binary(in) : read_tl_csv(in);
}

inline constexpr std::string_view timing_csv_columns =
    "label,threads,workers,nfreq,nr,ntheta,nz,wall_s,speedup,efficiency";

/// Voided records keep their row with `nan` timings and the reason appended
/// to the label as "label[void: reason]".
inline void write_timing_csv(const std::vector<TimingRecord>& records, std::ostream& out) {
  out << timing_csv_columns << "\n";
  for (const auto& r : records) {
    std::string label = r.label;
    if (!r.ok()) {
      std::string reason = r.void_reason;
      for (char& ch : reason)
        if (ch == ',' || ch == '\n' || ch == '\r') ch = ' ';
      label += "[void: " + reason + "]";
    }
    out << label << "," << r.intra_threads << "," << r.freq_workers << "," << r.frequency_count
        << "," << r.grid_dims[0] << "," << r.grid_dims[1] << "," << r.grid_dims[2] << ","
        << (r.ok() ? format_number(r.wall_seconds) : "nan") << ","
        << (r.ok() ? format_number(r.speedup()) : "nan") << ","
        << (r.ok() ? format_number(r.efficiency()) : "nan") << "\n";
  }
}

struct TimingRow {
  std::string label;
  std::size_t threads = 0, workers = 0, nfreq = 0, nr = 0, ntheta = 0, nz = 0;
  double wall_s = 0.0, speedup = 0.0, efficiency = 0.0;
};

/// Parses a timing CSV, rejecting any deviation from the fixed column set.
inline std::vector<TimingRow> read_timing_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != timing_csv_columns)
    throw shape_error("timing CSV: unexpected header '" + line + "'");
  std::vector<TimingRow> rows;
  auto count = [](const std::string& s) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      throw shape_error("timing CSV: bad count '" + s + "'");
    return v;
  };
  auto real = [](const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    return detail::parse_field(s, "timing value");
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = detail::split(line, ',');
    if (c.size() != 10) throw shape_error("timing CSV: expected 10 columns in '" + line + "'");
    rows.push_back({c[0], count(c[1]), count(c[2]), count(c[3]), count(c[4]), count(c[5]),
                    count(c[6]), real(c[7]), real(c[8]), real(c[9])});
  }
  return rows;
}

}  // namespace pe3d
