#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spavg/averaging.hpp"
#include "spavg/errors.hpp"
#include "spavg/geometry.hpp"

namespace spavg {

/// Shortest round-trip decimal representation, stable across runs.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (trim(s.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw InvalidConfig("cannot parse number '" + s + "'");
}

inline void write_window_comment(std::ostream& os, const Window& w) {
  os << "# window " << format_double(w.x0) << ' ' << format_double(w.x1) << ' '
     << format_double(w.y0) << ' ' << format_double(w.y1) << '\n';
}

/// Parse "# window x0 x1 y0 y1"; the stream must be positioned on it.
inline Window read_window_comment(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw InvalidConfig("missing window header line");
  std::istringstream ls(line);
  std::string hash, word;
  ls >> hash >> word;
  double x0, x1, y0, y1;
  if (hash != "#" || word != "window" || !(ls >> x0 >> x1 >> y0 >> y1))
    throw InvalidConfig("malformed window header line: " + line);
  return Window(x0, x1, y0, y1);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Point patterns and germ-grain sets: CSV with a window header comment
// ---------------------------------------------------------------------------

inline void write_pattern(std::ostream& os, const PointPattern& p) {
  detail::write_window_comment(os, p.window);
  os << "x,y\n";
  for (const auto& q : p.points)
    os << format_double(q.x) << ',' << format_double(q.y) << '\n';
}

inline PointPattern read_pattern(std::istream& is) {
  const Window w = detail::read_window_comment(is);
  std::string line;
  if (!std::getline(is, line) || detail::trim(line) != "x,y")
    throw InvalidConfig("expected 'x,y' header in pattern file");
  std::vector<Point> pts;
  while (std::getline(is, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != 2)
      throw InvalidConfig("pattern row must have two columns: " + line);
    pts.push_back(
        {detail::parse_double(cells[0]), detail::parse_double(cells[1])});
  }
  return PointPattern(std::move(pts), w);
}

inline void write_germ_grain(std::ostream& os, const GermGrainSet& s) {
  detail::write_window_comment(os, s.window);
  os << "x,y,r\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    os << format_double(s.germs[i].x) << ',' << format_double(s.germs[i].y)
       << ',' << format_double(s.radii[i]) << '\n';
}

inline GermGrainSet read_germ_grain(std::istream& is) {
  const Window w = detail::read_window_comment(is);
  std::string line;
  if (!std::getline(is, line) || detail::trim(line) != "x,y,r")
    throw InvalidConfig("expected 'x,y,r' header in germ-grain file");
  std::vector<Point> germs;
  std::vector<double> radii;
  while (std::getline(is, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    if (cells.size() != 3)
      throw InvalidConfig("germ-grain row must have three columns: " + line);
    germs.push_back(
        {detail::parse_double(cells[0]), detail::parse_double(cells[1])});
    radii.push_back(detail::parse_double(cells[2]));
  }
  return GermGrainSet(std::move(germs), std::move(radii), w);
}

// ---------------------------------------------------------------------------
// MSE matrices: square CSV block with a label header row
// ---------------------------------------------------------------------------

inline void write_mse_matrix(std::ostream& os, const MseMatrix& m) {
  for (std::size_t i = 0; i < m.labels.size(); ++i)
    os << (i ? "," : "") << m.labels[i];
  os << '\n';
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    for (Eigen::Index j = 0; j < m.size(); ++j)
      os << (j ? "," : "") << format_double(m.entries(i, j));
    os << '\n';
  }
}

inline MseMatrix read_mse_matrix(std::istream& is) {
  std::string line;
  if (!std::getline(is, line))
    throw InvalidConfig("empty MSE matrix file");
  const auto labels = detail::split(detail::trim(line), ',');
  const auto m = static_cast<Eigen::Index>(labels.size());
  Eigen::MatrixXd entries(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!std::getline(is, line))
      throw InvalidConfig("MSE matrix file is truncated");
    const auto cells = detail::split(detail::trim(line), ',');
    if (static_cast<Eigen::Index>(cells.size()) != m)
      throw InvalidConfig("MSE matrix row width mismatch");
    for (Eigen::Index j = 0; j < m; ++j)
      entries(i, j) = detail::parse_double(cells[j]);
  }
  return MseMatrix(labels, entries);
}

// ---------------------------------------------------------------------------
// Intensity fields: flat CSV and a compact binary grid
// ---------------------------------------------------------------------------

inline void write_field_csv(std::ostream& os, const IntensityField& f) {
  detail::write_window_comment(os, f.window);
  os << "# grid " << f.nx << ' ' << f.ny << '\n';
  os << "x,y,value\n";
  for (int iy = 0; iy < f.ny; ++iy)
    for (int ix = 0; ix < f.nx; ++ix)
      os << format_double(f.pixel_x(ix)) << ',' << format_double(f.pixel_y(iy))
         << ',' << format_double(f.at(ix, iy)) << '\n';
}

inline IntensityField read_field_csv(std::istream& is) {
  const Window w = detail::read_window_comment(is);
  std::string line;
  int nx = 0, ny = 0;
  {
    if (!std::getline(is, line)) throw InvalidConfig("missing grid header");
    std::istringstream ls(line);
    std::string hash, word;
    ls >> hash >> word;
    if (hash != "#" || word != "grid" || !(ls >> nx >> ny))
      throw InvalidConfig("malformed grid header line: " + line);
  }
  if (!std::getline(is, line) || detail::trim(line) != "x,y,value")
    throw InvalidConfig("expected 'x,y,value' header in field file");
  IntensityField f(w, nx, ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) {
      if (!std::getline(is, line))
        throw InvalidConfig("field file is truncated");
      const auto cells = detail::split(detail::trim(line), ',');
      if (cells.size() != 3)
        throw InvalidConfig("field row must have three columns");
      f.at(ix, iy) = detail::parse_double(cells[2]);
    }
  return f;
}

/// Binary layout: "SPAVGFLD", uint32 nx, uint32 ny, 4 doubles (window),
/// then nx*ny row-major doubles.  Little-endian hosts assumed.
inline void write_field_binary(std::ostream& os, const IntensityField& f) {
  os.write("SPAVGFLD", 8);
  const std::uint32_t nx = static_cast<std::uint32_t>(f.nx);
  const std::uint32_t ny = static_cast<std::uint32_t>(f.ny);
  os.write(reinterpret_cast<const char*>(&nx), 4);
  os.write(reinterpret_cast<const char*>(&ny), 4);
  const double win[4] = {f.window.x0, f.window.x1, f.window.y0, f.window.y1};
  os.write(reinterpret_cast<const char*>(win), sizeof win);
  os.write(reinterpret_cast<const char*>(f.values.data()),
           static_cast<std::streamsize>(f.values.size() * sizeof(double)));
}

inline IntensityField read_field_binary(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != "SPAVGFLD")
    throw InvalidConfig("not a binary intensity field file");
  std::uint32_t nx = 0, ny = 0;
  is.read(reinterpret_cast<char*>(&nx), 4);
  is.read(reinterpret_cast<char*>(&ny), 4);
  double win[4];
  is.read(reinterpret_cast<char*>(win), sizeof win);
  if (!is) throw InvalidConfig("binary field header is truncated");
  IntensityField f(Window(win[0], win[1], win[2], win[3]),
                   static_cast<int>(nx), static_cast<int>(ny));
  is.read(reinterpret_cast<char*>(f.values.data()),
          static_cast<std::streamsize>(f.values.size() * sizeof(double)));
  if (!is) throw InvalidConfig("binary field data is truncated");
  return f;
}

// ---------------------------------------------------------------------------
// Fit records: JSON lines
// ---------------------------------------------------------------------------

struct FitRecord {
  std::string estimator;
  std::vector<std::string> parameter_names;
  std::vector<double> values;
  std::map<std::string, bool> flags;  // e.g. boundary_hit, alpha_clamped
};

inline void write_fit_record(std::ostream& os, const FitRecord& rec) {
  nlohmann::json j;
  j["estimator"] = rec.estimator;
  j["parameters"] = nlohmann::json::object();
  for (std::size_t i = 0; i < rec.parameter_names.size(); ++i)
    j["parameters"][rec.parameter_names[i]] = rec.values[i];
  for (const auto& [k, v] : rec.flags) j["flags"][k] = v;
  os << j.dump() << '\n';
}

inline FitRecord parse_fit_record(const std::string& line) {
  const nlohmann::json j = nlohmann::json::parse(line);
  FitRecord rec;
  rec.estimator = j.at("estimator").get<std::string>();
  for (const auto& [k, v] : j.at("parameters").items()) {
    rec.parameter_names.push_back(k);
    rec.values.push_back(v.get<double>());
  }
  if (j.contains("flags"))
    for (const auto& [k, v] : j.at("flags").items())
      rec.flags[k] = v.get<bool>();
  return rec;
}

// ---------------------------------------------------------------------------
// Plain-text key=value config files
// ---------------------------------------------------------------------------

/// Parse `key = value` lines; '#' starts a comment, blank lines skipped.
inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidConfig("config line " + std::to_string(lineno) +
                          " has no '='");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty())
      throw InvalidConfig("config line " + std::to_string(lineno) +
                          " has an empty key");
    if (out.count(key))
      throw InvalidConfig("duplicate config key '" + key + "'");
    out[key] = value;
  }
  return out;
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::ofstream open_output(const std::string& path,
                                 bool binary = false) {
  std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
  if (!os) throw InvalidConfig("cannot open '" + path + "' for writing");
  return os;
}

inline std::ifstream open_input(const std::string& path, bool binary = false) {
  std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
  if (!is) throw InvalidConfig("cannot open '" + path + "' for reading");
  return is;
}

}  // namespace spavg
