#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fragchoice/measures.hpp"

namespace fragchoice {

// All CSV output goes through one formatter (%.17g round-trips doubles),
// so identical runs produce byte-identical files.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path, const std::string& header)
      : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    out_ << header << "\n";
  }

  template <class... Ts>
  void row(Ts... vals) {
    bool first = true;
    ((out_ << (first ? "" : ",") << field(vals), first = false), ...);
    out_ << "\n";
  }

 private:
  static std::string field(double v) { return fmt_double(v); }
  static std::string field(int v) { return std::to_string(v); }
  static std::string field(std::int64_t v) { return std::to_string(v); }
  static std::string field(const char* v) { return v; }
  static std::string field(const std::string& v) { return v; }

  std::ofstream out_;
};

// CDF dump format shared by all modules: header `x,F`, ascending x.
inline void write_cdf_csv(const std::filesystem::path& path, const GridCDF& F) {
  CsvWriter w(path, "x,F");
  for (std::size_t i = 0; i < F.size(); ++i) w.row(F.grid()[i], F.values()[i]);
}

inline void write_cdf_csv(const std::filesystem::path& path, const StepCDF& F) {
  CsvWriter w(path, "x,F");
  for (std::size_t i = 0; i < F.size(); ++i)
    w.row(F.locations()[i], F.cumulative()[i]);
}

// Reads an `x,F` file back as a grid CDF on its own points.
inline GridCDF read_cdf_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open CDF file " + path.string());
  std::vector<double> xs, fs;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a >> b)) {
      if (first) {
        first = false;
        continue;
      }
      throw std::invalid_argument("bad CDF line '" + line + "' in " + path.string());
    }
    first = false;
    xs.push_back(a);
    fs.push_back(b);
  }
  return GridCDF(std::move(xs), std::move(fs));
}

}  // namespace fragchoice
