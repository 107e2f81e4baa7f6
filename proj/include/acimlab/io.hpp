#pragma once

// CSV artifacts. Every floating-point field is written with 17 significant
// digits so that reading it back reproduces the same double.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "acimlab/density.hpp"
#include "acimlab/error.hpp"
#include "acimlab/orbits.hpp"
#include "acimlab/transfer.hpp"

namespace acimlab::io {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  return v;
}

inline void write_density_csv(std::ostream& os, const GridFunction& f) {
  os << "x_mid,density\n";
  for (std::size_t i = 0; i < f.n(); ++i) {
    os << format_double(f.midpoint(i)) << ',' << format_double(f[i]) << '\n';
  }
}

inline GridFunction read_density_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "x_mid,density") {
    throw std::invalid_argument("density CSV must start with 'x_mid,density'");
  }
  std::vector<double> mids, vals;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("malformed density row: " + line);
    mids.push_back(parse_double(line.substr(0, comma)));
    vals.push_back(parse_double(line.substr(comma + 1)));
  }
  if (vals.empty()) throw std::invalid_argument("density CSV has no rows");
  GridFunction f(std::move(vals));
  for (std::size_t i = 0; i < mids.size(); ++i) {
    if (std::abs(mids[i] - f.midpoint(i)) > 1e-12) {
      throw std::invalid_argument("density CSV midpoints are not a uniform ascending grid");
    }
  }
  return f;
}

inline void write_matrix_csv(std::ostream& os, const UlamMatrix& M) {
  os << "row,col,value\n";
  for (std::size_t i = 0; i < M.n(); ++i) {
    for (std::size_t p = M.row_ptr()[i]; p < M.row_ptr()[i + 1]; ++p) {
      os << i << ',' << M.cols()[p] << ',' << format_double(M.vals()[p]) << '\n';
    }
  }
}

/// `t,x,k` with 1-based map index k of the transition taken from x_t
/// (empty for the final state).
inline void write_orbit_csv(std::ostream& os, const OrbitRecord& orbit) {
  os << "t,x,k\n";
  for (std::size_t t = 0; t < orbit.states.size(); ++t) {
    os << t << ',' << format_double(orbit.states[t]) << ',';
    if (t < orbit.symbols.size()) os << static_cast<unsigned>(orbit.symbols[t]) + 1;
    os << '\n';
  }
}

inline void write_hist2d_csv(std::ostream& os, const std::vector<double>& dens, std::size_t n) {
  os << "x_mid,w_mid,density\n";
  const double dn = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      os << format_double((static_cast<double>(i) + 0.5) / dn) << ','
         << format_double((static_cast<double>(j) + 0.5) / dn) << ','
         << format_double(dens[i * n + j]) << '\n';
    }
  }
}

template <typename Writer>
void write_file(const std::string& path, Writer&& writer) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  writer(os);
  if (!os) throw std::runtime_error("failed writing " + path);
}

inline GridFunction read_density_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_density_csv(is);
}

}  // namespace acimlab::io
