#pragma once

// Trajectory CSV: t, x_0..x_{n-1}, u_0..u_{m-1}, d_0..d_{m-1}, V, a, b_norm, dissipation_residual.
// Values are written with 17 significant digits so that a read gives back the same doubles.

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sontagdde/errors.hpp"
#include "sontagdde/simulate.hpp"

namespace sontagdde {

[[nodiscard]] inline std::string csv_header(std::size_t n, std::size_t m) {
  std::string h = "t";
  for (std::size_t i = 0; i < n; ++i) h += ",x_" + std::to_string(i);
  for (std::size_t i = 0; i < m; ++i) h += ",u_" + std::to_string(i);
  for (std::size_t i = 0; i < m; ++i) h += ",d_" + std::to_string(i);
  h += ",V,a,b_norm,dissipation_residual";
  return h;
}

[[nodiscard]] inline std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_csv(const Trajectory& traj, std::ostream& os) {
  os << csv_header(traj.n, traj.m) << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    std::string line = csv_number(traj.times[k]);
    for (Eigen::Index i = 0; i < traj.states[k].size(); ++i) line += "," + csv_number(traj.states[k][i]);
    for (Eigen::Index i = 0; i < traj.inputs[k].size(); ++i) line += "," + csv_number(traj.inputs[k][i]);
    for (Eigen::Index i = 0; i < traj.disturbances[k].size(); ++i) line += "," + csv_number(traj.disturbances[k][i]);
    line += "," + csv_number(traj.V[k]) + "," + csv_number(traj.a[k]) + "," + csv_number(traj.b_norm[k]) + "," +
            csv_number(traj.residual[k]);
    os << line << '\n';
  }
}

[[nodiscard]] inline std::string to_csv(const Trajectory& traj) {
  std::ostringstream os;
  write_csv(traj, os);
  return os.str();
}

/// Reads a file written by write_csv. The rate column is not stored and comes back empty.
[[nodiscard]] inline Trajectory read_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw ConfigError("empty CSV");
  std::size_t n = 0, m = 0;
  {
    std::stringstream hs(header);
    std::string col;
    while (std::getline(hs, col, ',')) {
      if (col.rfind("x_", 0) == 0) ++n;
      if (col.rfind("u_", 0) == 0) ++m;
    }
  }
  if (header != csv_header(n, m)) throw ConfigError("unexpected CSV header: " + header);
  Trajectory traj;
  traj.n = n;
  traj.m = m;
  std::string line;
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      char* end = nullptr;
      vals.push_back(std::strtod(cell.c_str(), &end));
      if (end == cell.c_str()) throw ConfigError("CSV row " + std::to_string(row) + ": bad number '" + cell + "'");
    }
    if (vals.size() != 1 + n + 2 * m + 4) throw ConfigError("CSV row " + std::to_string(row) + ": wrong column count");
    std::size_t c = 0;
    traj.times.push_back(vals[c++]);
    auto take_vec = [&](std::size_t len) {
      Vector v(static_cast<Eigen::Index>(len));
      for (std::size_t i = 0; i < len; ++i) v[static_cast<Eigen::Index>(i)] = vals[c++];
      return v;
    };
    traj.states.push_back(take_vec(n));
    traj.inputs.push_back(take_vec(m));
    traj.disturbances.push_back(take_vec(m));
    traj.V.push_back(vals[c++]);
    traj.a.push_back(vals[c++]);
    traj.b_norm.push_back(vals[c++]);
    traj.residual.push_back(vals[c++]);
  }
  return traj;
}

}  // namespace sontagdde
