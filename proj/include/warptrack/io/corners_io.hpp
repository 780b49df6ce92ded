#pragma once

// Corners/ground-truth file format: one line per frame with 8 whitespace
// separated reals "x1 y1 x2 y2 x3 y3 x4 y4" in UL, UR, LR, LL order.
// Lines beginning with '#' are ignored. Values are written with enough
// precision to round-trip exactly.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "warptrack/common.hpp"

namespace warptrack {

inline Corners parseCornersLine(const std::string& line) {
  std::istringstream ss(line);
  Corners c;
  for (int j = 0; j < 4; ++j)
    if (!(ss >> c(0, j) >> c(1, j)))
      throw std::runtime_error("corners: malformed line: " + line);
  return c;
}

inline std::vector<Corners> readCornersFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("corners: cannot open " + path);
  std::vector<Corners> out;
  std::string line;
  while (std::getline(in, line)) {
    size_t i = line.find_first_not_of(" \t\r");
    if (i == std::string::npos || line[i] == '#') continue;
    out.push_back(parseCornersLine(line));
  }
  return out;
}

inline std::string formatCorners(const Corners& c) {
  char buf[64];
  std::string line;
  for (int j = 0; j < 4; ++j) {
    for (int d = 0; d < 2; ++d) {
      std::snprintf(buf, sizeof(buf), "%.17g", c(d, j));
      if (!line.empty()) line += ' ';
      line += buf;
    }
  }
  return line;
}

inline void writeCornersFile(const std::string& path,
                             const std::vector<Corners>& corners) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("corners: cannot write " + path);
  for (const auto& c : corners) out << formatCorners(c) << "\n";
  if (!out) throw std::runtime_error("corners: write failed for " + path);
}

/// Parses "x1,y1,x2,y2,...,y4" (commas and/or spaces) as used by --init.
inline Corners parseCornersArg(std::string arg) {
  for (auto& ch : arg)
    if (ch == ',') ch = ' ';
  return parseCornersLine(arg);
}

}  // namespace warptrack
