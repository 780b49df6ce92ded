#pragma once

// Dependency-free binary PGM (P5) and PPM (P6) readers/writers, maxval 255.
// Color input is converted to grayscale at ingestion.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "warptrack/image.hpp"

namespace warptrack {

namespace detail {

inline int pnmToken(std::istream& in) {
  // skips whitespace and '#' comments, then reads one unsigned integer
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  if (c == EOF || !std::isdigit(c))
    throw std::runtime_error("pnm: malformed header");
  int v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    c = in.get();
  }
  return v;
}

}  // namespace detail

inline Image readPnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("pnm: cannot open " + path);
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || (m1 != '5' && m1 != '6'))
    throw std::runtime_error("pnm: unsupported format in " + path);
  const bool color = m1 == '6';
  const int w = detail::pnmToken(in);
  const int h = detail::pnmToken(in);
  const int maxval = detail::pnmToken(in);
  if (w < 2 || h < 2 || maxval <= 0 || maxval > 255)
    throw std::runtime_error("pnm: unsupported dimensions/maxval in " + path);
  // header ends with exactly one whitespace byte (already consumed by token)

  const size_t n = static_cast<size_t>(w) * h * (color ? 3 : 1);
  std::vector<unsigned char> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(in.gcount()) != n)
    throw std::runtime_error("pnm: truncated pixel data in " + path);

  Image img(w, h);
  if (color) {
    for (size_t i = 0; i < static_cast<size_t>(w) * h; ++i)
      img.data[i] = rgbToGray(raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]);
  } else {
    for (size_t i = 0; i < n; ++i) img.data[i] = raw[i];
  }
  return img;
}

inline void writePgm(const std::string& path, const Image& img) {
  if (!img.valid()) throw std::invalid_argument("writePgm: invalid image");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("pnm: cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.data.size());
  for (size_t i = 0; i < raw.size(); ++i) {
    const double v = img.data[i];
    raw[i] = static_cast<unsigned char>(
        v <= 0.0 ? 0 : (v >= 255.0 ? 255 : static_cast<int>(v + 0.5)));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) throw std::runtime_error("pnm: write failed for " + path);
}

}  // namespace warptrack
