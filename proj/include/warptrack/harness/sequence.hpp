#pragma once

// Sequence ingestion: lexicographically ordered image files in a directory.

#include <algorithm>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "warptrack/io/pnm.hpp"

namespace warptrack {

class SequenceSource {
public:
  explicit SequenceSource(const std::string& dir) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir))
      throw std::runtime_error("sequence: not a directory: " + dir);
    for (const auto& e : fs::directory_iterator(dir)) {
      if (!e.is_regular_file()) continue;
      const std::string ext = e.path().extension().string();
      if (ext == ".pgm" || ext == ".ppm") paths_.push_back(e.path().string());
    }
    std::sort(paths_.begin(), paths_.end());
    if (paths_.empty())
      throw std::runtime_error("sequence: no .pgm/.ppm frames in " + dir);
  }

  explicit SequenceSource(std::vector<std::string> paths)
      : paths_(std::move(paths)) {
    if (paths_.empty()) throw std::runtime_error("sequence: empty path list");
  }

  size_t frameCount() const { return paths_.size(); }
  const std::string& framePath(size_t i) const { return paths_.at(i); }

  Image loadFrame(size_t i) {
    Image img;
    try {
      img = readPnm(paths_.at(i));
    } catch (const std::exception& e) {
      throw std::runtime_error("sequence: frame " + std::to_string(i) + ": " +
                               e.what());
    }
    if (width_ == 0) {
      width_ = img.width;
      height_ = img.height;
    } else if (img.width != width_ || img.height != height_) {
      throw std::runtime_error("sequence: frame " + std::to_string(i) +
                               " has mismatched dimensions");
    }
    return img;
  }

private:
  std::vector<std::string> paths_;
  int width_ = 0;
  int height_ = 0;
};

}  // namespace warptrack
