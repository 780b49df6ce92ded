#pragma once

// Line-based "key = value" configuration files; '#' starts a comment.
// Command-line flags take precedence over file values.

#include <fstream>
#include <map>
#include <stdexcept>
#include <string>

namespace warptrack {

inline std::string trimWs(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::map<std::string, std::string> readConfigFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trimWs(line);
    if (t.empty()) continue;
    const size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: missing '=' at line " +
                               std::to_string(lineNo) + " of " + path);
    const std::string key = trimWs(t.substr(0, eq));
    const std::string val = trimWs(t.substr(eq + 1));
    if (key.empty())
      throw std::runtime_error("config: empty key at line " +
                               std::to_string(lineNo) + " of " + path);
    kv[key] = val;
  }
  return kv;
}

}  // namespace warptrack
