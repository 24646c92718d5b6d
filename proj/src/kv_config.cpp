#include "srvfnet/kv_config.hpp"

#include <fstream>

#include "srvfnet/errors.hpp"

namespace srvfnet {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> read_kv_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("config: cannot open " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config: line " + std::to_string(row) +
                       ": expected key=value");
    }
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) {
      throw ParseError("config: line " + std::to_string(row) + ": empty key");
    }
    out[key] = trim(t.substr(eq + 1));
  }
  return out;
}

}  // namespace srvfnet
