#pragma once

#include <map>
#include <string>

namespace srvfnet {

/// Flat key=value file: one pair per line, blank lines and #-comments
/// ignored, whitespace around keys and values trimmed. Later duplicates win.
std::map<std::string, std::string> read_kv_config(const std::string& path);

}  // namespace srvfnet
