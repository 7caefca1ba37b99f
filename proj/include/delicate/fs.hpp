#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "delicate/error.hpp"

namespace delicate::fs {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestError("cannot create file: " + path);
  out << content;
  out.flush();
  if (!out) throw IngestError("write failed: " + path);
}

}  // namespace delicate::fs
