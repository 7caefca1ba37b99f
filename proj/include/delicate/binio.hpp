#pragma once

// Little-endian binary file helpers shared by the embedding index and the
// lookup store. All on-disk integers are fixed-width little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "delicate/error.hpp"

namespace delicate::binio {

static_assert(std::endian::native == std::endian::little,
              "big-endian hosts need byte swapping that is not implemented");

class Reader {
 public:
  explicit Reader(const std::string& path)
      : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IngestError("cannot open file: " + path);
  }

  template <typename T>
  T read(const char* what) {
    T value{};
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (in_.gcount() != static_cast<std::streamsize>(sizeof(T))) {
      throw IngestError("truncated file " + path_ + " while reading " + what);
    }
    return value;
  }

  void read_bytes(void* dst, std::size_t n, const char* what) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (in_.gcount() != static_cast<std::streamsize>(n)) {
      throw IngestError("truncated file " + path_ + " while reading " + what);
    }
  }

  std::string read_string(const char* what) {
    const auto len = read<std::uint32_t>(what);
    std::string s(len, '\0');
    if (len > 0) read_bytes(s.data(), len, what);
    return s;
  }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ifstream in_;
};

class Writer {
 public:
  explicit Writer(const std::string& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IngestError("cannot create file: " + path);
  }

  template <typename T>
  void write(T value) {
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  void write_bytes(const void* src, std::size_t n) {
    out_.write(static_cast<const char*>(src), static_cast<std::streamsize>(n));
  }

  void write_string(const std::string& s) {
    write<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    write_bytes(s.data(), s.size());
  }

  void finish() {
    out_.flush();
    if (!out_) throw IngestError("write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace delicate::binio
