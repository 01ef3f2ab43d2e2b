#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "dyadic/mesh.hpp"

namespace dyadic {

/// Malformed input file; `line()` is 1-based, 0 when not attributable.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// MFN text format:
//   MFN 1
//   n K L
//   2^{n(K+L)} values, lexicographic cell order
// Values are written in shortest round-trip decimal form.
std::string format_mesh(const MeshFunction& f);
MeshFunction parse_mesh(const std::string& text);
MeshFunction load_mesh(const std::filesystem::path& path);
void store_mesh(const MeshFunction& f, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

/// FNV-1a 64-bit digest, rendered as 16 hex digits.
std::string checksum(const std::string& bytes);
std::string file_checksum(const std::filesystem::path& path);

/// Shortest decimal that parses back to the same double.
std::string format_double(double v);

}  // namespace dyadic
