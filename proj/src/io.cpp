#include "dyadic/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dyadic {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_mesh(const MeshFunction& f) {
  std::string out = "MFN 1\n";
  out += std::to_string(f.dim()) + " " + std::to_string(f.domain().K) + " " +
         std::to_string(f.level()) + "\n";
  const auto v = f.values();
  for (std::size_t i = 0; i < v.size(); ++i) {
    out += format_double(v[i]);
    out += ((i + 1) % 8 == 0 || i + 1 == v.size()) ? '\n' : ' ';
  }
  return out;
}

MeshFunction parse_mesh(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  if (!next_line()) throw ParseError("empty file", 0);
  {
    std::istringstream h(line);
    std::string magic;
    int version = 0;
    if (!(h >> magic >> version) || magic != "MFN" || version != 1)
      throw ParseError("expected header 'MFN 1'", lineno);
  }
  if (!next_line()) throw ParseError("missing 'n K L' line", lineno + 1);
  int n = 0, K = 0, L = 0;
  {
    std::istringstream h(line);
    std::string extra;
    if (!(h >> n >> K >> L) || (h >> extra)) throw ParseError("malformed 'n K L' line", lineno);
    if (n < 1 || K < 0 || L < 0 || n * (K + L) > 40)
      throw ParseError("unsupported mesh shape", lineno);
  }
  const std::size_t expected = std::size_t{1} << (n * (K + L));
  std::vector<double> values;
  values.reserve(expected);
  while (next_line()) {
    const char* p = line.data();
    const char* end = p + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      if (p == end) break;
      const char* tok = p;
      while (p < end && !(*p == ' ' || *p == '\t' || *p == '\r')) ++p;
      double v = 0.0;
      auto res = std::from_chars(tok, p, v);
      if (res.ec != std::errc() || res.ptr != p)
        throw ParseError("bad value '" + std::string(tok, p) + "'", lineno);
      if (!std::isfinite(v)) throw ParseError("non-finite value", lineno);
      if (values.size() == expected) throw ParseError("more values than 2^{n(K+L)}", lineno);
      values.push_back(v);
    }
  }
  if (values.size() != expected)
    throw ParseError("expected " + std::to_string(expected) + " values, found " +
                         std::to_string(values.size()),
                     lineno);
  return MeshFunction(DomainBox{n, K}, L, std::move(values));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

MeshFunction load_mesh(const std::filesystem::path& path) { return parse_mesh(read_file(path)); }

void store_mesh(const MeshFunction& f, const std::filesystem::path& path) {
  write_file(path, format_mesh(f));
}

std::string checksum(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_checksum(const std::filesystem::path& path) { return checksum(read_file(path)); }

}  // namespace dyadic
