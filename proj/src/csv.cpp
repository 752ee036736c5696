#include "fmm/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace fmm::csvio {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // prefer the shortest representation that round-trips
  for (int prec = 1; prec < 17; ++prec) {
    char t[40];
    std::snprintf(t, sizeof t, "%.*g", prec, v);
    double back;
    std::sscanf(t, "%lf", &back);
    if (back == v) return t;
  }
  return buf;
}

std::string fmt(int v) { return std::to_string(v); }
std::string fmt(long v) { return std::to_string(v); }
std::string fmt(std::uint64_t v) { return std::to_string(v); }

Csv::Csv(const std::string& path, const std::string& config_summary) : out_(path) {
  if (!out_) throw std::runtime_error("cannot open output file: " + path);
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a(config_summary)));
  out_ << "# atfmm " << kVersion << ", cfg=" << hash << "\n";
}

void Csv::header(const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) out_ << (i ? "," : "") << cols[i];
  out_ << "\n";
}

void Csv::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << "\n";
}

void Csv::flush() { out_.flush(); }

}  // namespace fmm::csvio
