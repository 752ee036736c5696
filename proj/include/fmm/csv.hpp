#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace fmm::csvio {

inline constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a(const std::string& s);

std::string fmt(double v);  // shortest round-trippable decimal
std::string fmt(int v);
std::string fmt(long v);
std::string fmt(std::uint64_t v);

// Plain CSV with a header row and a leading "# version, config-hash" comment.
class Csv {
 public:
  Csv(const std::string& path, const std::string& config_summary);
  void header(const std::vector<std::string>& cols);
  void row(const std::vector<std::string>& cells);
  void flush();

 private:
  std::ofstream out_;
};

}  // namespace fmm::csvio
