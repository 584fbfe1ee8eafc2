#include "locpred/common.hpp"

#include <spdlog/spdlog.h>

#include <charconv>
#include <cmath>

namespace locpred {

void Diagnostics::warn(std::string message) {
  log_warning(message);
  warnings.push_back(std::move(message));
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '+'))
    text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r'))
    text.remove_suffix(1);
  double value = 0.0;
  auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw FormatError("not a number: '" + std::string(text) + "'");
  return value;
}

void log_warning(const std::string& message) { spdlog::warn("{}", message); }

void log_info(const std::string& message) { spdlog::info("{}", message); }

}  // namespace locpred
