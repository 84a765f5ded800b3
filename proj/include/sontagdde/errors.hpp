#pragma once

#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

namespace sontagdde {

/// Argument outside the mathematical domain of an operation (tau outside [-delta, 0], bad shift, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inconsistent or incomplete configuration (grid mismatch, missing block, bad flag value).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Expression evaluation produced a non-finite value or hit a near-zero divisor.
class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Diagnostic {
  int line = 0;
  int column = 0;
  std::string message;

  [[nodiscard]] std::string str() const {
    return std::to_string(line) + ":" + std::to_string(column) + ": " + message;
  }
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(std::vector<Diagnostic> diags)
      : std::runtime_error(join(diags)), diags_(std::move(diags)) {}

  [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const noexcept { return diags_; }

 private:
  static std::string join(const std::vector<Diagnostic>& diags) {
    std::string out;
    for (const auto& d : diags) {
      if (!out.empty()) out += "\n";
      out += d.str();
    }
    return out;
  }

  std::vector<Diagnostic> diags_;
};

/// The integrated state left the admissible region (|x| > 1e12 or non-finite).
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(double t)
      : std::runtime_error("divergence at t=" + std::to_string(t)), time_(t) {}

  [[nodiscard]] double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Shortest representation that parses back to the same double; integral values keep a ".0".
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }
  std::string s(buf, end);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

}  // namespace sontagdde
