#ifndef LOCPRED_COMMON_HPP
#define LOCPRED_COMMON_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace locpred {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

using IndexList = std::vector<std::size_t>;

// Error taxonomy. The CLI maps ConfigError to exit code 2 and every other
// Error to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition on an operation's arguments.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed text input (FASTA, TSV, CSV). Carries the 1-based line when known.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t line = 0)
      : Error(line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

/// A sequence could not be mapped onto a feature schema.
class ExtractionError : public Error {
 public:
  using Error::Error;
};

/// Collects non-fatal warnings emitted during ingestion so callers and tests
/// can inspect them. Every warning is also forwarded to the logger.
struct Diagnostics {
  std::vector<std::string> warnings;
  void warn(std::string message);
};

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);
/// Strict inverse of format_double; throws FormatError on trailing junk.
double parse_double(std::string_view text);

void log_warning(const std::string& message);
void log_info(const std::string& message);

}  // namespace locpred

#endif  // LOCPRED_COMMON_HPP
