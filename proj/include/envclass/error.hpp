#pragma once

#include <stdexcept>
#include <string>

namespace envclass {

// Every failure raised by the core derives from Error. The category is what
// the C API maps onto its status codes.
enum class ErrorKind {
  Parse,        // malformed input row or document
  Reference,    // dangling scene / agent reference
  Config,       // bad configuration or column map
  Io,           // file could not be opened / written
  Invariant,    // a data invariant was violated (e.g. non-increasing time)
  Data,         // not enough data for the requested statistic
  Separation,   // logistic fit does not have a finite MLE
  Rank,         // singular design / information matrix
  Convergence,  // iterative solver ran out of iterations
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : Error(ErrorKind::Parse, file + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline Error reference_error(const std::string& msg) { return Error(ErrorKind::Reference, msg); }
inline Error config_error(const std::string& msg) { return Error(ErrorKind::Config, msg); }
inline Error io_error(const std::string& msg) { return Error(ErrorKind::Io, msg); }
inline Error invariant_error(const std::string& msg) { return Error(ErrorKind::Invariant, msg); }
inline Error data_error(const std::string& msg) { return Error(ErrorKind::Data, msg); }

}  // namespace envclass
