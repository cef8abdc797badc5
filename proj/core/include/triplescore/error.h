#ifndef TRIPLESCORE_ERROR_H_
#define TRIPLESCORE_ERROR_H_

#include <stdexcept>
#include <string>

namespace triplescore {

// Every failure raised by the library derives from Error so that callers (the
// CLI in particular) can report a one-line diagnostic and map it to an exit
// code without knowing which module produced it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file or stream could not be opened, read or written.
class InputError : public Error {
 public:
  using Error::Error;
};

// Malformed record in an input file.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

// A precondition on a function argument was violated.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// The requested configuration cannot be trained or run (e.g. one class).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// Loss or gradient became NaN/inf.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace triplescore

#endif  // TRIPLESCORE_ERROR_H_
