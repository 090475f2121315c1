#pragma once

#include <stdexcept>
#include <string>

namespace ragmut {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: a file, record, or argument violating its contract.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Source text the Java front end cannot parse.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& what, int line)
        : Error(what + " at line " + std::to_string(line)), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace ragmut
