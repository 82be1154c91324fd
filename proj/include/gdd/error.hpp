#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gdd {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes or lengths.
class shape_error : public error {
public:
    using error::error;
};

/// Argument outside an operation's domain (bad span, sigma <= 0, empty axis...).
class value_error : public error {
public:
    using error::error;
};

/// A NaN or Inf tried to leave a public operation.
class numeric_error : public error {
public:
    using error::error;
};

/// A file could not be opened, read or written.
class io_error : public error {
public:
    using error::error;
};

/// Malformed input file. `line()` is 1-based, 0 when unknown.
class parse_error : public error {
public:
    parse_error(std::size_t line, const std::string& what, const std::string& source = "")
        : error(format(source, line, what)), line_(line), reason_(what) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

    parse_error with_source(const std::string& source) const { return parse_error(line_, reason_, source); }

private:
    static std::string format(const std::string& source, std::size_t line, const std::string& what) {
        std::string s = source;
        if (line) s += (s.empty() ? "line " : ":") + std::to_string(line);
        return s.empty() ? what : s + ": " + what;
    }

    std::size_t line_;
    std::string reason_;
};

} // namespace gdd
