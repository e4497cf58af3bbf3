#pragma once

#include <stdexcept>
#include <string>

namespace alcs {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input record (corpus files, spec files).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Binary container (DVEC, LSVM) does not match its layout.
class FormatError : public Error {
public:
    using Error::Error;
};

class SidecarError : public Error {
public:
    SidecarError(const std::string& what, std::string log)
        : Error(what), log_(std::move(log)) {}

    const std::string& log() const noexcept { return log_; }

private:
    std::string log_;
};

} // namespace alcs
