#pragma once

#include <stdexcept>
#include <string>

namespace corrlab {

// Error categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
    InvalidArgument,   // precondition violated by the caller
    Coverage,          // a table does not cover the indices an operation touches
    Range,             // integer range / FFT length overflow
    Resource,          // allocation failure or resource estimate exceeded
    NonConvergence,    // quadrature or root finder did not stabilise
    Io,                // cache or output file problems
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what);
}

inline void require(bool cond, const std::string& what)
{
    if (!cond)
        fail(ErrorKind::InvalidArgument, what);
}

} // namespace corrlab
