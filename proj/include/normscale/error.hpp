#pragma once

#include <stdexcept>
#include <string>

namespace normscale {

// Every failure raised by the library derives from Error. The kind tells the
// CLI which exit code to use and lets callers discriminate without RTTI.
enum class ErrorKind {
    fit,
    shape,
    parameter,
    domain,
    metric,
    parse,
    label,
    consistency,
    precondition,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace normscale
