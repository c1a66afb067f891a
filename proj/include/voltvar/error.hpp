#pragma once

#include <stdexcept>
#include <string>

namespace voltvar {

enum class ErrorCode {
    io,
    parse,
    invalid_argument,
    no_convergence,
    singular,
    diverged,
    protocol,
    internal,
};

/// Exception carrying a coarse error category alongside the message; the C API
/// maps the category to a status code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace voltvar
