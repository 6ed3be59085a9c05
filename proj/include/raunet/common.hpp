// Shared error types and check macros.
#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace raunet {

// Base for everything this library throws on contract violations.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: malformed config, impossible request, out-of-range value.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

enum class IoErrorKind {
    BadMagic,
    Truncated,
    ExtentMismatch,
    BadValue,
    NotFound,
};

// File/format failures with a machine-inspectable kind.
class IoError : public Error {
public:
    IoError(IoErrorKind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    IoErrorKind kind() const { return kind_; }

private:
    IoErrorKind kind_;
};

namespace detail {
[[noreturn]] inline void throw_check_failure(const char* expr, const std::string& msg) {
    std::ostringstream os;
    os << "check failed: " << expr;
    if (!msg.empty()) os << " — " << msg;
    throw Error(os.str());
}
}  // namespace detail

}  // namespace raunet

// RAUNET_CHECK(cond) or RAUNET_CHECK(cond, stream << exprs)
#define RAUNET_CHECK(cond, ...)                                                 \
    do {                                                                        \
        if (!(cond)) {                                                          \
            std::ostringstream raunet_check_os_;                                \
            raunet_check_os_ << "" __VA_ARGS__;                                 \
            ::raunet::detail::throw_check_failure(#cond, raunet_check_os_.str()); \
        }                                                                       \
    } while (0)
