#ifndef PCS_ERROR_HPP
#define PCS_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace pcs {

/// Broad failure category. The CLI maps these onto process exit codes.
enum class ErrorKind {
    usage,      // caller violated a precondition
    data,       // malformed or unsuitable input data
    numerical,  // non-finite values or failed numerical checks
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::usage: return "usage";
    case ErrorKind::data: return "data";
    case ErrorKind::numerical: return "numerical";
    }
    return "unknown";
}

/// Library exception. `code()` is a short stable identifier such as
/// "degenerate-extent" that tests and tools can match on.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), kind_(kind), code_(std::move(code)) {}

    Error(ErrorKind kind, std::string code)
        : std::runtime_error(code), kind_(kind), code_(std::move(code)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& code() const noexcept { return code_; }

private:
    ErrorKind kind_;
    std::string code_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string code, const std::string& message) {
    throw Error(kind, std::move(code), message);
}

[[noreturn]] inline void fail(ErrorKind kind, std::string code) {
    throw Error(kind, std::move(code));
}

} // namespace pcs

#endif
