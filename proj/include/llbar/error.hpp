#ifndef LLBAR_ERROR_HPP
#define LLBAR_ERROR_HPP

#include <stdexcept>
#include <string>

namespace llbar {

/// Failure classes; the numeric value doubles as the CLI exit status.
enum class ErrorCode : int {
    config = 2,
    blowup = 3,
    assertion = 4,
    io = 5,
    invalid_argument = 6,
};

inline const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::config: return "CONFIG_ERROR";
    case ErrorCode::blowup: return "BLOWUP";
    case ErrorCode::assertion: return "ASSERTION_FAILED";
    case ErrorCode::io: return "IO_ERROR";
    case ErrorCode::invalid_argument: return "INVALID_ARGUMENT";
    }
    return "UNKNOWN";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(const std::string& what) {
    throw Error(ErrorCode::invalid_argument, what);
}

inline void require(bool condition, const std::string& what) {
    if (!condition) fail(what);
}

} // namespace llbar

#endif // LLBAR_ERROR_HPP
