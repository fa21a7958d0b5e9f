#ifndef DDEID_ERROR_HPP
#define DDEID_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ddeid {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
    invalid_argument = 1,
    integration_diverged = 2,
    unknown_system = 3,
    insufficient_data = 4,
    invalid_ground_truth = 5,
    io = 6,
    parse = 7,
};

class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code)
    {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message)
{
    throw Error(code, message);
}

} // namespace ddeid

#endif
