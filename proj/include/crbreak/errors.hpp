#pragma once

#include <stdexcept>
#include <string>

namespace crbreak {

// Error categories. The CLI maps input/configuration problems to exit code 2
// and numerical failures to exit code 3.
enum class ErrorKind {
    schema,
    parse,
    dimension,
    validation,
    config,
    parameter,
    io,
    rank,
    numeric,
    degenerate,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    bool is_numeric() const noexcept {
        return kind_ == ErrorKind::rank || kind_ == ErrorKind::numeric ||
               kind_ == ErrorKind::degenerate;
    }

private:
    ErrorKind kind_;
};

const char* to_string(ErrorKind kind) noexcept;

}  // namespace crbreak
