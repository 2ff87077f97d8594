#pragma once

#include <stdexcept>
#include <string>

namespace semiseg {

// Error categories map onto CLI exit codes: config -> 2, data -> 3,
// provider -> 4. Everything else exits 1.
enum class ErrorKind {
    config,
    data,
    provider,
    numeric,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
        case ErrorKind::config: return 2;
        case ErrorKind::data: return 3;
        case ErrorKind::provider: return 4;
        default: return 1;
        }
    }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(ErrorKind::config, msg) {}
};

struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

struct ProviderError : Error {
    explicit ProviderError(const std::string& msg) : Error(ErrorKind::provider, msg) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(ErrorKind::numeric, msg) {}
};

} // namespace semiseg
