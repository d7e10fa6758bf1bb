#ifndef PERIODICA_ERRORS_HPP
#define PERIODICA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace periodica {

struct InvalidDimension : std::runtime_error {
    explicit InvalidDimension(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidValue : std::runtime_error {
    explicit InvalidValue(const std::string& msg) : std::runtime_error(msg) {}
};

struct InsufficientHistory : std::runtime_error {
    explicit InsufficientHistory(const std::string& msg) : std::runtime_error(msg) {}
};

struct NonIntegralCycle : std::runtime_error {
    explicit NonIntegralCycle(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyDataset : std::runtime_error {
    explicit EmptyDataset(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyCorpus : std::runtime_error {
    explicit EmptyCorpus(const std::string& msg) : std::runtime_error(msg) {}
};

struct DivergedError : std::runtime_error {
    explicit DivergedError(const std::string& msg) : std::runtime_error(msg) {}
};

struct CorruptCheckpoint : std::runtime_error {
    explicit CorruptCheckpoint(const std::string& msg) : std::runtime_error(msg) {}
};

struct VersionMismatch : std::runtime_error {
    explicit VersionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace periodica

#endif
