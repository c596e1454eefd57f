#pragma once

#include <stdexcept>
#include <string>

namespace seqlab {

/// Caller passed an argument outside an operation's documented domain.
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

/// External input (file, directory, dataset) is malformed or insufficient.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// Non-finite values or other numeric breakdown in an input.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Experiment config file problems; carries the offending line number.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line)
        : std::runtime_error("config line " + std::to_string(line) + ": " + what), line_(line) {}
    explicit ConfigError(const std::string& what) : std::runtime_error(what), line_(0) {}
    int line() const { return line_; }

private:
    int line_;
};

}  // namespace seqlab
