#pragma once

#include <stdexcept>
#include <string>

namespace card {

/// Bad flags, bad parameter values, incompatible options. CLI exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid or unusable input data (parse failures, schema mismatches,
/// impossible splits). CLI exit code 3.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A broken internal invariant; indicates a bug, not a user mistake.
/// CLI exit code 4.
class internal_error : public std::logic_error {
public:
    explicit internal_error(const std::string& msg) : std::logic_error(msg) {}
};

} // namespace card
