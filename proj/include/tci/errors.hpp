#pragma once

#include <stdexcept>
#include <string>

namespace tci {

/// Invalid or inconsistent configuration (bad parameter values, dimension
/// mismatches, malformed config files). Maps to process exit code 1.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or contract-violating data (unsorted streams, bad file magic,
/// truncated records). Maps to process exit code 2.
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A computation that ran on valid data but could not produce a result
/// (e.g. fewer histogram peaks than expected). Maps to process exit code 3.
class analysis_error : public std::runtime_error {
public:
    explicit analysis_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace tci
