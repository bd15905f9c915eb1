#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pinlab {

/// A requested size exceeds what the desk-scale implementation supports.
class ResourceLimit : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A rigorous certificate and a measurement disagree.
class CertificateContradiction : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range configuration. `line`/`column` are 1-based and
/// zero when the error is not tied to a position.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::size_t line = 0, std::size_t column = 0,
                std::string field = {})
        : std::runtime_error(what), line_(line), column_(column), field_(std::move(field))
    {
    }

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }
    const std::string& field() const { return field_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string field_;
};

} // namespace pinlab
