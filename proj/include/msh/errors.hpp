#pragma once

#include <stdexcept>
#include <string>

namespace msh {

/// Bad caller input: index out of range, malformed config, nonpositive data.
struct argument_error : std::invalid_argument {
    explicit argument_error(const std::string& what) : std::invalid_argument(what) {}
};

/// A computation would exceed a configured budget (panel counts, table sizes).
struct resource_error : std::runtime_error {
    explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

/// Argument outside the mathematical domain of a formula.
struct domain_error : std::domain_error {
    explicit domain_error(const std::string& what) : std::domain_error(what) {}
};

} // namespace msh
