#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace etaq {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition violation on a call argument (index out of range, bad spec, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A tuple left the admissible cone. `failing_index` is the first m with
/// sigma_m <= 0 (0 when the failure is not tied to a single sigma_m).
class ConeError : public Error {
public:
    ConeError(const std::string& what, int failing_index, double failing_value)
        : Error(what), failing_index_(failing_index), failing_value_(failing_value) {}

    [[nodiscard]] int failing_index() const noexcept { return failing_index_; }
    [[nodiscard]] double failing_value() const noexcept { return failing_value_; }

private:
    int failing_index_;
    double failing_value_;
};

/// |Du| >= 1 somewhere: the graph is not spacelike.
class SpacelikeError : public Error {
public:
    SpacelikeError(const std::string& what, double margin,
                   std::optional<std::size_t> node = std::nullopt)
        : Error(what), margin_(margin), node_(node) {}

    [[nodiscard]] double margin() const noexcept { return margin_; }
    [[nodiscard]] std::optional<std::size_t> node() const noexcept { return node_; }

private:
    double margin_;
    std::optional<std::size_t> node_;
};

/// Iterative procedure failed to converge (eigensolver, projection, linear solve).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Bad run configuration (grid too coarse, missing field, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace etaq
