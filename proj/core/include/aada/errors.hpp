#pragma once

#include <stdexcept>
#include <string>

namespace aada {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape disagreement between operands. `where` names the offending layer or argument.
class DimensionError : public Error {
public:
    DimensionError(std::string where, const std::string& what)
        : Error(where + ": " + what), where_(std::move(where)) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

/// A backward pass was handed a cache from a different forward call or parameter revision.
class StaleCacheError : public Error {
public:
    using Error::Error;
};

/// Class label outside [0, L) or a domain label outside {0, 1}.
class LabelError : public Error {
public:
    using Error::Error;
};

/// A probability row that is not a distribution.
class DistributionError : public Error {
public:
    using Error::Error;
};

/// A training scheme was asked to train on data it cannot use (e.g. target-only with no labels).
class SchemeError : public Error {
public:
    using Error::Error;
};

/// Selection or budget request that the pools cannot satisfy.
class BudgetError : public Error {
public:
    using Error::Error;
};

/// Base of the IDX loader errors.
class IdxError : public Error {
public:
    using Error::Error;
};
class IdxBadMagic : public IdxError {
public:
    using IdxError::IdxError;
};
class IdxTruncated : public IdxError {
public:
    using IdxError::IdxError;
};
class IdxCountMismatch : public IdxError {
public:
    using IdxError::IdxError;
};

/// Invalid run configuration. `field` is a dotted path such as `budgets[2]`.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Malformed or incompatible on-disk artifact (checkpoint, run log, score file).
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace aada
