#pragma once

#include <stdexcept>
#include <string>

namespace zerodisp {

// Bad or incomplete configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Anything that fails inside the numerics. Maps to CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// I + T(lambda) too close to singular for the requested operation.
class SingularityError : public NumericalError {
public:
    SingularityError(const std::string& msg, double sigma_min)
        : NumericalError(msg), sigma_min_(sigma_min) {}
    double sigma_min() const { return sigma_min_; }

private:
    double sigma_min_;
};

class TuningError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class FitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class SingularBlockError : public NumericalError {
public:
    SingularBlockError(const std::string& msg, std::string block)
        : NumericalError(msg), block_(std::move(block)) {}
    const std::string& block() const { return block_; }

private:
    std::string block_;
};

}  // namespace zerodisp
