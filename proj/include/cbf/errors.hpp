#pragma once

#include <stdexcept>
#include <string>

namespace cbf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operands live on different grids or have mismatched sizes.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Argument outside the admissible range of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A linear solve or a numerical contract failed; carries the offending residual.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// Time-step restriction violated (convective CFL or explicit Forchheimer bound).
class StabilityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Non-finite values appeared during time stepping.
class BlowUpError : public NumericalError {
public:
    BlowUpError(const std::string& what, double time)
        : NumericalError(what, time), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// Input data violate an admissibility condition of the inverse problem.
class AdmissibilityError : public Error {
public:
    AdmissibilityError(const std::string& what, double time)
        : Error(what), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// The sequential reconstruction hit a vanishing step response.
class MarchingBreakdown : public NumericalError {
public:
    MarchingBreakdown(const std::string& what, double time, double denominator)
        : NumericalError(what, denominator), time_(time) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

class CatalogError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace cbf
