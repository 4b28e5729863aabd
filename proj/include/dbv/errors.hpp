#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dbv {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An input violates a documented invariant (non-positive beta, non-Hermitian coupling, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Evaluation requested within the guard distance of a channel threshold.
class ThresholdProximity : public Error {
public:
    ThresholdProximity(double energy, double threshold)
        : Error("energy " + std::to_string(energy) + " is within the guard of threshold " +
                std::to_string(threshold)),
          energy_(energy), threshold_(threshold) {}

    double energy() const noexcept { return energy_; }
    double threshold() const noexcept { return threshold_; }

private:
    double energy_;
    double threshold_;
};

/// The Lippmann-Schwinger system is numerically singular (resonance pole of N_Psi).
class SingularSystem : public Error {
public:
    SingularSystem(double energy, double condition)
        : Error("scattering system singular at E=" + std::to_string(energy) +
                " (condition number " + std::to_string(condition) + ")"),
          energy_(energy), condition_(condition) {}

    double energy() const noexcept { return energy_; }
    double condition() const noexcept { return condition_; }

private:
    double energy_;
    double condition_;
};

/// |1/N_Psi| fell below the closed-form resonance floor.
class ResonancePole : public Error {
public:
    explicit ResonancePole(double energy)
        : Error("resonance pole of the closed-form amplitudes at E=" + std::to_string(energy)),
          energy_(energy) {}

    double energy() const noexcept { return energy_; }

private:
    double energy_;
};

class QuadratureFailure : public Error {
public:
    QuadratureFailure(const std::string& what, double estimate, double error)
        : Error(what), estimate_(estimate), error_(error) {}

    double estimate() const noexcept { return estimate_; }
    double error() const noexcept { return error_; }

private:
    double estimate_;
    double error_;
};

/// A ratio of thermal integrals whose numerator or denominator underflowed.
class UndefinedRatio : public Error {
public:
    using Error::Error;
};

class IncompleteTable : public Error {
public:
    using Error::Error;
};

/// The Pauli generator has more than one closed communicating class.
class NonErgodic : public Error {
public:
    NonErgodic(const std::string& what, std::vector<std::vector<std::size_t>> classes)
        : Error(what), classes_(std::move(classes)) {}

    /// Closed (invariant) classes of levels; each supports its own stationary state.
    const std::vector<std::vector<std::size_t>>& closed_classes() const noexcept { return classes_; }

private:
    std::vector<std::vector<std::size_t>> classes_;
};

/// Logarithm of a vanishing population carrying nonzero flow.
class DomainError : public Error {
public:
    using Error::Error;
};

class DegenerateSpectrum : public Error {
public:
    using Error::Error;
};

class NonUnitaryBasis : public Error {
public:
    using Error::Error;
};

} // namespace dbv
