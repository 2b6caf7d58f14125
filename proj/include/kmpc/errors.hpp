#pragma once

#include <stdexcept>
#include <string>

namespace kmpc {

/// Base class for all library errors. Each error carries the process exit
/// code the command-line tool reports for it.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, int exit_code)
        : std::runtime_error(what), exit_code_(exit_code) {}

    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

/// Malformed problem data, dimension mismatches, bad tolerances, bad files.
class InvalidInput : public Error {
public:
    explicit InvalidInput(const std::string& what) : Error(what, 2) {}
};

/// Configuration file errors (unknown keys, bad values, inconsistent settings).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, 2) {}
};

/// A factorization failed or an iterate left its admissible region.
class NumericalBreakdown : public Error {
public:
    NumericalBreakdown(const std::string& what, int iteration)
        : Error(what + " (iteration " + std::to_string(iteration) + ")", 3),
          iteration_(iteration) {}

    int iteration() const noexcept { return iteration_; }

private:
    int iteration_;
};

/// The PDE integrator produced non-finite values.
class PlantInstability : public Error {
public:
    PlantInstability(const std::string& what, int substep)
        : Error(what + " (substep " + std::to_string(substep) + ")", 4),
          substep_(substep) {}

    int substep() const noexcept { return substep_; }

private:
    int substep_;
};

}  // namespace kmpc
