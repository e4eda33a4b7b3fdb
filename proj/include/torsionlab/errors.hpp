#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace torsionlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed domain or parameter outside its admissible set.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Grid spacing too coarse for the smallest geometric feature.
class UnresolvableFeature : public Error {
public:
    UnresolvableFeature(const std::string& what, double max_h)
        : Error(what), max_h_(max_h) {}
    double max_admissible_h() const noexcept { return max_h_; }

private:
    double max_h_;
};

/// Iterative method failed to reach its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::size_t iterations, double residual)
        : Error(what), iterations_(iterations), residual_(residual) {}
    std::size_t iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    std::size_t iterations_;
    double residual_;
};

/// Perforation parameters outside the asymptotic regime of the radius formulas.
class RegimeError : public Error {
public:
    RegimeError(const std::string& what, long smallest_n)
        : Error(what), smallest_n_(smallest_n) {}
    long smallest_admissible_n() const noexcept { return smallest_n_; }

private:
    long smallest_n_;
};

} // namespace torsionlab
