#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace noonsim {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using SparseCMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using CTriplet = Eigen::Triplet<Complex>;

inline constexpr Complex kI{0.0, 1.0};

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration; `path` names the offending field (dotted, may be empty).
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Layout mismatch, state outside a basis, bad slot index.
class BasisError : public Error {
public:
    using Error::Error;
};

/// Integrator or positivity failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

}  // namespace noonsim
