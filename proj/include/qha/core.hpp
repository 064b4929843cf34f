#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qha {

using cplx = std::complex<double>;
using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;
using RealVec = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;

enum class Backend { affine, cyclic };

inline const char* backend_name(Backend b) { return b == Backend::affine ? "affine" : "cyclic"; }

enum class ErrorKind {
    backend_mismatch,
    invalid_argument,
    unsupported,
    not_self_adjoint,
    not_positive,
    domain,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool ok, ErrorKind kind, const std::string& what) {
    if (!ok) throw Error(kind, what);
}

}  // namespace qha
