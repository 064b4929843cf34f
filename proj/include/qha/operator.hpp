#pragma once

// Dense operators on a truncated basis. Matrices are kept in orthonormal
// coordinates (see basis.hpp); from_sampled/to_sampled convert to and from
// the matrix acting on raw function samples.

#include <algorithm>
#include <array>
#include <bit>
#include <limits>
#include <string>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "qha/basis.hpp"

namespace qha {

class Operator {
public:
    Operator(HilbertBasis basis, Mat m) : basis_(std::move(basis)), m_(std::move(m)) {
        require(m_.rows() == basis_.size() && m_.cols() == basis_.size(), ErrorKind::invalid_argument,
                "operator matrix must be N x N for its basis");
    }

    static Operator zero(const HilbertBasis& basis) { return {basis, Mat::Zero(basis.size(), basis.size())}; }
    static Operator identity(const HilbertBasis& basis) { return {basis, Mat::Identity(basis.size(), basis.size())}; }

    // M acts on samples psi(omega_j); the stored matrix is W^{1/2} M W^{-1/2}.
    static Operator from_sampled(const HilbertBasis& basis, const Mat& sampled) {
        Operator op(basis, sampled);
        for (Eigen::Index i = 0; i < op.m_.rows(); ++i)
            for (Eigen::Index j = 0; j < op.m_.cols(); ++j)
                op.m_(i, j) *= std::sqrt(basis.weight(static_cast<std::size_t>(i)) /
                                         basis.weight(static_cast<std::size_t>(j)));
        return op;
    }

    Mat to_sampled() const {
        Mat out = m_;
        for (Eigen::Index i = 0; i < out.rows(); ++i)
            for (Eigen::Index j = 0; j < out.cols(); ++j)
                out(i, j) *= std::sqrt(basis_.weight(static_cast<std::size_t>(j)) /
                                       basis_.weight(static_cast<std::size_t>(i)));
        return out;
    }

    const HilbertBasis& basis() const { return basis_; }
    const Mat& matrix() const { return m_; }
    Mat& matrix() { return m_; }
    Eigen::Index size() const { return m_.rows(); }

    Vec apply(const Vec& v) const { return m_ * v; }
    Operator adjoint() const { return {basis_, m_.adjoint()}; }

    void check_same_basis(const Operator& o) const {
        require(basis_ == o.basis_, ErrorKind::backend_mismatch, "operators live on different bases");
    }

    Operator& operator+=(const Operator& o) {
        check_same_basis(o);
        m_ += o.m_;
        return *this;
    }
    Operator& operator-=(const Operator& o) {
        check_same_basis(o);
        m_ -= o.m_;
        return *this;
    }
    Operator& operator*=(cplx s) {
        m_ *= s;
        return *this;
    }

private:
    HilbertBasis basis_;
    Mat m_;
};

inline Operator operator+(Operator a, const Operator& b) { return a += b; }
inline Operator operator-(Operator a, const Operator& b) { return a -= b; }
inline Operator operator*(cplx s, Operator a) { return a *= s; }
inline Operator operator*(const Operator& a, const Operator& b) {
    a.check_same_basis(b);
    return {a.basis(), a.matrix() * b.matrix()};
}

// (psi (x) phi)(xi) = <xi, phi> psi
inline Operator rank_one(const HilbertBasis& basis, const Vec& psi, const Vec& phi) {
    require(psi.size() == basis.size() && phi.size() == basis.size(), ErrorKind::backend_mismatch,
            "vectors do not match the basis");
    return {basis, psi * phi.adjoint()};
}

inline cplx trace(const Operator& s) { return s.matrix().trace(); }

// <A, B>_HS = tr(A B*)
inline cplx hs_inner(const Operator& a, const Operator& b) {
    a.check_same_basis(b);
    return (a.matrix().array() * b.matrix().conjugate().array()).sum();
}

inline RealVec singular_values(const Operator& s) {
    Eigen::BDCSVD<Mat> svd(s.matrix());
    return svd.singularValues();
}

inline double schatten_norm(const Operator& s, double p) {
    require(p >= 1.0, ErrorKind::invalid_argument, "Schatten norms need p >= 1");
    const RealVec sv = singular_values(s);
    if (std::isinf(p)) return sv.size() ? sv.maxCoeff() : 0.0;
    if (p == 1.0) return sv.sum();
    if (p == 2.0) return s.matrix().norm();
    return std::pow(sv.array().pow(p).sum(), 1.0 / p);
}

inline double asymmetry(const Operator& s) {
    const double scale = s.matrix().norm();
    if (scale == 0.0) return 0.0;
    return (s.matrix() - s.matrix().adjoint()).norm() / scale;
}

struct Spectrum {
    RealVec values;   // descending
    Mat vectors;      // orthonormal columns
    double asymmetry = 0.0;
};

// Eigen-decomposition of (S + S*)/2. Eigenvalues descend; ties are ordered by
// the index of each eigenvector's largest component, and every eigenvector is
// rotated so that component is real and positive.
inline Spectrum spectral_decomposition(const Operator& s, double max_asymmetry = 1e-10) {
    Spectrum out;
    out.asymmetry = asymmetry(s);
    require(out.asymmetry <= max_asymmetry, ErrorKind::not_self_adjoint,
            "operator is not self-adjoint (relative asymmetry " + std::to_string(out.asymmetry) + ")");
    const Mat h = 0.5 * (s.matrix() + s.matrix().adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> solver(h);
    require(solver.info() == Eigen::Success, ErrorKind::domain, "eigen-decomposition did not converge");
    const RealVec& vals = solver.eigenvalues();
    const Mat& vecs = solver.eigenvectors();
    const Eigen::Index n = vals.size();
    std::vector<Eigen::Index> lead(static_cast<std::size_t>(n));
    for (Eigen::Index c = 0; c < n; ++c) {
        Eigen::Index best = 0;
        vecs.col(c).cwiseAbs().maxCoeff(&best);
        lead[static_cast<std::size_t>(c)] = best;
    }
    const double tie = 1e-12 * std::max(1.0, vals.cwiseAbs().maxCoeff());
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (std::abs(vals[a] - vals[b]) > tie) return vals[a] > vals[b];
        return lead[static_cast<std::size_t>(a)] < lead[static_cast<std::size_t>(b)];
    });
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const Eigen::Index src = order[static_cast<std::size_t>(c)];
        out.values[c] = vals[src];
        Vec v = vecs.col(src);
        const cplx pivot = v[lead[static_cast<std::size_t>(src)]];
        if (std::abs(pivot) > 0) v *= std::conj(pivot) / std::abs(pivot);
        out.vectors.col(c) = v;
    }
    return out;
}

inline double min_eigenvalue(const Operator& s) {
    const Mat h = 0.5 * (s.matrix() + s.matrix().adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

inline bool is_positive(const Operator& s, double rel_tol = 1e-10) {
    if (asymmetry(s) > 1e-10) return false;
    const double scale = schatten_norm(s, std::numeric_limits<double>::infinity());
    return min_eigenvalue(s) >= -rel_tol * scale;
}

// Phi(S) = sum Phi(lambda_n) v_n (x) v_n
inline Operator functional_calculus(const Operator& s, const std::function<double(double)>& phi) {
    const Spectrum sp = spectral_decomposition(s);
    RealVec mapped(sp.values.size());
    for (Eigen::Index i = 0; i < sp.values.size(); ++i) {
        mapped[i] = phi(sp.values[i]);
        if (!std::isfinite(mapped[i])) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "function undefined at eigenvalue " << sp.values[i];
            throw Error(ErrorKind::domain, msg.str());
        }
    }
    return {s.basis(), sp.vectors * mapped.cast<cplx>().asDiagonal() * sp.vectors.adjoint()};
}

namespace detail {

template <class T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

template <class T>
void put(std::ostream& out, T v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    require(static_cast<bool>(in), ErrorKind::invalid_argument, "truncated operator stream");
    return to_little(v);
}

}  // namespace detail

// Layout: u64 rows, u64 cols, then row-major (re, im) f64 pairs, little-endian.
inline void write_binary(std::ostream& out, const Operator& s) {
    const Mat& m = s.matrix();
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            detail::put<double>(out, m(i, j).real());
            detail::put<double>(out, m(i, j).imag());
        }
    }
}

inline Operator read_binary(std::istream& in, const HilbertBasis& basis) {
    const auto rows = detail::get<std::uint64_t>(in);
    const auto cols = detail::get<std::uint64_t>(in);
    require(rows == basis.dim() && cols == basis.dim(), ErrorKind::invalid_argument,
            "stored operator dimensions do not match the basis");
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double re = detail::get<double>(in);
            const double im = detail::get<double>(in);
            m(i, j) = cplx(re, im);
        }
    }
    return {basis, std::move(m)};
}

}  // namespace qha
