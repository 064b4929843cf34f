#pragma once

#include <random>

#include "qha/basis.hpp"
#include "qha/operator.hpp"

namespace qha::testing {

inline Vec random_vector(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> g;
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(g(rng), g(rng));
    return v;
}

inline Mat random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols) {
    std::normal_distribution<double> g;
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = cplx(g(rng), g(rng));
    return m;
}

// Random vector supported on [lo, hi).
inline Vec random_band_vector(std::mt19937_64& rng, Eigen::Index n, Eigen::Index lo, Eigen::Index hi) {
    Vec v = Vec::Zero(n);
    v.segment(lo, hi - lo) = random_vector(rng, hi - lo);
    return v;
}

inline Operator random_positive(std::mt19937_64& rng, const HilbertBasis& basis, Eigen::Index rank) {
    const Mat a = random_matrix(rng, basis.size(), rank);
    return {basis, a * a.adjoint()};
}

inline double rel(double measured, double expected) {
    return std::abs(measured - expected) / std::max(std::abs(expected), 1e-300);
}

inline double rel(cplx measured, cplx expected) {
    return std::abs(measured - expected) / std::max(std::abs(expected), 1e-300);
}

}  // namespace qha::testing
