#pragma once

// Convolutions between functions and operators.
//
//   (f * S)  = sum_x w_x f(x) alpha_x(S)              (operator)
//   (T * S)(x) = tr(T alpha_x(S))                      (function)
//
// On the affine backend both are evaluated one dilation row at a time: along
// a row the phases e^{2 pi i x (omega_p - omega_q)} factor through the matrix
// U(p, x) = e^{2 pi i x omega_p}, so each row costs one matrix product
// restricted to the band of indices where S is nonzero.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "qha/grid.hpp"
#include "qha/parallel.hpp"
#include "qha/representation.hpp"

namespace qha {

namespace detail {

struct Band {
    long lo = 0, hi = 0;  // half-open
    long size() const { return hi - lo; }
};

// Smallest index range containing every row and column of m with an entry
// above rel_tol * max |m_ij| (every nonzero one by default).
inline Band support_band(const Mat& m, double rel_tol = 0.0) {
    const long n = m.rows();
    long lo = n, hi = 0;
    const double cut = rel_tol * (n > 0 ? m.cwiseAbs().maxCoeff() : 0.0);
    for (long i = 0; i < n; ++i) {
        if (m.row(i).cwiseAbs().maxCoeff() > cut || m.col(i).cwiseAbs().maxCoeff() > cut) {
            lo = std::min(lo, i);
            hi = std::max(hi, i + 1);
        }
    }
    if (hi <= lo) return {0, 0};
    return {lo, hi};
}

struct Row {
    long shift = 0;
    std::vector<std::size_t> nodes;
};

// Nodes grouped by dilation row, keeping grid order.
inline std::vector<Row> dilation_rows(const HaarGrid& grid, const Representation& rep) {
    std::vector<Row> rows;
    for (std::size_t iu = 0; iu < grid.nu(); ++iu) {
        Row row;
        row.shift = rep.shift(grid.node(grid.index(0, iu)));
        for (std::size_t ix = 0; ix < grid.nx(); ++ix) row.nodes.push_back(grid.index(ix, iu));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Mat phase_matrix(const HilbertBasis& basis, const Band& band, const std::vector<double>& xs) {
    Mat u(band.size(), static_cast<Eigen::Index>(xs.size()));
    for (Eigen::Index c = 0; c < u.cols(); ++c)
        for (long p = 0; p < band.size(); ++p)
            u(p, c) = std::polar(1.0, 2 * pi * xs[static_cast<std::size_t>(c)] * basis.omega(static_cast<std::size_t>(band.lo + p)));
    return u;
}

// tr(T alpha_(x, e^{m delta})(S)) for every x in xs.
inline std::vector<cplx> affine_trace_row(const Mat& t, const Mat& s, const Band& band, const HilbertBasis& basis,
                                          long m, const std::vector<double>& xs) {
    const long n = static_cast<long>(basis.dim());
    std::vector<cplx> out(xs.size(), cplx(0.0));
    if (band.size() == 0 || xs.empty()) return out;
    Mat pair = Mat::Zero(band.size(), band.size());
    bool any = false;
    for (long q = 0; q < band.size(); ++q) {
        const long tq = band.lo + q + m;
        if (tq < 0 || tq >= n) continue;
        for (long p = 0; p < band.size(); ++p) {
            const long tp = band.lo + p + m;
            if (tp < 0 || tp >= n) continue;
            pair(p, q) = t(tq, tp) * s(band.lo + p, band.lo + q);
            any = true;
        }
    }
    if (!any) return out;
    const Mat u = phase_matrix(basis, band, xs);
    const Mat mu = pair * u.conjugate();
    const Eigen::RowVectorXcd vals = u.cwiseProduct(mu).colwise().sum();
    for (std::size_t c = 0; c < xs.size(); ++c) out[c] = vals[static_cast<Eigen::Index>(c)];
    return out;
}

}  // namespace detail

inline Operator func_op_convolve(const GroupFunction& f, const Operator& s, const Representation& rep) {
    rep.check_operator(s);
    const HaarGrid& grid = *f.grid();
    rep.check_grid(grid);
    const HilbertBasis& basis = rep.basis();
    const Eigen::Index n = basis.size();
    const Mat zero = Mat::Zero(n, n);

    if (rep.backend() == Backend::cyclic) {
        Mat sum = parallel::reduce(
            grid.size(), zero,
            [&](std::size_t begin, std::size_t end) {
                Mat acc = zero;
                for (std::size_t i = begin; i < end; ++i) {
                    const cplx c = grid.weight_r(i) * f[i];
                    if (c == cplx(0.0)) continue;
                    acc += c * rep.conjugate(s, grid.node(i)).matrix();
                }
                return acc;
            },
            [](const Mat& a, const Mat& b) { return Mat(a + b); });
        return {basis, std::move(sum)};
    }

    const detail::Band band = detail::support_band(s.matrix());
    const auto rows = detail::dilation_rows(grid, rep);
    const long nl = static_cast<long>(n);
    Mat sum = parallel::reduce(
        rows.size(), zero,
        [&](std::size_t begin, std::size_t end) {
            Mat acc = zero;
            if (band.size() == 0) return acc;
            const Mat sb = s.matrix().block(band.lo, band.lo, band.size(), band.size());
            for (std::size_t r = begin; r < end; ++r) {
                const auto& row = rows[r];
                std::vector<double> xs;
                std::vector<cplx> coef;
                for (auto node : row.nodes) {
                    const cplx c = grid.weight_r(node) * f[node];
                    if (c == cplx(0.0)) continue;
                    xs.push_back(grid.node(node).x());
                    coef.push_back(c);
                }
                if (xs.empty()) continue;
                const long m = row.shift;
                const long p0 = std::max(0L, -m - band.lo);
                const long p1 = std::min(band.size(), nl - m - band.lo);
                if (p1 <= p0) continue;
                const Mat u = detail::phase_matrix(basis, band, xs);
                Eigen::Map<const Eigen::VectorXcd> cv(coef.data(), static_cast<Eigen::Index>(coef.size()));
                const Mat kernel = u * cv.asDiagonal() * u.adjoint();
                const long len = p1 - p0;
                acc.block(band.lo + p0 + m, band.lo + p0 + m, len, len) +=
                    kernel.block(p0, p0, len, len).cwiseProduct(sb.block(p0, p0, len, len));
            }
            return acc;
        },
        [](const Mat& a, const Mat& b) { return Mat(a + b); });
    return {basis, std::move(sum)};
}

// Reference implementation through dense representation matrices.
inline Operator func_op_convolve_dense(const GroupFunction& f, const Operator& s, const Representation& rep) {
    const HaarGrid& grid = *f.grid();
    rep.check_grid(grid);
    Operator acc = Operator::zero(rep.basis());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const cplx c = grid.weight_r(i) * f[i];
        if (c == cplx(0.0)) continue;
        acc += c * rep.conjugate_dense(s, grid.node(i));
    }
    return acc;
}

// tr(T alpha_p(S)) at arbitrary points (dilations must be on the lattice).
inline std::vector<cplx> op_op_values(const Operator& t, const Operator& s, const std::vector<GroupPoint>& points,
                                      const Representation& rep) {
    rep.check_operator(t);
    rep.check_operator(s);
    std::vector<cplx> out(points.size());
    if (rep.backend() == Backend::cyclic) {
        parallel::for_each_index(points.size(), [&](std::size_t i) {
            out[i] = (t.matrix().transpose().cwiseProduct(rep.conjugate(s, points[i]).matrix())).sum();
        });
        return out;
    }
    std::map<long, std::vector<std::size_t>> by_shift;
    for (std::size_t i = 0; i < points.size(); ++i) by_shift[rep.shift(points[i])].push_back(i);
    std::vector<std::pair<long, std::vector<std::size_t>>> groups(by_shift.begin(), by_shift.end());
    const detail::Band band = detail::support_band(s.matrix());
    parallel::for_each_index(groups.size(), [&](std::size_t gi) {
        const auto& [m, idx] = groups[gi];
        std::vector<double> xs;
        for (auto i : idx) xs.push_back(points[i].x());
        const auto vals = detail::affine_trace_row(t.matrix(), s.matrix(), band, rep.basis(), m, xs);
        for (std::size_t c = 0; c < idx.size(); ++c) out[idx[c]] = vals[c];
    });
    return out;
}

inline GroupFunction op_op_convolve(const Operator& t, const Operator& s, const GridPtr& grid,
                                    const Representation& rep) {
    rep.check_grid(*grid);
    return GroupFunction(grid, op_op_values(t, s, grid->nodes(), rep));
}

// Reference implementation through dense representation matrices.
inline GroupFunction op_op_convolve_dense(const Operator& t, const Operator& s, const GridPtr& grid,
                                          const Representation& rep) {
    rep.check_grid(*grid);
    GroupFunction out(grid);
    for (std::size_t i = 0; i < grid->size(); ++i)
        out[i] = (t.matrix() * rep.conjugate_dense(s, grid->node(i)).matrix()).trace();
    return out;
}

struct AdmissibilityReport {
    cplx constant;          // tr(D^-1 S D^-1)
    double trace_norm_dsd;  // ||D^-1 S D^-1||_S1
    double growth_ratio;    // full basis vs. lowest edge band removed
    bool converged;
};

inline constexpr double growth_threshold = 1.05;

inline AdmissibilityReport admissibility_report(const Operator& s, const Representation& rep) {
    const Operator dsd = rep.apply_duflo_inv(s);
    AdmissibilityReport r{};
    r.constant = trace(dsd);
    r.trace_norm_dsd = schatten_norm(dsd, 1.0);
    if (rep.backend() == Backend::cyclic) {
        r.growth_ratio = 1.0;
    } else {
        const auto edge = static_cast<Eigen::Index>(rep.basis().interior_band().first);
        const Eigen::Index len = dsd.size() - edge;
        Eigen::BDCSVD<Mat> svd(dsd.matrix().block(edge, edge, len, len));
        const double trimmed = svd.singularValues().sum();
        if (r.trace_norm_dsd == 0.0)
            r.growth_ratio = 1.0;
        else
            r.growth_ratio = trimmed > 0 ? r.trace_norm_dsd / trimmed : std::numeric_limits<double>::infinity();
    }
    r.converged = r.growth_ratio <= growth_threshold;
    return r;
}

struct DensityOperator {
    Operator op;
    double scale;  // c in S = c sum s_n xi_n (x) xi_n
    double trace;  // tr(S)
};

// S = c sum s_n xi_n (x) xi_n with c chosen so that tr(D^-1 S D^-1) = 1.
inline DensityOperator make_density_operator(const std::vector<Vec>& vectors, const std::vector<double>& weights,
                                             const Representation& rep) {
    require(vectors.size() == weights.size() && !vectors.empty(), ErrorKind::invalid_argument,
            "need one weight per vector");
    double mass = 0.0;
    Operator s = Operator::zero(rep.basis());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        require(weights[i] >= 0 && std::isfinite(weights[i]), ErrorKind::invalid_argument,
                "density weights must be finite and nonnegative");
        if (weights[i] == 0) continue;
        mass += weights[i] * rep.duflo_inv(vectors[i]).squaredNorm();
        s += weights[i] * rank_one(rep.basis(), vectors[i], vectors[i]);
    }
    require(mass > 0, ErrorKind::invalid_argument, "all density weights are zero");
    s *= 1.0 / mass;
    const double tr = trace(s).real();
    return {std::move(s), 1.0 / mass, tr};
}

inline bool is_density_operator(const Operator& s, const Representation& rep, double tol) {
    if (!is_positive(s)) return false;
    return std::abs(trace(rep.apply_duflo_inv(s)) - cplx(1.0)) <= tol;
}

// f * (D T D)
inline Operator quantize(const GroupFunction& f, const Operator& t, const Representation& rep) {
    return func_op_convolve(f, rep.apply_duflo(t), rep);
}

}  // namespace qha
