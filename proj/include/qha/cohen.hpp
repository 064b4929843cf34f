#pragma once

// Quadratic time-scale / time-frequency distributions
//   Q_S(psi, phi)(x) = <S sigma(x) psi, sigma(x) phi> = ((psi (x) phi) * S)(x).

#include <limits>
#include <vector>

#include "qha/convolution.hpp"

namespace qha {

struct CohenMap {
    GroupFunction values;
    double sup_bound = 0.0;  // ||S|| ||psi|| ||phi||
};

inline CohenMap cohen_map(const Operator& s, const Vec& psi, const Vec& phi, const GridPtr& grid,
                          const Representation& rep) {
    const auto& b = rep.basis();
    CohenMap out{op_op_convolve(rank_one(b, psi, phi), s, grid, rep), 0.0};
    out.sup_bound = schatten_norm(s, std::numeric_limits<double>::infinity()) * psi.norm() * phi.norm();
    return out;
}

// |<xi, sigma(x) psi>|^2
inline CohenMap scalogram(const Vec& xi, const Vec& psi, const GridPtr& grid, const Representation& rep) {
    require(xi.norm() > 0, ErrorKind::invalid_argument, "analysing window must be nonzero");
    return cohen_map(rank_one(rep.basis(), xi, xi), psi, psi, grid, rep);
}

// Direct evaluation of |<xi, sigma(x) psi>|^2 node by node.
inline GroupFunction scalogram_direct(const Vec& xi, const Vec& psi, const GridPtr& grid, const Representation& rep) {
    GroupFunction out(grid);
    parallel::for_each_index(grid->size(), [&](std::size_t i) {
        out[i] = std::norm(inner(xi, rep.apply(grid->node(i), psi)));
    });
    return out;
}

struct PositiveExpansion {
    GroupFunction total;
    std::vector<double> weights;        // eigenvalues lambda_n of S
    std::vector<GroupFunction> terms;   // lambda_n |<psi, sigma(x)* phi_n>|^2
};

// Q_S(psi) as a positive combination of spectrograms of the eigenvectors of S.
inline PositiveExpansion positive_expansion(const Operator& s, const Vec& psi, const GridPtr& grid,
                                            const Representation& rep, double rel_cutoff = 1e-12) {
    require(is_positive(s), ErrorKind::not_positive, "expansion needs a positive operator");
    const Spectrum sp = spectral_decomposition(s);
    const double top = sp.values.size() ? sp.values[0] : 0.0;
    PositiveExpansion out{GroupFunction(grid), {}, {}};
    std::vector<Vec> moved(grid->size());
    parallel::for_each_index(grid->size(), [&](std::size_t i) { moved[i] = rep.apply(grid->node(i), psi); });
    for (Eigen::Index n = 0; n < sp.values.size(); ++n) {
        const double lambda = sp.values[n];
        if (!(lambda > rel_cutoff * top)) continue;
        GroupFunction term(grid);
        const Vec v = sp.vectors.col(n);
        for (std::size_t i = 0; i < grid->size(); ++i) term[i] = lambda * std::norm(inner(moved[i], v));
        out.total += term;
        out.weights.push_back(lambda);
        out.terms.push_back(std::move(term));
    }
    return out;
}

struct UncertaintyReport {
    double mass = 0.0;        // sum over the box of w |Q_S(psi)|
    double epsilon = 0.0;     // mass = (1 - epsilon) ||S||
    double measure = 0.0;     // mu_r of the box, same quadrature
    bool bound_holds = false; // measure >= 1 - epsilon - 1e-6
};

// One distribution evaluated against several regions.
inline std::vector<UncertaintyReport> uncertainty_sweep(const Operator& s, const Vec& psi,
                                                        const std::vector<Box>& boxes, const GridPtr& grid,
                                                        const Representation& rep) {
    require(std::abs(psi.norm() - 1.0) < 1e-10, ErrorKind::invalid_argument, "uncertainty check needs a unit vector");
    const auto q = cohen_map(s, psi, psi, grid, rep).values;
    const double s_norm = schatten_norm(s, std::numeric_limits<double>::infinity());
    std::vector<UncertaintyReport> out;
    for (const auto& box : boxes) {
        const auto chi = cell_indicator(box, grid);
        UncertaintyReport r;
        r.mass = parallel::sum(grid->size(), 0.0, [&](std::size_t i) {
            return grid->weight_r(i) * chi[i].real() * std::abs(q[i]);
        });
        r.measure = chi.integral_r().real();
        r.epsilon = 1.0 - r.mass / s_norm;
        r.bound_holds = r.measure >= 1.0 - r.epsilon - 1e-6;
        out.push_back(r);
    }
    return out;
}

inline UncertaintyReport uncertainty_check(const Operator& s, const Vec& psi, const Box& box, const GridPtr& grid,
                                           const Representation& rep) {
    return uncertainty_sweep(s, psi, {box}, grid, rep).front();
}

}  // namespace qha
