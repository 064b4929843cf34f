#pragma once

// Wavelet transforms with operator windows:
//   vector input:   W_S(psi)(x) = S sigma(x) psi
//   operator input: W_S(T)(x)   = S sigma(x) T
// Raw samples carry the representation's phase convention; the inner
// products below are phase-independent.

#include <vector>

#include "qha/convolution.hpp"

namespace qha {

struct VectorField {
    GridPtr grid;
    std::vector<Vec> samples;
    bool admissible_window = true;  // growth probe verdict for S*S

    GroupFunction norms() const {
        GroupFunction out(grid);
        for (std::size_t i = 0; i < samples.size(); ++i) out[i] = samples[i].norm();
        return out;
    }
};

inline VectorField op_window_transform(const Operator& s, const Vec& psi, const GridPtr& grid,
                                       const Representation& rep) {
    rep.check_operator(s);
    rep.check_grid(*grid);
    VectorField out{grid, std::vector<Vec>(grid->size()), admissibility_report(s.adjoint() * s, rep).converged};
    parallel::for_each_index(grid->size(), [&](std::size_t i) { out.samples[i] = s.apply(rep.apply(grid->node(i), psi)); });
    return out;
}

// sum_x w_x <a(x), b(x)>
inline cplx field_inner(const VectorField& a, const VectorField& b) {
    require(a.grid == b.grid, ErrorKind::invalid_argument, "fields live on different grids");
    return parallel::sum(a.samples.size(), cplx(0.0), [&](std::size_t i) {
        return a.grid->weight_r(i) * inner(a.samples[i], b.samples[i]);
    });
}

// Samples are produced on demand; nothing per node is stored.
class OperatorField {
public:
    OperatorField(Operator window, Operator input, GridPtr grid, Representation rep)
        : window_(std::move(window)), input_(std::move(input)), grid_(std::move(grid)), rep_(std::move(rep)) {
        rep_.check_operator(window_);
        rep_.check_operator(input_);
        rep_.check_grid(*grid_);
        admissible_window_ = admissibility_report(window_.adjoint() * window_, rep_).converged;
    }

    const GridPtr& grid() const { return grid_; }
    const Operator& window() const { return window_; }
    const Operator& input() const { return input_; }
    const Representation& representation() const { return rep_; }
    bool admissible_window() const { return admissible_window_; }

    Operator sample(std::size_t i) const {
        const auto& g = grid_->node(i);
        const Mat& t = input_.matrix();
        Mat moved(t.rows(), t.cols());
        for (Eigen::Index c = 0; c < t.cols(); ++c) moved.col(c) = rep_.apply(g, t.col(c));
        return {rep_.basis(), window_.matrix() * moved};
    }

private:
    Operator window_;
    Operator input_;
    GridPtr grid_;
    Representation rep_;
    bool admissible_window_ = true;
};

// <A(x), B(x)>_HS = tr(S_B* S_A sigma(x) T_A T_B* sigma(x)*), summed with the grid weights.
inline cplx field_inner(const OperatorField& a, const OperatorField& b) {
    require(a.grid() == b.grid(), ErrorKind::invalid_argument, "fields live on different grids");
    const auto& rep = a.representation();
    const Operator inputs = a.input() * b.input().adjoint();
    const Mat windows_t = (b.window().adjoint() * a.window()).matrix().transpose();
    const auto& grid = *a.grid();
    return parallel::sum(grid.size(), cplx(0.0), [&](std::size_t i) {
        return grid.weight_r(i) * windows_t.cwiseProduct(rep.conjugate_forward(inputs, grid.node(i)).matrix()).sum();
    });
}

inline OperatorField op_wavelet_transform(const Operator& s, const Operator& t, const GridPtr& grid,
                                          const Representation& rep) {
    return {s, t, grid, rep};
}

// <S1 D^-1, S2 D^-1>_HS
inline cplx window_pairing(const Operator& s1, const Operator& s2, const Representation& rep) {
    const Mat dinv = rep.duflo().diag_inv.cast<cplx>().asDiagonal();
    return hs_inner(Operator(rep.basis(), s1.matrix() * dinv), Operator(rep.basis(), s2.matrix() * dinv));
}

}  // namespace qha
