#pragma once

// Mixed-state localization operators chi_Omega * S, their spectra and the
// eigenvalue-counting experiment on the affine group, plus both
// Berezin-Lieb inequalities.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "qha/cohen.hpp"
#include "qha/convolution.hpp"

namespace qha {

inline void require_inside(const Box& box, const HaarGrid& grid) {
    const Box& w = grid.window();
    const double eps = 1e-9;
    const Box loose{w.x0 - eps, w.x1 + eps, w.u0 - eps, w.u1 + eps};
    require(loose.contains(box), ErrorKind::domain, "region exceeds the grid window");
}

inline Operator localization_operator(const Box& omega, const Operator& s, const GridPtr& grid,
                                      const Representation& rep) {
    require_inside(omega, *grid);
    return func_op_convolve(cell_indicator(omega, grid), s, rep);
}

// S * S, a nonnegative function for positive S.
inline GroupFunction s_tilde(const Operator& s, const GridPtr& grid, const Representation& rep) {
    require(is_positive(s), ErrorKind::not_positive, "S~ needs a positive operator");
    return op_op_convolve(s, s, grid, rep);
}

// sum over node pairs of w_x w_y chi(x) chi(y) S~(x y^-1), chi the covered cell fraction.
inline double second_moment(const Box& omega, const Operator& s, const GridPtr& grid, const Representation& rep) {
    require_inside(omega, *grid);
    require(is_positive(s), ErrorKind::not_positive, "second moment needs a positive operator");
    if (grid->backend() == Backend::affine && omega.is_empty()) return 0.0;
    const auto& group = grid->group();

    if (grid->backend() == Backend::cyclic) {
        const double eps = 1e-12;
        std::vector<std::size_t> ix, iu;
        for (std::size_t i = 0; i < grid->nx(); ++i)
            if (grid->xs()[i] >= omega.x0 - eps && grid->xs()[i] <= omega.x1 + eps) ix.push_back(i);
        for (std::size_t r = 0; r < grid->nu(); ++r)
            if (grid->us()[r] >= omega.u0 - eps && grid->us()[r] <= omega.u1 + eps) iu.push_back(r);
        if (ix.empty() || iu.empty()) return 0.0;
        const double w = grid->weight_r(grid->index(ix[0], iu[0]));
        const long n = group.cyclic_order();
        const auto full = full_cyclic_grid(n);
        const auto table = op_op_convolve(s, s, full, rep);
        double acc = 0.0;
        for (auto rx : iu)
            for (auto cx : ix)
                for (auto ry : iu)
                    for (auto cy : ix) {
                        const auto z = group.compose(grid->node(grid->index(cx, rx)),
                                                     group.inverse(grid->node(grid->index(cy, ry))));
                        acc += table[full->index(static_cast<std::size_t>(z.j()), static_cast<std::size_t>(z.k()))].real();
                    }
        return w * w * acc;
    }

    // Cell-covered fractions factor into a column part and a row part.
    std::vector<std::pair<std::size_t, double>> cols, rows;
    for (std::size_t i = 0; i < grid->nx(); ++i)
        if (const double f = cell_fraction(grid->xs()[i], grid->hx(), omega.x0, omega.x1); f > 0) cols.emplace_back(i, f);
    for (std::size_t r = 0; r < grid->nu(); ++r)
        if (const double f = cell_fraction(grid->us()[r], grid->hu(), omega.u0, omega.u1); f > 0) rows.emplace_back(r, f);
    if (cols.empty() || rows.empty()) return 0.0;
    const double w = grid->hx() * grid->hu();

    // (x, a)(y, b)^-1 = (x - (a/b) y, a/b): only the row difference matters,
    // weighted by the row pairs that share it.
    std::map<long, double> multiplicity;
    for (const auto& [rx, fx] : rows)
        for (const auto& [ry, fy] : rows) multiplicity[static_cast<long>(rx) - static_cast<long>(ry)] += fx * fy;
    std::vector<std::pair<long, double>> diffs(multiplicity.begin(), multiplicity.end());
    const double hu = grid->hu();
    return parallel::sum(diffs.size(), 0.0, [&](std::size_t d) {
        const auto [dr, mult] = diffs[d];
        const double ratio = std::exp(static_cast<double>(dr) * hu);
        std::vector<GroupPoint> pts;
        std::vector<double> weights;
        pts.reserve(cols.size() * cols.size());
        for (const auto& [cx, fx] : cols)
            for (const auto& [cy, fy] : cols) {
                pts.push_back(GroupPoint::affine(grid->xs()[cx] - ratio * grid->xs()[cy], ratio));
                weights.push_back(fx * fy);
            }
        const auto vals = op_op_values(s, s, pts, rep);
        double acc = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i) acc += weights[i] * vals[i].real();
        return mult * w * w * acc;
    });
}

struct LocalizationReport {
    Box omega;             // the (scaled) region
    double scale = 1.0;    // R
    Spectrum spectrum;
    double mu_r = 0.0;         // quadrature measure of the region on the experiment grid
    double mu_r_exact = 0.0;   // closed-form measure
    double trace = 0.0;        // tr(chi * S)
    double trace_s = 0.0;      // tr(S)
    double second_moment = 0.0;  // tr((chi * S)^2)
    double delta = 0.5;
    std::size_t count_above = 0;
    double ratio = 0.0;        // count / (tr(S) mu_r)
    double deviation = 0.0;    // |count - tr(S) mu_r|
    double lemma_bound = 0.0;  // max(1/delta, 1/(1-delta)) |tr((chi*S)^2) - tr(S) mu_r|
    bool lemma_holds = false;
    std::size_t grid_nx = 0, grid_nu = 0;
};

inline LocalizationReport localization_report(const Box& omega, const Operator& s, double delta, const GridPtr& grid,
                                              const Representation& rep) {
    require(delta > 0 && delta < 1, ErrorKind::invalid_argument, "delta must lie in (0, 1)");
    const Operator op = localization_operator(omega, s, grid, rep);
    LocalizationReport r;
    r.omega = omega;
    r.delta = delta;
    r.spectrum = spectral_decomposition(op, 1e-8);
    r.mu_r = cell_indicator(omega, grid).integral_r().real();
    r.mu_r_exact = grid->group().right_haar_measure(omega);
    r.trace = trace(op).real();
    r.trace_s = trace(s).real();
    r.second_moment = op.matrix().squaredNorm();
    for (Eigen::Index i = 0; i < r.spectrum.values.size(); ++i)
        if (r.spectrum.values[i] > 1.0 - delta) ++r.count_above;
    const double expected = r.trace_s * r.mu_r;
    r.ratio = expected > 1e-12 ? static_cast<double>(r.count_above) / expected : 0.0;
    r.deviation = std::abs(static_cast<double>(r.count_above) - expected);
    r.lemma_bound = std::max(1.0 / delta, 1.0 / (1.0 - delta)) * std::abs(r.second_moment - expected);
    r.lemma_holds = r.deviation <= r.lemma_bound + 1e-6;
    r.grid_nx = grid->nx();
    r.grid_nu = grid->nu();
    return r;
}

struct ScalingSettings {
    double x_step = 1.0 / 16;  // target node spacing along x
    double margin = 2.0;       // metric margin around R Omega
    std::size_t cap = 512;     // max nodes per axis
};

inline std::vector<LocalizationReport> scaling_experiment(const Box& omega, const Operator& s, double delta,
                                                          const std::vector<double>& scales,
                                                          const Representation& rep,
                                                          const ScalingSettings& settings = {}) {
    require(rep.backend() == Backend::affine, ErrorKind::unsupported, "the scaling experiment is affine only");
    require(delta > 0 && delta < 1, ErrorKind::invalid_argument, "delta must lie in (0, 1)");
    require(is_density_operator(s, rep, 1e-8), ErrorKind::invalid_argument, "S must be a density operator");
    const auto band = detail::support_band(s.matrix(), 1e-12);
    const long n = static_cast<long>(rep.basis().dim());
    std::vector<LocalizationReport> out;
    for (double r : scales) {
        require(r > 0, ErrorKind::invalid_argument, "scales must be positive");
        const Box region = rep.group().scale_set(omega, r);
        const Box window{region.x0 - settings.margin, region.x1 + settings.margin, region.u0 - settings.margin,
                         region.u1 + settings.margin};
        const auto nx = std::min<std::size_t>(
            settings.cap, static_cast<std::size_t>(std::ceil((window.x1 - window.x0) / settings.x_step - 1e-9)));
        const Box snapped = rep.lattice_box(window);
        const auto rows = static_cast<std::size_t>(std::lround((snapped.u1 - snapped.u0) / rep.basis().delta()));
        require(rows <= settings.cap, ErrorKind::domain,
                "scaled region needs " + std::to_string(rows) + " dilation rows, above the cap of " +
                    std::to_string(settings.cap));
        const long m_lo = static_cast<long>(std::ceil(region.u0 / rep.basis().delta() - 1e-9));
        const long m_hi = static_cast<long>(std::floor(region.u1 / rep.basis().delta() + 1e-9));
        require(band.lo + m_lo >= 0 && band.hi + m_hi <= n, ErrorKind::domain,
                "basis too small: shifted copies of S leave the truncated basis at scale " + std::to_string(r));
        const auto grid = rep.lattice_grid(window, nx);
        auto report = localization_report(region, s, delta, grid, rep);
        report.scale = r;
        out.push_back(std::move(report));
    }
    return out;
}

// R^2 sum_{x in Omega} w_x phi(Gamma_R(x) Gamma_R(y)^-1) with phi = S~ / tr(S);
// tends to 1 as R grows. Rows of the Omega grid are spaced so that Gamma_R maps
// them onto the dilation lattice.
inline double approximate_identity(const Operator& s, const Box& omega, double r, const GroupPoint& y,
                                   const Representation& rep, double x_step = 1.0 / 8) {
    require(rep.backend() == Backend::affine, ErrorKind::unsupported, "approximate identity is affine only");
    require(r > 0, ErrorKind::invalid_argument, "scale must be positive");
    const auto& group = rep.group();
    const double du = rep.basis().delta() / r;
    const long m0 = static_cast<long>(std::ceil(omega.u0 / du - 1e-9));
    const long m1 = static_cast<long>(std::floor(omega.u1 / du + 1e-9));
    const auto nx = static_cast<std::size_t>(std::ceil((omega.x1 - omega.x0) * r / x_step - 1e-9));
    const double hx = (omega.x1 - omega.x0) / static_cast<double>(nx);
    const GroupPoint ry_inv = group.inverse(group.scale_map(y, r));
    std::vector<GroupPoint> pts;
    for (long m = m0; m <= m1; ++m)
        for (std::size_t i = 0; i < nx; ++i) {
            const auto x = GroupPoint::affine_chart(omega.x0 + (static_cast<double>(i) + 0.5) * hx,
                                                    static_cast<double>(m) * du);
            pts.push_back(group.compose(group.scale_map(x, r), ry_inv));
        }
    const auto vals = op_op_values(s, s, pts, rep);
    double acc = 0.0;
    for (const auto& v : vals) acc += v.real();
    return r * r * hx * du * acc / trace(s).real();
}

struct InequalityReport {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
    double slack() const { return rhs - lhs; }
};

inline double checked(const std::function<double(double)>& phi, double t) {
    const double v = phi(t);
    require(std::isfinite(v), ErrorKind::domain, "function undefined at " + std::to_string(t));
    return v;
}

// sum_x w_x Phi((T * S)(x))  <=  tr(Phi(tr(S) T)) tr(D^-1 S D^-1) / tr(S)
inline InequalityReport berezin_lieb_operator_side(const Operator& t, const Operator& s,
                                                   const std::function<double(double)>& phi, const GridPtr& grid,
                                                   const Representation& rep) {
    require(is_positive(t), ErrorKind::not_positive, "T must be positive");
    require(is_positive(s), ErrorKind::not_positive, "S must be positive");
    const double trs = trace(s).real();
    require(trs > 0, ErrorKind::invalid_argument, "S must have positive trace");
    const double c = trace(rep.apply_duflo_inv(s)).real();
    const auto conv = op_op_convolve(t, s, grid, rep);
    InequalityReport r;
    r.lhs = parallel::sum(grid->size(), 0.0, [&](std::size_t i) {
        return grid->weight_r(i) * checked(phi, conv[i].real());
    });
    r.rhs = trace(functional_calculus(trs * t, phi)).real() * c / trs;
    r.holds = r.lhs <= r.rhs + 1e-8 * std::abs(r.rhs);
    return r;
}

// tr(Phi(f * S))  <=  (tr(S) / tr(D^-1 S D^-1)) sum_x w_x Phi(tr(D^-1 S D^-1) f(x))
inline InequalityReport berezin_lieb_function_side(const GroupFunction& f, const Operator& s,
                                                   const std::function<double(double)>& phi,
                                                   const Representation& rep) {
    require(is_positive(s), ErrorKind::not_positive, "S must be positive");
    for (const auto& v : f.values())
        require(v.real() >= 0 && v.imag() == 0, ErrorKind::invalid_argument, "f must be real and nonnegative");
    const double trs = trace(s).real();
    const double c = trace(rep.apply_duflo_inv(s)).real();
    require(c > 0, ErrorKind::invalid_argument, "S must have a positive admissibility constant");
    const auto& grid = *f.grid();
    InequalityReport r;
    r.lhs = trace(functional_calculus(func_op_convolve(f, s, rep), phi)).real();
    r.rhs = trs / c * parallel::sum(grid.size(), 0.0, [&](std::size_t i) {
        return grid.weight_r(i) * checked(phi, c * f[i].real());
    });
    r.holds = r.lhs <= r.rhs + 1e-8 * std::abs(r.rhs);
    return r;
}

}  // namespace qha
