#pragma once

// Experiment runner: setup built from a config, the proposition check
// registry behind `suite`, and the row tables behind the other subcommands.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qha/cohen.hpp"
#include "qha/config.hpp"
#include "qha/localization.hpp"
#include "qha/wavelet.hpp"

namespace qha {

inline std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace experiment_detail {

inline double rel(cplx measured, cplx expected) {
    return std::abs(measured - expected) / std::max(std::abs(expected), 1e-300);
}

inline double max_abs(const std::vector<cplx>& v) {
    double m = 0.0;
    for (const auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double sum_of(const RealVec& v) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += v[i];
    return s;
}

}  // namespace experiment_detail

// Representation, grid and window vectors shared by every experiment.
class Setup {
public:
    explicit Setup(const ExperimentConfig& cfg)
        : cfg_(cfg),
          rep_(cfg.backend == Backend::affine
                   ? Representation::affine(HilbertBasis::affine(cfg.basis_n, cfg.omega_min, cfg.delta))
                   : Representation::cyclic(static_cast<std::size_t>(cfg.cyclic_order))),
          grid_(cfg.backend == Backend::affine ? rep_.lattice_grid(cfg.window, cfg.grid_nx)
                                               : full_cyclic_grid(cfg.cyclic_order)) {}

    const ExperimentConfig& config() const { return cfg_; }
    const Representation& rep() const { return rep_; }
    const HilbertBasis& basis() const { return rep_.basis(); }
    const GridPtr& grid() const { return grid_; }
    bool affine() const { return cfg_.backend == Backend::affine; }
    Eigen::Index dim() const { return basis().size(); }

    double tol(double affine_value, double cyclic_value) const {
        return (affine() ? affine_value : cyclic_value) * cfg_.tolerance_scale;
    }

    // Independent stream per purpose, so results do not depend on check order.
    std::mt19937_64 rng(const std::string& purpose) const { return std::mt19937_64(cfg_.seed ^ fnv1a64(purpose)); }

    // Affine: log-Gaussian at the configured centers with varied phases.
    // Cyclic: seeded random unit vectors.
    Vec window(std::size_t k) const {
        if (affine()) {
            const auto& c = cfg_.window_centers;
            const double time = 0.1 * static_cast<double>(k % 5) - 0.2;
            return log_gaussian(basis(), c[k % c.size()], cfg_.window_width, time);
        }
        auto r = rng("window." + std::to_string(k));
        Vec v = gaussian_vector(r, dim());
        return v / v.norm();
    }

    Vec random_state(std::mt19937_64& r) const {
        if (affine()) {
            const auto& c = cfg_.window_centers;
            const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
            std::uniform_real_distribution<double> centre(std::log(*lo), std::log(*hi)), spread(0.85, 1.15),
                time(-0.3, 0.3);
            return log_gaussian(basis(), std::exp(centre(r)), cfg_.window_width * spread(r), time(r));
        }
        Vec v = gaussian_vector(r, dim());
        return v / v.norm();
    }

    Operator random_operator(std::mt19937_64& r, int terms = 3) const {
        if (!affine()) return {basis(), gaussian_matrix(r, dim(), dim())};
        std::normal_distribution<double> g;
        Operator out = Operator::zero(basis());
        for (int k = 0; k < terms; ++k) {
            const Vec a = random_state(r), b = random_state(r);
            out += cplx(g(r), g(r)) * rank_one(basis(), a, b);
        }
        return out;
    }

    Operator random_positive(std::mt19937_64& r, int rank = 3) const {
        if (!affine()) {
            const Mat a = gaussian_matrix(r, dim(), rank);
            return {basis(), a * a.adjoint()};
        }
        std::uniform_real_distribution<double> p(0.2, 1.0);
        Operator out = Operator::zero(basis());
        for (int k = 0; k < rank; ++k) {
            const Vec v = random_state(r);
            out += cplx(p(r)) * rank_one(basis(), v, v);
        }
        return out;
    }

    // Middle half of the affine window in each chart axis; the whole lattice for cyclic.
    Box central_box() const {
        const Box& w = grid_->window();
        if (!affine()) return w;
        const double cx = 0.5 * (w.x0 + w.x1), cu = 0.5 * (w.u0 + w.u1);
        const double rx = 0.25 * (w.x1 - w.x0), ru = 0.25 * (w.u1 - w.u0);
        return Box::chart(cx - rx, cx + rx, cu - ru, cu + ru);
    }

    // Affine: supported in the central box. Cyclic: every lattice point.
    GroupFunction random_function(std::mt19937_64& r, bool nonnegative = false, GridPtr on = nullptr) const {
        const GridPtr grid = on ? on : grid_;
        const Box inner = central_box();
        std::normal_distribution<double> g;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        return GroupFunction::sample(grid, [&](const GroupPoint& p) {
            const auto c = grid->group().chart(p);
            if (affine() && !inner.contains(c[0], c[1])) return cplx(0.0);
            return nonnegative ? cplx(u(r)) : cplx(g(r), g(r));
        });
    }

    Operator density(const std::vector<Vec>& vectors, const std::vector<double>& weights) const {
        return make_density_operator(vectors, weights, rep_).op;
    }

    // Two regions inside the grid window for the localization checks.
    std::vector<Box> regions() const {
        if (affine()) {
            const Box c = central_box();
            return {cfg_.loc_omega, c};
        }
        const double n = static_cast<double>(cfg_.cyclic_order);
        return {Box::chart(1, std::floor(n / 3), 2, std::floor(n / 2)), Box::chart(0, n - 1, 0, std::floor(n / 4))};
    }

    static Vec gaussian_vector(std::mt19937_64& r, Eigen::Index n) {
        std::normal_distribution<double> g;
        Vec v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(g(r), g(r));
        return v;
    }

    static Mat gaussian_matrix(std::mt19937_64& r, Eigen::Index rows, Eigen::Index cols) {
        std::normal_distribution<double> g;
        Mat m(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = cplx(g(r), g(r));
        return m;
    }

private:
    ExperimentConfig cfg_;
    Representation rep_;
    GridPtr grid_;
};

// ---------------------------------------------------------------------------
// Suite checks

enum class CheckStatus { pass, fail, skip };

inline const char* status_name(CheckStatus s) {
    return s == CheckStatus::pass ? "pass" : (s == CheckStatus::fail ? "fail" : "skip");
}

struct CheckResult {
    std::string id;
    CheckStatus status = CheckStatus::skip;
    double error = 0.0;
    double tolerance = 0.0;
    std::string detail;
};

// What a check measures: error against tolerance, or an explicit verdict.
struct Measurement {
    double error = 0.0;
    double tolerance = 0.0;
    std::string detail;
    int verdict = -1;  // -1: error <= tolerance decides, 0: fail, 1: pass

    static Measurement of(double error, double tolerance, std::string detail = "") {
        return {error, tolerance, std::move(detail), -1};
    }
    Measurement& require(bool ok, const std::string& why) {
        if (!ok && verdict != 0) {
            verdict = 0;
            detail += (detail.empty() ? "" : "; ") + why;
        }
        return *this;
    }
};

struct Check {
    std::string id;
    bool affine_only = false;
    std::function<Measurement(const Setup&)> run;
};

namespace checks {

using namespace experiment_detail;

inline constexpr double inf = std::numeric_limits<double>::infinity();

inline Measurement group_associativity(const Setup& s) {
    auto r = s.rng("group.associativity");
    const auto& group = s.rep().group();
    std::uniform_real_distribution<double> x(-4, 4), u(-2, 2);
    std::uniform_int_distribution<long> k(0, s.config().cyclic_order - 1);
    const auto point = [&] {
        return s.affine() ? GroupPoint::affine_chart(x(r), u(r)) : group.from_chart(k(r), k(r));
    };
    double worst = 0.0;
    for (int t = 0; t < 16; ++t) {
        const auto a = point(), b = point(), c = point();
        const auto lhs = group.chart(group.compose(group.compose(a, b), c));
        const auto rhs = group.chart(group.compose(a, group.compose(b, c)));
        for (int i = 0; i < 2; ++i) worst = std::max(worst, std::abs(lhs[i] - rhs[i]) / std::max(1.0, std::abs(rhs[i])));
        const auto id = group.chart(group.compose(a, group.inverse(a)));
        const auto e = group.chart(group.identity());
        for (int i = 0; i < 2; ++i) worst = std::max(worst, std::abs(id[i] - e[i]));
    }
    return Measurement::of(worst, s.tol(1e-10, 0.0));
}

inline Measurement group_modular(const Setup& s) {
    // d mu_r = Delta(x^-1) d mu_l and Delta is a homomorphism.
    auto r = s.rng("group.modular");
    const auto& group = s.rep().group();
    std::uniform_real_distribution<double> x(-4, 4), u(-2, 2);
    std::uniform_int_distribution<long> k(0, s.config().cyclic_order - 1);
    const auto point = [&] {
        return s.affine() ? GroupPoint::affine_chart(x(r), u(r)) : group.from_chart(k(r), k(r));
    };
    double worst = 0.0;
    for (int t = 0; t < 16; ++t) {
        const auto a = point(), b = point();
        const double ratio = group.right_haar_density(a) / group.left_haar_density(a);
        worst = std::max(worst, std::abs(ratio - group.modular(group.inverse(a))) / group.modular(group.inverse(a)));
        const double prod = group.modular(a) * group.modular(b);
        worst = std::max(worst, std::abs(group.modular(group.compose(a, b)) - prod) / prod);
    }
    return Measurement::of(worst, s.tol(1e-12, 0.0));
}

inline Measurement group_right_invariance(const Setup& s) {
    // sum_x w_x f(x y) = sum_x w_x f(x) for a smooth bump f inside the window.
    const auto& grid = *s.grid();
    const auto& group = s.rep().group();
    const Box c = s.central_box();
    const double cx = 0.5 * (c.x0 + c.x1), cu = 0.5 * (c.u0 + c.u1);
    const auto f = [&](const GroupPoint& p) {
        if (!s.affine()) return 1.0 + std::cos(2 * pi * (p.coords[0] + 2 * p.coords[1]) / s.config().cyclic_order);
        const auto q = group.chart(p);
        return std::exp(-16.0 * (std::pow(q[0] - cx, 2) + std::pow(q[1] - cu, 2)));
    };
    const GroupPoint y = s.affine() ? GroupPoint::affine_chart(0.3, 0.25) : group.from_chart(3, 5);
    double base = 0.0, moved = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        base += grid.weight_r(i) * f(grid.node(i));
        moved += grid.weight_r(i) * f(group.compose(grid.node(i), y));
    }
    return Measurement::of(std::abs(moved - base) / std::abs(base), s.tol(1e-8, 1e-13));
}

inline Measurement group_metric(const Setup& s) {
    auto r = s.rng("group.metric");
    const auto& group = s.rep().group();
    std::uniform_real_distribution<double> x(-4, 4), u(-2, 2);
    double worst = 0.0;
    for (int t = 0; t < 16; ++t) {
        const auto a = GroupPoint::affine_chart(x(r), u(r)), b = GroupPoint::affine_chart(x(r), u(r)),
                   c = GroupPoint::affine_chart(x(r), u(r));
        const double ab = group.metric(a, b), ba = group.metric(b, a);
        worst = std::max(worst, std::abs(ab - ba));
        worst = std::max(worst, ab - group.metric(a, c) - group.metric(c, b));
        worst = std::max(worst, group.metric(a, a));
    }
    return Measurement::of(std::max(worst, 0.0), s.tol(1e-12, 1e-12));
}

inline Measurement representation_composition(const Setup& s) {
    // sigma(g) sigma(h) v = sigma(gh) v up to a global phase.
    auto r = s.rng("representation.composition");
    const auto& group = s.rep().group();
    const double step = s.basis().delta();
    std::uniform_real_distribution<double> x(-2, 2);
    std::uniform_int_distribution<long> m(-8, 8), k(0, s.config().cyclic_order - 1);
    const auto point = [&] {
        return s.affine() ? GroupPoint::affine_chart(x(r), static_cast<double>(m(r)) * step)
                          : group.from_chart(k(r), k(r));
    };
    double worst = 0.0;
    for (int t = 0; t < 8; ++t) {
        const auto g = point(), h = point();
        const Vec v = s.window(static_cast<std::size_t>(t));
        const Vec a = s.rep().apply(g, s.rep().apply(h, v));
        const Vec b = s.rep().apply(group.compose(g, h), v);
        const cplx overlap = b.dot(a);
        const cplx phase = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : cplx(1.0);
        worst = std::max(worst, (a - phase * b).norm() / a.norm());
    }
    return Measurement::of(worst, s.tol(1e-10, 1e-12));
}

inline Measurement representation_conjugation(const Setup& s) {
    // Fast sigma(x) S sigma(x)* against the dense product, and positivity kept.
    auto r = s.rng("representation.conjugation");
    const Operator op = s.random_positive(r, 2);
    double worst = 0.0, lowest = 0.0;
    for (std::size_t i = 0; i < s.grid()->size(); i += s.grid()->size() / 7 + 1) {
        const auto& g = s.grid()->node(i);
        const Operator fast = s.rep().conjugate(op, g), dense = s.rep().conjugate_dense(op, g);
        const double scale = std::max(dense.matrix().cwiseAbs().maxCoeff(), 1e-300);
        worst = std::max(worst, (fast.matrix() - dense.matrix()).cwiseAbs().maxCoeff() / scale);
        lowest = std::min(lowest, min_eigenvalue(fast) / std::max(schatten_norm(op, inf), 1e-300));
    }
    return Measurement::of(worst, s.tol(1e-12, 1e-12)).require(lowest >= -1e-12, "conjugate lost positivity");
}

inline Measurement representation_duflo_covariance(const Setup& s) {
    // sigma(x) D sigma(x)* = Delta(x)^{-1/2} D away from the truncation edge.
    const Mat d = s.rep().duflo().diag.cast<cplx>().asDiagonal();
    const long n = static_cast<long>(s.dim());
    double worst = 0.0;
    for (std::size_t i = 0; i < s.grid()->size(); i += s.grid()->size() / 5 + 1) {
        const auto& g = s.grid()->node(i);
        const Mat sg = s.rep().matrix(g);
        const Mat lhs = sg * d * sg.adjoint();
        const Mat want = (1.0 / std::sqrt(s.rep().group().modular(g))) * d;
        const long m = s.affine() ? s.rep().shift(g) : 0;
        const long lo = std::max(0L, -m), hi = std::min(n, n - m);
        const double diff = (lhs.block(lo, lo, hi - lo, hi - lo) - want.block(lo, lo, hi - lo, hi - lo)).cwiseAbs().maxCoeff();
        worst = std::max(worst, diff / want.cwiseAbs().maxCoeff());
    }
    return Measurement::of(worst, s.tol(1e-12, 1e-12));
}

// One orthogonality pair: lhs sums over the grid, rhs is the closed form.
struct PairValue {
    cplx lhs, rhs;
};

inline std::vector<PairValue> orthogonality_pairs(const Setup& s) {
    const auto& grid = *s.grid();
    std::vector<PairValue> out;
    for (std::size_t p = 0; p < s.config().moyal_pairs; ++p) {
        const Vec psi1 = s.window(p), psi2 = s.window(p + 1), phi1 = s.window(p + 2), phi2 = s.window(p + 3);
        const cplx lhs = parallel::sum(grid.size(), cplx(0.0), [&](std::size_t i) {
            const auto& g = grid.node(i);
            return grid.weight_r(i) * inner(phi1, s.rep().apply_adjoint(g, psi1)) *
                   std::conj(inner(phi2, s.rep().apply_adjoint(g, psi2)));
        });
        const cplx rhs = inner(phi1, phi2) * std::conj(inner(s.rep().duflo_inv(psi1), s.rep().duflo_inv(psi2)));
        out.push_back({lhs, rhs});
    }
    return out;
}

inline double moyal_tolerance(const Setup& s) {
    return s.config().moyal_tolerance >= 0 ? s.config().moyal_tolerance : s.tol(2e-2, 1e-9);
}

inline Measurement representation_orthogonality(const Setup& s) {
    double worst = 0.0;
    for (const auto& p : orthogonality_pairs(s)) worst = std::max(worst, rel(p.lhs, p.rhs));
    return Measurement::of(worst, moyal_tolerance(s), std::to_string(s.config().moyal_pairs) + " pairs");
}

inline Measurement operator_trace_duality(const Setup& s) {
    auto r = s.rng("operator.trace_duality");
    double worst = 0.0;
    bool holder = true;
    for (int t = 0; t < 4; ++t) {
        const Operator a = s.random_operator(r), b = s.random_operator(r);
        const cplx ab = trace(a * b), ba = trace(b * a);
        worst = std::max(worst, rel(ab, ba));
        holder = holder && std::abs(ab) <= schatten_norm(a, 1) * schatten_norm(b, inf) * (1 + 1e-12);
        worst = std::max(worst, rel(hs_inner(a, b), trace(a * b.adjoint())));
    }
    return Measurement::of(worst, s.tol(1e-12, 1e-12)).require(holder, "trace Hoelder bound violated");
}

inline Measurement convolution_trace_identity(const Setup& s) {
    auto r = s.rng("convolution.trace_identity");
    double worst = 0.0;
    for (int t = 0; t < 2; ++t) {
        const Operator op = s.random_operator(r);
        const auto f = s.random_function(r);
        worst = std::max(worst, rel(trace(func_op_convolve(f, op, s.rep())), trace(op) * f.integral_r()));
    }
    return Measurement::of(worst, s.tol(1e-6, 1e-12));
}

inline GroupFunction bump(const Setup& s, double dx, double du) {
    const Box c = s.central_box();
    const double cx = 0.5 * (c.x0 + c.x1) + dx, cu = 0.5 * (c.u0 + c.u1) + du;
    return GroupFunction::sample(s.grid(), [&](const GroupPoint& p) {
        const double v = std::exp(-16.0 * (std::pow(p.x() - cx, 2) + std::pow(p.u() - cu, 2)));
        return v > 1e-12 ? v : 0.0;
    });
}

inline std::pair<Operator, Operator> compatibility_operators(const Setup& s, std::mt19937_64& r) {
    if (!s.affine()) return {s.random_operator(r), s.random_operator(r)};
    const Vec a = s.window(1), c = s.window(3);
    return {rank_one(s.basis(), a, a), rank_one(s.basis(), c, c) + 0.5 * rank_one(s.basis(), a, c)};
}

inline Measurement convolution_compatibility_operator(const Setup& s) {
    // (f * T) * S = f * (T * S) on interior nodes.
    auto r = s.rng("convolution.compatibility_operator");
    const auto [t, op] = compatibility_operators(s, r);
    const auto f = s.affine() ? bump(s, 0.3, 0.1) : s.random_function(r);
    const auto lhs = op_op_convolve(func_op_convolve(f, t, s.rep()), op, s.grid(), s.rep());
    const auto rhs = convolve_functions(f, op_op_convolve(t, op, s.grid(), s.rep()));
    const Box interior = s.central_box();
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < s.grid()->size(); ++i) {
        const auto ch = s.grid()->chart(i);
        if (!interior.contains(ch[0], ch[1])) continue;
        worst = std::max(worst, std::abs(lhs[i] - rhs[i]));
        scale = std::max(scale, std::abs(lhs[i]));
    }
    return Measurement::of(s.affine() ? worst / scale : worst, s.tol(2e-2, 1e-10),
                           s.affine() ? "sup-norm relative to sup |lhs|" : "sup-norm");
}

inline Measurement convolution_compatibility_function(const Setup& s) {
    // f * (g * T) = (f * g) * T.
    auto r = s.rng("convolution.compatibility_function");
    const Operator t = compatibility_operators(s, r).first;
    const auto f = s.affine() ? bump(s, 0.3, 0.1) : s.random_function(r);
    const auto g = s.affine() ? bump(s, -0.2, -0.2) : s.random_function(r);
    const auto nested = func_op_convolve(f, func_op_convolve(g, t, s.rep()), s.rep());
    const auto merged = func_op_convolve(convolve_functions(f, g), t, s.rep());
    const double diff = s.affine() ? (nested.matrix() - merged.matrix()).norm() / nested.matrix().norm()
                                   : (nested.matrix() - merged.matrix()).cwiseAbs().maxCoeff();
    return Measurement::of(diff, s.tol(2e-2, 1e-10), s.affine() ? "Hilbert-Schmidt relative" : "max entry");
}

inline Measurement convolution_adjointness(const Setup& s) {
    // tr((f * S) T) = sum_x w_x f(x) (T * S)(x); exact on any grid, so the
    // affine case uses the central part of the window.
    auto r = s.rng("convolution.adjointness");
    const GridPtr grid = s.affine() ? s.rep().lattice_grid(s.central_box(), s.config().grid_nx / 2) : s.grid();
    double worst = 0.0;
    for (int t = 0; t < 16; ++t) {
        const auto f = s.random_function(r, false, grid);
        const Operator op = s.random_operator(r), tt = s.random_operator(r);
        const cplx lhs = trace(func_op_convolve(f, op, s.rep()) * tt);
        const auto conv = op_op_convolve(tt, op, grid, s.rep());
        const cplx rhs = parallel::sum(grid->size(), cplx(0.0),
                                       [&](std::size_t i) { return grid->weight_r(i) * f[i] * conv[i]; });
        worst = std::max(worst, rel(lhs, rhs));
    }
    return Measurement::of(worst, 1e-9 * s.config().tolerance_scale, "16 triples");
}

inline Measurement convolution_interpolation(const Setup& s) {
    // Schatten and Lebesgue bounds for p in {1, 2, inf}.
    auto r = s.rng("convolution.interpolation");
    const Operator op = s.random_positive(r, 2), t = s.random_operator(r);
    const double s1 = schatten_norm(op, 1), d1 = schatten_norm(s.rep().apply_duflo_inv(op), 1);
    const auto f = s.random_function(r);
    const auto fs = func_op_convolve(f, op, s.rep());
    const auto ts = op_op_convolve(t, op, s.grid(), s.rep());
    double worst = 0.0;
    for (double p : {1.0, 2.0, inf}) {
        const double q = p == 1.0 ? inf : (std::isinf(p) ? 1.0 : p / (p - 1));
        const double ip = std::isinf(p) ? 0.0 : 1.0 / p, iq = std::isinf(q) ? 0.0 : 1.0 / q;
        const double b1 = f.norm_r(p) * std::pow(s1, ip) * std::pow(d1, iq);
        const double b2 = schatten_norm(t, p) * std::pow(s1, iq) * std::pow(d1, ip);
        worst = std::max({worst, schatten_norm(fs, p) / b1 - 1.0, ts.norm_r(p) / b2 - 1.0});
    }
    return Measurement::of(std::max(worst, 0.0), 1e-10, "relative excess over the bound");
}

inline Measurement convolution_left_right(const Setup& s) {
    // Both Haar integrals of T * S in closed form.
    auto r = s.rng("convolution.left_right");
    const Operator op = s.random_positive(r, 2), t = s.random_operator(r, 2);
    const auto ts = op_op_convolve(t, op, s.grid(), s.rep());
    const double right = rel(ts.integral_r(), trace(t) * trace(s.rep().apply_duflo_inv(op)));
    const double left = rel(ts.integral_l(), trace(op) * trace(s.rep().apply_duflo_inv(t)));
    return Measurement::of(std::max(left, right), s.tol(2e-2, 1e-10));
}

inline Measurement convolution_admissibility_integral(const Setup& s) {
    // (1 / tr T) sum_x w_x (T * S)(x) = tr(D^-1 S D^-1)
    auto r = s.rng("convolution.admissibility_integral");
    double worst = 0.0;
    bool converged = true;
    for (int t = 0; t < 3; ++t) {
        const Operator op = s.random_positive(r, 2);
        const Vec v = s.random_state(r);
        const Operator probe = rank_one(s.basis(), v, v);
        const auto report = admissibility_report(op, s.rep());
        converged = converged && report.converged;
        const cplx integral = op_op_convolve(probe, op, s.grid(), s.rep()).integral_r();
        worst = std::max(worst, rel(integral / trace(probe), report.constant));
    }
    return Measurement::of(worst, s.tol(2e-2, 1e-10)).require(converged, "truncation growth probe flagged");
}

inline Measurement convolution_density_transfer(const Setup& s) {
    // f >= 0 with unit left mass maps density operators to density operators.
    const Operator op = s.density({s.window(1)}, {1.0});
    const Box c = s.central_box();
    const double cx = 0.5 * (c.x0 + c.x1), cu = 0.5 * (c.u0 + c.u1);
    auto f = GroupFunction::sample(s.grid(), [&](const GroupPoint& p) {
        if (!s.affine()) return 1.0 + std::cos(2 * pi * p.coords[0] / s.config().cyclic_order);
        return std::exp(-4.0 * (std::pow(p.x() - cx, 2) + std::pow(p.u() - cu, 2)));
    });
    f *= 1.0 / f.norm_l1_l();
    const Operator out = func_op_convolve(f, op, s.rep());
    const double err = std::abs(trace(s.rep().apply_duflo_inv(out)) - cplx(1.0));
    return Measurement::of(err, s.tol(2e-2, 1e-10)).require(is_positive(out), "result not positive");
}

inline Measurement quantize_resolution_of_identity(const Setup& s) {
    // 1 * DTD = tr(T) I: exact on the cyclic model, compressed to interior probes on the affine group.
    auto r = s.rng("quantize.resolution_of_identity");
    const auto one = GroupFunction::sample(s.grid(), [](const GroupPoint&) { return 1.0; });
    if (!s.affine()) {
        const Operator t = s.random_operator(r);
        const auto q = quantize(one, t, s.rep());
        const double err = (q.matrix() - trace(t) * Mat::Identity(s.dim(), s.dim())).cwiseAbs().maxCoeff();
        return Measurement::of(err, s.tol(1e-10, 1e-10), "max entry");
    }
    const Vec v = log_gaussian(s.basis(), 1.0, 0.3);
    const Operator t = rank_one(s.basis(), v, v);
    const auto q = quantize(one, t, s.rep());
    Mat probes(s.dim(), 5);
    int k = 0;
    for (double c : {0.6, 0.8, 1.0, 1.25, 1.6}) probes.col(k++) = log_gaussian(s.basis(), c, 0.2);
    const Mat frame = Eigen::HouseholderQR<Mat>(probes).householderQ() * Mat::Identity(s.dim(), 5);
    const Mat block = frame.adjoint() * q.matrix() * frame;
    const double err = (block - trace(t) * Mat::Identity(5, 5)).cwiseAbs().maxCoeff() / std::abs(trace(t));
    return Measurement::of(err, s.tol(5e-2, 1e-10), "central 5x5 block");
}

// Cohen's class.

inline Measurement cohen_sup_bound(const Setup& s) {
    auto r = s.rng("cohen.sup_bound");
    double worst = 0.0;
    for (int t = 0; t < 2; ++t) {
        const Operator op = s.random_operator(r);
        const auto m = cohen_map(op, s.random_state(r), s.random_state(r), s.grid(), s.rep());
        worst = std::max(worst, max_abs(m.values.values()) / m.sup_bound - 1.0);
    }
    return Measurement::of(std::max(worst, 0.0), 1e-12, "relative excess over the bound");
}

inline Measurement cohen_total_mass(const Setup& s) {
    auto r = s.rng("cohen.total_mass");
    const Operator op = s.affine() ? s.random_positive(r, 2) : s.random_operator(r);
    const Vec psi = 1.7 * s.random_state(r);
    const Vec phi = s.affine() ? psi : s.random_state(r);
    const cplx mass = cohen_map(op, psi, phi, s.grid(), s.rep()).values.integral_r();
    return Measurement::of(rel(mass, inner(psi, phi) * trace(s.rep().apply_duflo_inv(op))), s.tol(2e-2, 1e-10));
}

// Basis-centred vectors on a small chart grid, so lattice shifts stay clear of the truncation edge.
struct Centred {
    GridPtr grid;
    Vec psi, xi;
    explicit Centred(const Setup& s) {
        if (s.affine()) {
            const double mid = s.basis().omega(s.basis().dim() / 2);
            grid = s.rep().lattice_grid(Box::chart(-1, 1, -1, 1), 16);
            psi = log_gaussian(s.basis(), mid, 0.3, 0.2);
            xi = log_gaussian(s.basis(), 0.875 * mid, 0.35, 0.1);
        } else {
            grid = s.grid();
            psi = s.window(0);
            xi = s.window(1);
        }
    }
};

inline Measurement cohen_covariance(const Setup& s) {
    // Q_S(sigma(x) psi)(y) = Q_S(psi)(y x) for lattice x.
    const Centred c(s);
    const auto& group = s.rep().group();
    const double step = s.basis().delta();
    const std::vector<GroupPoint> shifts =
        s.affine() ? std::vector<GroupPoint>{GroupPoint::affine_chart(0.3, 2 * step), GroupPoint::affine_chart(-0.7, -5 * step)}
                   : std::vector<GroupPoint>{group.from_chart(4, 7), group.from_chart(1, 3)};
    const Operator window = rank_one(s.basis(), c.xi, c.xi);
    double worst = 0.0;
    for (const auto& x : shifts) {
        const auto moved = cohen_map(window, s.rep().apply(x, c.psi), s.rep().apply(x, c.psi), c.grid, s.rep()).values;
        std::vector<GroupPoint> pts;
        for (std::size_t i = 0; i < c.grid->size(); ++i) pts.push_back(group.compose(c.grid->node(i), x));
        const auto direct = op_op_values(rank_one(s.basis(), c.psi, c.psi), window, pts, s.rep());
        for (std::size_t i = 0; i < c.grid->size(); ++i) worst = std::max(worst, std::abs(moved[i] - direct[i]));
    }
    return Measurement::of(worst, s.tol(1e-8, 1e-12), "max-abs");
}

inline Measurement cohen_reality_positivity(const Setup& s) {
    auto r = s.rng("cohen.reality_positivity");
    const Centred c(s);
    const Operator a = s.random_operator(r);
    const Operator herm = a + a.adjoint();
    const auto q = cohen_map(herm, c.psi, c.psi, c.grid, s.rep()).values.values();
    const double imag = [&] {
        double m = 0.0;
        for (const auto& v : q) m = std::max(m, std::abs(v.imag()));
        return m / std::max(1.0, max_abs(q));
    }();
    const auto qp = cohen_map(s.random_positive(r), c.psi, c.psi, c.grid, s.rep()).values.values();
    double negative = 0.0;
    for (const auto& v : qp) negative = std::max(negative, -v.real() / std::max(1.0, max_abs(qp)));
    return Measurement::of(std::max(imag, negative), 1e-12, "imaginary part and negative part");
}

inline Measurement cohen_linearity(const Setup& s) {
    auto r = s.rng("cohen.linearity");
    const Centred c(s);
    const Operator a = s.random_operator(r), b = s.random_operator(r);
    const Vec phi = s.affine() ? c.xi : s.random_state(r);
    const cplx alpha(0.7, -0.4), beta(-1.3, 0.2);
    const auto whole = cohen_map(alpha * a + beta * b, c.psi, phi, c.grid, s.rep()).values;
    const auto qa = cohen_map(a, c.psi, phi, c.grid, s.rep()).values, qb = cohen_map(b, c.psi, phi, c.grid, s.rep()).values;
    double worst = 0.0;
    for (std::size_t i = 0; i < whole.size(); ++i) worst = std::max(worst, std::abs(whole[i] - alpha * qa[i] - beta * qb[i]));
    return Measurement::of(worst / std::max(max_abs(whole.values()), 1e-300), 1e-12);
}

inline Measurement cohen_expansion(const Setup& s) {
    // Positive window: weighted sum of eigenvector spectrograms, weights summing to tr S.
    auto r = s.rng("cohen.expansion");
    const Centred c(s);
    const Operator op = s.random_positive(r, 3);
    const auto e = positive_expansion(op, c.psi, c.grid, s.rep());
    const auto direct = cohen_map(op, c.psi, c.psi, c.grid, s.rep()).values;
    double worst = 0.0;
    for (std::size_t i = 0; i < direct.size(); ++i) worst = std::max(worst, std::abs(e.total[i] - direct[i]));
    double weights = 0.0;
    for (double w : e.weights) weights += w;
    worst = std::max(worst / std::max(max_abs(direct.values()), 1e-300), rel(weights, trace(op)));
    return Measurement::of(worst, 1e-9);
}

inline Measurement cohen_convolved_window(const Setup& s) {
    // Q_{f * S}(x) = sum_y w_y f(y) Q_S(y x): the reflected function convolution.
    auto r = s.rng("cohen.convolved_window");
    const auto& group = s.rep().group();
    const auto& grid = *s.grid();
    const Operator op = s.random_operator(r);
    const Vec psi = s.random_state(r), phi = s.random_state(r);
    const Operator pair = rank_one(s.basis(), psi, phi);
    const Box c = s.central_box();
    const double cx = 0.5 * (c.x0 + c.x1), cu = 0.5 * (c.u0 + c.u1);
    const Box support = s.affine() ? Box::chart(cx - 0.25, cx + 0.25, cu - 0.25, cu + 0.25) : c;
    std::normal_distribution<double> g;
    const auto f = GroupFunction::sample(s.grid(), [&](const GroupPoint& p) {
        const auto ch = group.chart(p);
        return support.contains(ch[0], ch[1]) ? cplx(g(r), g(r)) : cplx(0.0);
    });
    std::vector<std::size_t> used;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (f[i] != cplx(0.0)) used.push_back(i);
    std::vector<GroupPoint> xs;
    for (std::size_t k = 0; k < 4; ++k) xs.push_back(grid.node(used[(k * 7919) % used.size()]));
    const auto lhs = op_op_values(pair, func_op_convolve(f, op, s.rep()), xs, s.rep());
    double worst = 0.0, scale = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        std::vector<GroupPoint> pts;
        for (std::size_t i : used) pts.push_back(group.compose(grid.node(i), xs[k]));
        const auto q = op_op_values(pair, op, pts, s.rep());
        cplx rhs = 0.0;
        for (std::size_t j = 0; j < used.size(); ++j) rhs += grid.weight_r(used[j]) * f[used[j]] * q[j];
        worst = std::max(worst, std::abs(lhs[k] - rhs));
        scale = std::max(scale, std::abs(lhs[k]));
    }
    return Measurement::of(worst / scale, s.tol(1e-9, 1e-10), "4 evaluation points");
}

inline Measurement cohen_positivity_probe(const Setup& s) {
    // A window with a negative eigenvalue gives a negative value for some probe vector.
    auto r = s.rng("cohen.positivity_probe");
    Mat frame(s.dim(), 3);
    for (int k = 0; k < 3; ++k) frame.col(k) = s.random_state(r);
    const Mat q = Eigen::HouseholderQR<Mat>(frame).householderQ() * Mat::Identity(s.dim(), 3);
    const Vec e1 = q.col(0), e2 = q.col(1), e3 = q.col(2);
    const Operator op = rank_one(s.basis(), e1, e1) + rank_one(s.basis(), e3, e3) - 0.5 * rank_one(s.basis(), e2, e2);
    std::normal_distribution<double> g;
    double lowest = inf;
    const GroupPoint id = s.rep().group().identity();
    for (int t = 0; t < 64; ++t) {
        const Vec psi = cplx(g(r), g(r)) * e1 + cplx(g(r), g(r)) * e2 + cplx(g(r), g(r)) * e3;
        lowest = std::min(lowest, op_op_values(rank_one(s.basis(), psi, psi), op, {id}, s.rep())[0].real());
    }
    Measurement m = Measurement::of(lowest, 0.0, "lowest value over 64 probes");
    m.verdict = lowest < 0 ? 1 : 0;
    return m;
}

inline std::vector<Box> shrinking_boxes(const Setup& s) {
    std::vector<Box> boxes;
    const Box c = s.central_box();
    const double cx = 0.5 * (c.x0 + c.x1), cu = 0.5 * (c.u0 + c.u1);
    for (int step = 0; step < 10; ++step) {
        if (s.affine()) {
            const double h = 0.5 * (c.x1 - c.x0) * std::pow(0.7, step);
            const double hu = std::min(h, 0.5 * (c.u1 - c.u0) * 2);
            boxes.push_back(Box::chart(cx - h, cx + h, cu - hu, cu + hu));
        } else {
            const double h = std::floor((s.config().cyclic_order - 1) * std::pow(0.7, step));
            boxes.push_back(Box::chart(0, h, 0, h));
        }
    }
    return boxes;
}

inline Measurement cohen_uncertainty(const Setup& s) {
    // mu_r(Omega) >= 1 - eps along a shrinking-box sweep.
    const Vec xi = s.window(1);
    const Vec psi = s.window(2);
    const auto reports =
        uncertainty_sweep(rank_one(s.basis(), xi, xi), psi / psi.norm(), shrinking_boxes(s), s.grid(), s.rep());
    double worst = 0.0;
    bool holds = true;
    for (const auto& rep : reports) {
        worst = std::max(worst, (1.0 - rep.epsilon) - rep.measure);
        holds = holds && rep.bound_holds;
    }
    return Measurement::of(std::max(worst, 0.0), 1e-6, "10 boxes; largest shortfall of the measure")
        .require(holds, "bound violated");
}

// Localization.

struct Densities {
    Operator single, mixture;
};

inline Densities densities(const Setup& s) {
    if (s.affine()) return {s.density({s.window(1)}, {1.0}), s.density({s.window(0), s.window(4)}, {1.0, 2.0})};
    auto r = s.rng("localization.densities");
    Operator single = s.density({s.random_state(r)}, {1.0});
    return {single, s.density({s.random_state(r), s.random_state(r), s.random_state(r)}, {1.0, 2.0, 0.5})};
}

inline Measurement localization_eigen_bounds(const Setup& s) {
    const Densities d = densities(s);
    double worst = 0.0, trace_err = 0.0;
    for (const auto* op : {&d.single, &d.mixture})
        for (const auto& omega : s.regions()) {
            const auto rep = localization_report(omega, *op, 0.5, s.grid(), s.rep());
            const auto& v = rep.spectrum.values;
            worst = std::max({worst, -v[v.size() - 1], v[0] - 1.0});
            trace_err = std::max(trace_err, rel(sum_of(v), rep.trace_s * rep.mu_r_exact));
        }
    return Measurement::of(std::max(worst, 0.0), 1e-8, "4 density/region pairs; distance outside [0, 1]")
        .require(trace_err <= s.tol(2e-2, 1e-10), "eigenvalue sum misses tr(S) mu_r(Omega): " + format_double(trace_err));
}

inline Measurement localization_counting_lemma(const Setup& s) {
    const Densities d = densities(s);
    double worst = -inf;
    for (double delta : {0.25, 0.5, 0.75})
        for (const auto& omega : s.regions()) {
            const auto rep = localization_report(omega, d.mixture, delta, s.grid(), s.rep());
            worst = std::max(worst, rep.deviation - rep.lemma_bound);
        }
    return Measurement::of(std::max(worst, 0.0), 1e-6, "3 deltas x 2 regions; excess over the bound");
}

inline Measurement localization_second_moment(const Setup& s) {
    // S~ double sum against the Hilbert-Schmidt norm of the localization operator.
    const Densities d = densities(s);
    const Box c = s.central_box();
    const double cx = 0.5 * (c.x0 + c.x1), cu = 0.5 * (c.u0 + c.u1);
    const std::vector<Box> boxes = s.affine()
                                       ? std::vector<Box>{Box::chart(cx - 0.5, cx + 0.5, cu - 0.3, cu + 0.3),
                                                          Box::chart(cx - 0.2, cx + 0.4, cu - 0.1, cu + 0.5)}
                                       : s.regions();
    double worst = 0.0, previous = 0.0;
    bool grows = true;
    for (const auto& omega : boxes) {
        const auto op = localization_operator(omega, d.single, s.grid(), s.rep());
        worst = std::max(worst, rel(second_moment(omega, d.single, s.grid(), s.rep()), op.matrix().squaredNorm()));
    }
    for (double h : {0.1, 0.2, 0.3}) {
        const double scale = s.affine() ? 1.0 : std::floor(s.config().cyclic_order / 2.0);
        const Box box = s.affine() ? Box::chart(cx - h, cx + h, cu - h, cu + h) : Box::chart(0, h * scale * 3, 0, h * scale * 3);
        const double m = second_moment(box, d.single, s.grid(), s.rep());
        grows = grows && m >= previous;
        previous = m;
    }
    return Measurement::of(worst, s.tol(2e-2, 1e-9)).require(grows, "second moment not monotone in the region");
}

inline Measurement localization_s_tilde(const Setup& s) {
    const Densities d = densities(s);
    const auto st = s_tilde(d.single, s.grid(), s.rep());
    const auto sp = spectral_decomposition(d.mixture);
    double sq = 0.0;
    for (Eigen::Index i = 0; i < sp.values.size(); ++i) sq += sp.values[i] * sp.values[i];
    const auto at_id = op_op_values(d.mixture, d.mixture, {s.rep().group().identity()}, s.rep())[0];
    const double total = rel(st.integral_r(), trace(d.single));
    const double identity = rel(at_id, cplx(sq));
    return Measurement::of(total, s.tol(2e-2, 1e-10), "total integral; identity value " + format_double(identity))
        .require(identity <= 1e-10, "value at the identity misses sum of squared eigenvalues");
}

inline Measurement localization_minimax(const Setup& s) {
    // Top eigenvalue is the maximum of the quadratic form, evaluated through the Cohen map.
    const Densities d = densities(s);
    const Box omega = s.regions().back();
    const auto chi = cell_indicator(omega, s.grid());
    const auto op = localization_operator(omega, d.mixture, s.grid(), s.rep());
    const auto sp = spectral_decomposition(op, 1e-8);
    const auto form = [&](const Vec& psi) {
        const auto q = cohen_map(d.mixture, psi, psi, s.grid(), s.rep()).values;
        return parallel::sum(s.grid()->size(), 0.0,
                             [&](std::size_t i) { return s.grid()->weight_r(i) * chi[i].real() * q[i].real(); });
    };
    const Vec top = sp.vectors.col(0);
    double err = std::abs(form(top) - sp.values[0]);
    auto r = s.rng("localization.minimax");
    double best = 0.0;
    for (int t = 0; t < 64; ++t) {
        Vec psi = top + 0.05 * Setup::gaussian_vector(r, s.dim()) / std::sqrt(static_cast<double>(s.dim()));
        psi /= psi.norm();
        const double v = (psi.adjoint() * op.matrix() * psi)(0, 0).real();
        err = std::max(err, v - sp.values[0]);
        best = std::max(best, v);
    }
    return Measurement::of(err, 1e-9, "top eigenvalue " + format_double(sp.values[0]))
        .require(best >= sp.values[0] - 5e-2, "perturbed maximum drifted from the top eigenvalue");
}

inline Operator scaling_density(const Setup& s) {
    return s.density({log_gaussian(s.basis(), s.config().loc_center, s.config().loc_width)}, {1.0});
}

inline std::vector<LocalizationReport> scaling_reports(const Setup& s) {
    const auto& c = s.config();
    return scaling_experiment(c.loc_omega, scaling_density(s), c.loc_delta, c.loc_scales, s.rep(),
                              ScalingSettings{c.loc_x_step, c.loc_margin, c.loc_cap});
}

inline Measurement localization_scaling(const Setup& s) {
    const auto reports = scaling_reports(s);
    Measurement m = Measurement::of(std::abs(reports.back().ratio - 1), s.config().loc_ratio_tolerance * s.config().tolerance_scale,
                                    "|ratio - 1| at the largest scale");
    for (std::size_t i = 0; i < reports.size(); ++i) {
        m.require(reports[i].lemma_holds, "counting lemma violated at R = " + format_double(reports[i].scale));
        if (i >= 2)
            m.require(std::abs(reports[i].ratio - 1) <= std::abs(reports[i - 1].ratio - 1),
                      "|ratio - 1| increased at R = " + format_double(reports[i].scale));
    }
    return m;
}

inline Measurement localization_approximate_identity(const Setup& s) {
    const auto& c = s.config();
    const Operator op = scaling_density(s);
    const double step = s.basis().delta();
    const double uy = step * std::round(0.5 * (c.loc_omega.u0 + c.loc_omega.u1) / step);
    const auto y = GroupPoint::affine_chart(0.5 * (c.loc_omega.x0 + c.loc_omega.x1), uy);
    std::vector<double> scales = c.loc_scales;
    scales.push_back(2 * scales.back());
    double previous = 0.0;
    Measurement m;
    for (double r : scales) {
        const double v = approximate_identity(op, c.loc_omega, r, y, s.rep());
        m.require(v > previous, "not increasing at R = " + format_double(r));
        m.require(v <= 1.0 + 1e-6, "exceeds 1 at R = " + format_double(r));
        previous = v;
    }
    m.error = std::abs(previous - 1);
    m.tolerance = 5e-2 * c.tolerance_scale;
    m.detail = "value at R = " + format_double(scales.back()) + (m.detail.empty() ? "" : "; " + m.detail);
    return m;
}

// Berezin-Lieb.

inline std::function<double(double)> phi_by_name(const std::string& name, double hinge) {
    if (name == "square") return [](double t) { return t * t; };
    if (name == "linear") return [](double t) { return t; };
    return [hinge](double t) { return std::max(t - hinge, 0.0); };
}

struct BerezinRow {
    std::size_t instance;
    std::string phi;
    std::string side;
    InequalityReport report;
};

inline std::vector<BerezinRow> berezin_rows(const Setup& s, const std::vector<std::string>& phis, std::size_t instances) {
    const Densities d = densities(s);
    auto r = s.rng("berezin");
    std::vector<BerezinRow> out;
    for (std::size_t i = 0; i < instances; ++i) {
        const Operator t = cplx(1.0 + 0.5 * static_cast<double>(i % 3)) * s.random_positive(r, 2);
        const Operator op = s.affine() ? d.mixture : s.random_positive(r, 3);
        const auto f = s.random_function(r, true);
        for (const auto& name : phis) {
            const auto phi = phi_by_name(name, s.config().bl_hinge);
            out.push_back({i, name, "operator", berezin_lieb_operator_side(t, op, phi, s.grid(), s.rep())});
            out.push_back({i, name, "function", berezin_lieb_function_side(f, op, phi, s.rep())});
        }
    }
    return out;
}

inline double berezin_violation(const InequalityReport& r) {
    return std::max(0.0, -r.slack() / std::max(std::abs(r.rhs), 1e-300));
}

inline Measurement berezin_both_sides(const Setup& s) {
    double worst = 0.0;
    const auto rows = berezin_rows(s, {"square", "hinge"}, s.config().bl_instances);
    for (const auto& row : rows) worst = std::max(worst, berezin_violation(row.report));
    return Measurement::of(worst, 1e-8, std::to_string(rows.size()) + " inequalities; slack deficit relative to rhs");
}

inline Measurement berezin_linear_saturation(const Setup& s) {
    const Densities d = densities(s);
    auto r = s.rng("berezin.linear");
    const Operator t = s.random_positive(r, 2);
    const auto rep = berezin_lieb_operator_side(t, d.mixture, [](double x) { return x; }, s.grid(), s.rep());
    return Measurement::of(rel(rep.lhs, rep.rhs), s.tol(2e-2, 1e-10));
}

// Wavelet transforms.

inline Measurement wavelet_vector_moyal(const Setup& s) {
    auto r = s.rng("wavelet.vector_moyal");
    const Operator s1 = s.random_operator(r, 2), s2 = s.random_operator(r, 2);
    const Vec psi1 = s.random_state(r), psi2 = s.random_state(r);
    const auto a = op_window_transform(s1, psi1, s.grid(), s.rep());
    const auto b = op_window_transform(s2, psi2, s.grid(), s.rep());
    return Measurement::of(rel(field_inner(a, b), inner(psi1, psi2) * window_pairing(s1, s2, s.rep())), s.tol(2e-2, 1e-9))
        .require(a.admissible_window && b.admissible_window, "window not admissible");
}

inline Measurement wavelet_operator_moyal(const Setup& s) {
    auto r = s.rng("wavelet.operator_moyal");
    const Operator s1 = s.random_operator(r, 2), s2 = s.random_operator(r, 2);
    const Operator t = s.random_operator(r, 2), rr = s.random_operator(r, 2);
    const cplx lhs =
        field_inner(op_wavelet_transform(s1, t, s.grid(), s.rep()), op_wavelet_transform(s2, rr, s.grid(), s.rep()));
    return Measurement::of(rel(lhs, hs_inner(t, rr) * window_pairing(s1, s2, s.rep())), s.tol(2e-2, 1e-9));
}

inline Measurement wavelet_nodewise(const Setup& s) {
    // <W psi1(x), W psi2(x)> = ((psi1 (x) psi2) * S2* S1)(x) at every node.
    auto r = s.rng("wavelet.nodewise");
    const GridPtr grid = s.affine() ? s.rep().lattice_grid(Box::chart(-1, 1, -0.5, 0.5), 16) : s.grid();
    const Operator s1 = s.random_operator(r, 2), s2 = s.random_operator(r, 2);
    const Vec psi1 = s.random_state(r), psi2 = s.random_state(r);
    const auto a = op_window_transform(s1, psi1, grid, s.rep());
    const auto b = op_window_transform(s2, psi2, grid, s.rep());
    const auto conv = op_op_convolve(rank_one(s.basis(), psi1, psi2), s2.adjoint() * s1, grid, s.rep());
    double worst = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) worst = std::max(worst, std::abs(inner(a.samples[i], b.samples[i]) - conv[i]));
    return Measurement::of(worst / std::max(conv.sup(), 1e-300), 1e-10);
}

inline Measurement wavelet_isometry(const Setup& s) {
    auto r = s.rng("wavelet.isometry");
    Operator w = s.random_operator(r, 2);
    w = (1.0 / std::sqrt(window_pairing(w, w, s.rep()).real())) * w;
    const Operator t = s.random_operator(r, 2);
    const auto field = op_wavelet_transform(w, t, s.grid(), s.rep());
    return Measurement::of(rel(field_inner(field, field), cplx(t.matrix().squaredNorm())), s.tol(2e-2, 1e-9));
}

}  // namespace checks

inline const std::vector<Check>& check_registry() {
    using namespace checks;
    static const std::vector<Check> all{
        {"group.associativity", false, group_associativity},
        {"group.modular", false, group_modular},
        {"group.right_invariance", false, group_right_invariance},
        {"group.metric", true, group_metric},
        {"representation.composition", false, representation_composition},
        {"representation.conjugation", false, representation_conjugation},
        {"representation.duflo_covariance", false, representation_duflo_covariance},
        {"representation.orthogonality", false, representation_orthogonality},
        {"operator.trace_duality", false, operator_trace_duality},
        {"convolution.trace_identity", false, convolution_trace_identity},
        {"convolution.compatibility_operator", false, convolution_compatibility_operator},
        {"convolution.compatibility_function", false, convolution_compatibility_function},
        {"convolution.adjointness", false, convolution_adjointness},
        {"convolution.interpolation", false, convolution_interpolation},
        {"convolution.left_right", false, convolution_left_right},
        {"convolution.admissibility_integral", false, convolution_admissibility_integral},
        {"convolution.density_transfer", false, convolution_density_transfer},
        {"quantize.resolution_of_identity", false, quantize_resolution_of_identity},
        {"cohen.sup_bound", false, cohen_sup_bound},
        {"cohen.total_mass", false, cohen_total_mass},
        {"cohen.covariance", false, cohen_covariance},
        {"cohen.reality_positivity", false, cohen_reality_positivity},
        {"cohen.linearity", false, cohen_linearity},
        {"cohen.expansion", false, cohen_expansion},
        {"cohen.convolved_window", false, cohen_convolved_window},
        {"cohen.positivity_probe", false, cohen_positivity_probe},
        {"cohen.uncertainty", false, cohen_uncertainty},
        {"localization.eigen_bounds", false, localization_eigen_bounds},
        {"localization.counting_lemma", false, localization_counting_lemma},
        {"localization.second_moment", false, localization_second_moment},
        {"localization.s_tilde", false, localization_s_tilde},
        {"localization.minimax", false, localization_minimax},
        {"localization.scaling", true, localization_scaling},
        {"localization.approximate_identity", true, localization_approximate_identity},
        {"berezin.both_sides", false, berezin_both_sides},
        {"berezin.linear_saturation", false, berezin_linear_saturation},
        {"wavelet.vector_moyal", false, wavelet_vector_moyal},
        {"wavelet.operator_moyal", false, wavelet_operator_moyal},
        {"wavelet.nodewise", false, wavelet_nodewise},
        {"wavelet.isometry", false, wavelet_isometry},
    };
    return all;
}

// Skip entries name a check id or a whole group ("cohen").
inline bool skipped(const std::string& id, const std::vector<std::string>& skip) {
    for (const auto& s : skip)
        if (id == s || id.rfind(s + ".", 0) == 0) return true;
    return false;
}

inline void validate_skip_list(const std::vector<std::string>& skip) {
    std::vector<std::string> problems;
    for (const auto& s : skip) {
        bool known = false;
        for (const auto& c : check_registry()) known = known || c.id == s || c.id.rfind(s + ".", 0) == 0;
        if (!known) problems.push_back("suite.skip: unknown check id \"" + s + "\"");
    }
    if (!problems.empty()) throw ConfigError(problems);
}

inline CheckResult run_check(const Check& check, const Setup& s) {
    CheckResult out{check.id, CheckStatus::skip, 0.0, 0.0, ""};
    if (skipped(check.id, s.config().skip)) {
        out.detail = "skipped by config";
        return out;
    }
    if (check.affine_only && !s.affine()) {
        out.detail = "affine group only";
        return out;
    }
    try {
        const Measurement m = check.run(s);
        out.error = m.error;
        out.tolerance = m.tolerance;
        out.detail = m.detail;
        const bool ok = m.verdict < 0 ? (std::isfinite(m.error) && m.error <= m.tolerance) : m.verdict == 1;
        out.status = ok ? CheckStatus::pass : CheckStatus::fail;
    } catch (const std::exception& e) {
        out.status = CheckStatus::fail;
        out.error = std::numeric_limits<double>::quiet_NaN();
        out.detail = std::string("raised: ") + e.what();
    }
    return out;
}

inline CheckResult run_check(const std::string& id, const Setup& s) {
    for (const auto& c : check_registry())
        if (c.id == id) return run_check(c, s);
    throw Error(ErrorKind::invalid_argument, "unknown check id " + id);
}

// ---------------------------------------------------------------------------
// Subcommand tables

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> failures;  // labels of broken invariants
    nlohmann::ordered_json summary;
};

inline std::string cell(double v) { return format_double(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "true" : "false"; }

inline Table run_moyal(const Setup& s) {
    Table t{{"pair", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "rel_error"}, {}, {}, {}};
    const double tol = checks::moyal_tolerance(s);
    double worst = 0.0;
    std::size_t k = 0;
    for (const auto& p : checks::orthogonality_pairs(s)) {
        const double e = experiment_detail::rel(p.lhs, p.rhs);
        worst = std::max(worst, e);
        t.rows.push_back({cell(k), cell(p.lhs.real()), cell(p.lhs.imag()), cell(p.rhs.real()), cell(p.rhs.imag()), cell(e)});
        if (!(e <= tol)) t.failures.push_back("orthogonality pair " + std::to_string(k));
        ++k;
    }
    t.summary = {{"max_rel_error", worst}, {"tolerance", tol}};
    return t;
}

inline Table run_localization_scaling(const Setup& s) {
    if (!s.affine()) throw ConfigError({"backend: localization-scaling needs the affine backend"});
    Table t{{"R", "mu_r", "mu_r_exact", "trace", "count", "ratio", "deviation", "lemma_bound", "lemma_holds", "grid_nx",
             "grid_nu"},
            {},
            {},
            {}};
    const auto reports = checks::scaling_reports(s);
    nlohmann::ordered_json spectra = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        t.rows.push_back({cell(r.scale), cell(r.mu_r), cell(r.mu_r_exact), cell(r.trace), cell(r.count_above), cell(r.ratio),
                          cell(r.deviation), cell(r.lemma_bound), cell(r.lemma_holds), cell(r.grid_nx), cell(r.grid_nu)});
        if (!r.lemma_holds) t.failures.push_back("counting lemma at R = " + format_double(r.scale));
        std::vector<double> values(r.spectrum.values.data(), r.spectrum.values.data() + r.spectrum.values.size());
        spectra.push_back({{"R", r.scale}, {"ratio", r.ratio}, {"spectrum", values}});
    }
    const double final_gap = std::abs(reports.back().ratio - 1);
    const double tol = s.config().loc_ratio_tolerance * s.config().tolerance_scale;
    if (!(final_gap <= tol)) t.failures.push_back("ratio at the largest scale");
    t.summary = {{"final_abs_ratio_error", final_gap}, {"tolerance", tol}, {"reports", spectra}};
    return t;
}

inline Table run_berezin_lieb(const Setup& s) {
    Table t{{"instance", "phi", "side", "lhs", "rhs", "slack", "holds"}, {}, {}, {}};
    double worst = 0.0;
    for (const auto& row : checks::berezin_rows(s, {s.config().bl_phi}, s.config().bl_instances)) {
        const double v = checks::berezin_violation(row.report);
        worst = std::max(worst, v);
        const bool holds = v <= 1e-8;
        t.rows.push_back({cell(row.instance), row.phi, row.side, cell(row.report.lhs), cell(row.report.rhs),
                          cell(row.report.slack()), cell(holds)});
        if (!holds) t.failures.push_back("berezin-lieb " + row.side + " side, instance " + std::to_string(row.instance));
    }
    t.summary = {{"max_relative_deficit", worst}, {"tolerance", 1e-8}};
    return t;
}

inline Table run_cohen_map(const Setup& s) {
    const Vec xi = s.window(0), psi = s.window(1);
    const auto map = cohen_map(rank_one(s.basis(), xi, xi), psi, psi, s.grid(), s.rep());
    Table t{{s.affine() ? "x" : "j", s.affine() ? "a" : "k", "real", "imag"}, {}, {}, {}};
    for (std::size_t i = 0; i < s.grid()->size(); ++i) {
        const auto& p = s.grid()->node(i);
        t.rows.push_back({cell(p.coords[0]), cell(p.coords[1]), cell(map.values[i].real()), cell(map.values[i].imag())});
    }
    const double sup = map.values.sup();
    if (sup > map.sup_bound * (1 + 1e-12)) t.failures.push_back("cohen sup bound");
    t.summary = {{"sup", sup}, {"sup_bound", map.sup_bound}, {"integral_r", map.values.integral_r().real()}};
    return t;
}

inline Table run_admissibility(const Setup& s) {
    Table t{{"window", "constant_re", "constant_im", "trace_norm_dsd", "integral_route", "rel_error", "growth_ratio",
             "converged"},
            {},
            {},
            {}};
    const double tol = s.tol(2e-2, 1e-10);
    double worst = 0.0;
    const Vec pv = s.window(0);
    const Operator probe = rank_one(s.basis(), pv, pv);
    for (std::size_t k = 0; k < s.config().window_centers.size(); ++k) {
        const Vec v = s.window(k + 1);
        const Operator op = rank_one(s.basis(), v, v);
        const auto r = admissibility_report(op, s.rep());
        const cplx integral = op_op_convolve(probe, op, s.grid(), s.rep()).integral_r() / trace(probe);
        const double e = experiment_detail::rel(integral, r.constant);
        worst = std::max(worst, e);
        t.rows.push_back({cell(k), cell(r.constant.real()), cell(r.constant.imag()), cell(r.trace_norm_dsd),
                          cell(integral.real()), cell(e), cell(r.growth_ratio), cell(r.converged)});
        if (!(e <= tol)) t.failures.push_back("admissibility window " + std::to_string(k));
    }
    t.summary = {{"max_rel_error", worst}, {"tolerance", tol}};
    return t;
}

inline Table run_wavelet_moyal(const Setup& s) {
    Table t{{"pair", "kind", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "rel_error"}, {}, {}, {}};
    const double tol = checks::moyal_tolerance(s);
    double worst = 0.0;
    auto r = s.rng("wavelet-moyal");
    for (std::size_t k = 0; k < s.config().moyal_pairs; ++k) {
        const Operator s1 = s.random_operator(r, 2), s2 = s.random_operator(r, 2);
        const Operator a = s.random_operator(r, 2), b = s.random_operator(r, 2);
        const cplx pairing = window_pairing(s1, s2, s.rep());
        const cplx lhs =
            field_inner(op_wavelet_transform(s1, a, s.grid(), s.rep()), op_wavelet_transform(s2, b, s.grid(), s.rep()));
        const cplx rhs = hs_inner(a, b) * pairing;
        const double e = experiment_detail::rel(lhs, rhs);
        worst = std::max(worst, e);
        t.rows.push_back({cell(k), "operator", cell(lhs.real()), cell(lhs.imag()), cell(rhs.real()), cell(rhs.imag()), cell(e)});
        if (!(e <= tol)) t.failures.push_back("operator moyal pair " + std::to_string(k));
    }
    t.summary = {{"max_rel_error", worst}, {"tolerance", tol}};
    return t;
}

inline Table run_suite(const Setup& s, const std::function<void(const CheckResult&)>& progress = {}) {
    validate_skip_list(s.config().skip);
    Table t{{"id", "status", "error", "tolerance", "detail"}, {}, {}, {}};
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& c : check_registry()) {
        const auto r = run_check(c, s);
        if (progress) progress(r);
        ++counts[static_cast<int>(r.status)];
        t.rows.push_back({r.id, status_name(r.status), cell(r.error), cell(r.tolerance), r.detail});
        if (r.status == CheckStatus::fail) t.failures.push_back(r.id);
        checks.push_back({{"id", r.id},
                          {"status", status_name(r.status)},
                          {"error", std::isfinite(r.error) ? nlohmann::ordered_json(r.error) : nlohmann::ordered_json()},
                          {"tolerance", r.tolerance},
                          {"detail", r.detail}});
    }
    t.summary = {{"passed", counts[0]}, {"failed", counts[1]}, {"skipped", counts[2]}, {"checks", checks}};
    return t;
}

}  // namespace qha
