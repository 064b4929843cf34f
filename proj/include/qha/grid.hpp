#pragma once

// Midpoint-rule quadrature over a chart box of a group, and sampled
// functions on such grids.

#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qha/group.hpp"
#include "qha/parallel.hpp"

namespace qha {

class HaarGrid {
public:
    // Affine: nx x nu midpoint cells in the (x, ln a) chart.
    // Cyclic: every lattice point of the box (resolution is ignored).
    HaarGrid(GroupModel group, Box window, std::size_t nx, std::size_t nu) : group_(std::move(group)), window_(window) {
        require(nx >= 2 && nu >= 2, ErrorKind::invalid_argument, "grid resolution must be at least 2 per axis");
        require(std::isfinite(window.x0) && std::isfinite(window.x1) && std::isfinite(window.u0) &&
                    std::isfinite(window.u1) && window.x1 >= window.x0 && window.u1 >= window.u0,
                ErrorKind::invalid_argument, "grid window must be a finite, non-inverted box");
        require(group_.backend() == Backend::cyclic || !window.is_empty(), ErrorKind::invalid_argument,
                "affine grid window must have positive extent");
        if (group_.backend() == Backend::affine) {
            nx_ = nx;
            nu_ = nu;
            hx_ = (window.x1 - window.x0) / static_cast<double>(nx);
            hu_ = (window.u1 - window.u0) / static_cast<double>(nu);
            for (std::size_t i = 0; i < nx_; ++i) xs_.push_back(window.x0 + (static_cast<double>(i) + 0.5) * hx_);
            for (std::size_t i = 0; i < nu_; ++i) us_.push_back(window.u0 + (static_cast<double>(i) + 0.5) * hu_);
        } else {
            const long n = group_.cyclic_order();
            require(window.x0 > -1 && window.u0 > -1 && window.x1 < static_cast<double>(n) &&
                        window.u1 < static_cast<double>(n),
                    ErrorKind::invalid_argument, "cyclic window must lie within [0, N)");
            for (long j = static_cast<long>(std::ceil(window.x0 - 1e-9)); j <= std::floor(window.x1 + 1e-9); ++j)
                xs_.push_back(static_cast<double>(j));
            for (long k = static_cast<long>(std::ceil(window.u0 - 1e-9)); k <= std::floor(window.u1 + 1e-9); ++k)
                us_.push_back(static_cast<double>(k));
            require(xs_.size() >= 1 && us_.size() >= 1, ErrorKind::invalid_argument, "cyclic window has no lattice points");
            nx_ = xs_.size();
            nu_ = us_.size();
            hx_ = hu_ = 1.0;
        }
        const double cell = group_.backend() == Backend::affine
                                ? hx_ * hu_
                                : 1.0 / static_cast<double>(group_.cyclic_order());
        nodes_.reserve(nx_ * nu_);
        for (std::size_t iu = 0; iu < nu_; ++iu) {
            for (std::size_t ix = 0; ix < nx_; ++ix) {
                nodes_.push_back(group_.from_chart(xs_[ix], us_[iu]));
                weights_r_.push_back(cell);
            }
        }
    }

    const GroupModel& group() const { return group_; }
    Backend backend() const { return group_.backend(); }
    const Box& window() const { return window_; }
    std::size_t size() const { return nodes_.size(); }
    std::size_t nx() const { return nx_; }
    std::size_t nu() const { return nu_; }
    double hx() const { return hx_; }
    double hu() const { return hu_; }
    const std::vector<double>& xs() const { return xs_; }
    const std::vector<double>& us() const { return us_; }
    std::size_t index(std::size_t ix, std::size_t iu) const { return iu * nx_ + ix; }
    std::size_t ix_of(std::size_t node) const { return node % nx_; }
    std::size_t iu_of(std::size_t node) const { return node / nx_; }
    const GroupPoint& node(std::size_t i) const { return nodes_[i]; }
    const std::vector<GroupPoint>& nodes() const { return nodes_; }
    const std::vector<double>& weights_r() const { return weights_r_; }
    double weight_r(std::size_t i) const { return weights_r_[i]; }
    std::array<double, 2> chart(std::size_t i) const { return {xs_[ix_of(i)], us_[iu_of(i)]}; }

    // Left weights obtained from the right weights through the modular function.
    std::vector<double> weights_l() const {
        std::vector<double> w(size());
        for (std::size_t i = 0; i < size(); ++i) w[i] = weights_r_[i] * group_.modular(nodes_[i]);
        return w;
    }

    // Left weights from the left Haar density directly (chart Jacobian included).
    std::vector<double> weights_l_direct() const {
        std::vector<double> w(size());
        for (std::size_t i = 0; i < size(); ++i) {
            if (backend() == Backend::affine) {
                const double a = nodes_[i].a();
                // dx da = a dx du
                w[i] = group_.left_haar_density(nodes_[i]) * a * hx_ * hu_;
            } else {
                w[i] = group_.left_haar_density(nodes_[i]);
            }
        }
        return w;
    }

    double total_weight() const {
        return parallel::sum(size(), 0.0, [&](std::size_t i) { return weights_r_[i]; });
    }

    void write_csv(std::ostream& out) const {
        out << (backend() == Backend::affine ? "x,a,weight\n" : "j,k,weight\n");
        char line[128];
        for (std::size_t i = 0; i < size(); ++i) {
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", nodes_[i].coords[0], nodes_[i].coords[1],
                          weights_r_[i]);
            out << line;
        }
    }

private:
    GroupModel group_;
    Box window_;
    std::size_t nx_ = 0, nu_ = 0;
    double hx_ = 0, hu_ = 0;
    std::vector<double> xs_, us_;
    std::vector<GroupPoint> nodes_;
    std::vector<double> weights_r_;
};

using GridPtr = std::shared_ptr<const HaarGrid>;

inline GridPtr build_grid(const Box& window, std::size_t nx, std::size_t nu, const GroupModel& group) {
    return std::make_shared<const HaarGrid>(group, window, nx, nu);
}

inline GridPtr build_grid(const Box& window, std::size_t resolution, const GroupModel& group) {
    return build_grid(window, resolution, resolution, group);
}

// Every point of the cyclic lattice.
inline GridPtr full_cyclic_grid(long order) {
    const double top = static_cast<double>(order - 1);
    return build_grid(Box::chart(0, top, 0, top), 2, GroupModel::cyclic(order));
}

struct GridRow {
    double c0, c1, weight;
};

inline std::vector<GridRow> read_grid_csv(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::invalid_argument, "grid csv is empty");
    std::vector<GridRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream fields(line);
        GridRow row{};
        char comma1 = 0, comma2 = 0;
        fields >> row.c0 >> comma1 >> row.c1 >> comma2 >> row.weight;
        require(!fields.fail() && comma1 == ',' && comma2 == ',', ErrorKind::invalid_argument,
                "malformed grid csv row: " + line);
        rows.push_back(row);
    }
    return rows;
}

class GroupFunction {
public:
    GroupFunction() = default;
    explicit GroupFunction(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), cplx(0.0)) {}
    GroupFunction(GridPtr grid, std::vector<cplx> values) : grid_(std::move(grid)), values_(std::move(values)) {
        require(values_.size() == grid_->size(), ErrorKind::invalid_argument, "function length must match grid size");
    }

    template <class F>
    static GroupFunction sample(GridPtr grid, F&& f) {
        std::vector<cplx> v(grid->size());
        for (std::size_t i = 0; i < grid->size(); ++i) v[i] = cplx(f(grid->node(i)));
        return GroupFunction(std::move(grid), std::move(v));
    }

    const GridPtr& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }
    const std::vector<cplx>& values() const { return values_; }
    std::vector<cplx>& values() { return values_; }
    cplx operator[](std::size_t i) const { return values_[i]; }
    cplx& operator[](std::size_t i) { return values_[i]; }

    cplx integral_r() const {
        return parallel::sum(size(), cplx(0.0), [&](std::size_t i) { return grid_->weight_r(i) * values_[i]; });
    }

    cplx integral_l() const {
        const auto wl = grid_->weights_l();
        return parallel::sum(size(), cplx(0.0), [&](std::size_t i) { return wl[i] * values_[i]; });
    }

    double norm_r(double p) const {
        require(p >= 1.0, ErrorKind::invalid_argument, "Lp norm needs p >= 1");
        if (std::isinf(p)) return sup();
        const double s = parallel::sum(size(), 0.0, [&](std::size_t i) {
            return grid_->weight_r(i) * std::pow(std::abs(values_[i]), p);
        });
        return std::pow(s, 1.0 / p);
    }

    double norm_l1_l() const {
        const auto wl = grid_->weights_l();
        return parallel::sum(size(), 0.0, [&](std::size_t i) { return wl[i] * std::abs(values_[i]); });
    }

    double sup() const {
        double m = 0.0;
        for (const auto& v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    // Value at an arbitrary group point. Affine: bilinear interpolation in the
    // (x, ln a) chart with zero extension (exact along ln a when the point sits
    // on a node row). Cyclic: lattice lookup, zero outside the grid.
    cplx eval(const GroupPoint& p) const {
        const HaarGrid& g = *grid_;
        const auto c = g.group().chart(p);
        if (g.backend() == Backend::cyclic) {
            const long n = g.group().cyclic_order();
            auto locate = [n](const std::vector<double>& axis, double v) -> long {
                for (std::size_t i = 0; i < axis.size(); ++i) {
                    const long d = ((std::lround(v) - std::lround(axis[i])) % n + n) % n;
                    if (d == 0) return static_cast<long>(i);
                }
                return -1;
            };
            const long ix = locate(g.xs(), c[0]);
            const long iu = locate(g.us(), c[1]);
            if (ix < 0 || iu < 0) return 0.0;
            return values_[g.index(static_cast<std::size_t>(ix), static_cast<std::size_t>(iu))];
        }
        const double fx = (c[0] - g.window().x0) / g.hx() - 0.5;
        double fu = (c[1] - g.window().u0) / g.hu() - 0.5;
        if (std::abs(fu - std::round(fu)) < 1e-9) fu = std::round(fu);
        const double ix0 = std::floor(fx);
        const double iu0 = std::floor(fu);
        const double tx = fx - ix0;
        const double tu = fu - iu0;
        auto at = [&](double ix, double iu) -> cplx {
            if (ix < 0 || iu < 0 || ix >= static_cast<double>(g.nx()) || iu >= static_cast<double>(g.nu())) return 0.0;
            return values_[g.index(static_cast<std::size_t>(ix), static_cast<std::size_t>(iu))];
        };
        cplx v = (1 - tx) * (1 - tu) * at(ix0, iu0) + tx * (1 - tu) * at(ix0 + 1, iu0);
        if (tu != 0.0) v += (1 - tx) * tu * at(ix0, iu0 + 1) + tx * tu * at(ix0 + 1, iu0 + 1);
        return v;
    }

    GroupFunction& operator+=(const GroupFunction& o) {
        check_same_grid(o);
        for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
        return *this;
    }

    GroupFunction& operator*=(cplx s) {
        for (auto& v : values_) v *= s;
        return *this;
    }

    void check_same_grid(const GroupFunction& o) const {
        require(grid_ == o.grid_, ErrorKind::invalid_argument, "functions live on different grids");
    }

    // Columns: chart point, real part, imaginary part.
    void write_csv(std::ostream& out) const {
        out << (grid_->backend() == Backend::affine ? "x,a,real,imag\n" : "j,k,real,imag\n");
        char line[160];
        for (std::size_t i = 0; i < size(); ++i) {
            const auto& p = grid_->node(i);
            std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", p.coords[0], p.coords[1], values_[i].real(),
                          values_[i].imag());
            out << line;
        }
    }

private:
    GridPtr grid_;
    std::vector<cplx> values_;
};

inline GroupFunction operator*(cplx s, GroupFunction f) { return f *= s; }

inline GroupFunction operator+(GroupFunction a, const GroupFunction& b) { return a += b; }

inline GroupFunction indicator(const Box& box, const GridPtr& grid) {
    return GroupFunction::sample(grid, [&](const GroupPoint& p) {
        const auto c = grid->group().chart(p);
        const double eps = 1e-12;
        Box loose{box.x0 - eps, box.x1 + eps, box.u0 - eps, box.u1 + eps};
        if (box.x1 < box.x0 || box.u1 < box.u0) return 0.0;
        if (grid->backend() == Backend::affine && box.is_empty()) return 0.0;
        return loose.contains(c[0], c[1]) ? 1.0 : 0.0;
    });
}

// Fraction of each quadrature cell covered by the box; on the cyclic lattice
// this is the plain indicator. Integrates to the exact measure of any box
// inside the window.
inline double cell_fraction(double centre, double h, double lo, double hi) {
    const double left = std::max(centre - 0.5 * h, lo), right = std::min(centre + 0.5 * h, hi);
    return right > left ? (right - left) / h : 0.0;
}

inline GroupFunction cell_indicator(const Box& box, const GridPtr& grid) {
    if (grid->backend() == Backend::cyclic) return indicator(box, grid);
    GroupFunction out(grid);
    if (box.is_empty()) return out;
    for (std::size_t iu = 0; iu < grid->nu(); ++iu) {
        const double fu = cell_fraction(grid->us()[iu], grid->hu(), box.u0, box.u1);
        if (fu == 0) continue;
        for (std::size_t ix = 0; ix < grid->nx(); ++ix)
            out[grid->index(ix, iu)] = fu * cell_fraction(grid->xs()[ix], grid->hx(), box.x0, box.x1);
    }
    return out;
}

// (f * g)(x) = sum_y w_y f(y) g(x y^-1), with g read off-node by GroupFunction::eval.
inline GroupFunction convolve_functions(const GroupFunction& f, const GroupFunction& g) {
    f.check_same_grid(g);
    const HaarGrid& grid = *f.grid();
    const GroupModel& group = grid.group();
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] != cplx(0.0)) support.push_back(i);
    std::vector<GroupPoint> inverses;
    inverses.reserve(support.size());
    for (auto i : support) inverses.push_back(group.inverse(grid.node(i)));
    GroupFunction out(f.grid());
    parallel::for_each_index(grid.size(), [&](std::size_t xi) {
        const GroupPoint& x = grid.node(xi);
        cplx acc = 0.0;
        for (std::size_t s = 0; s < support.size(); ++s) {
            const std::size_t yi = support[s];
            acc += grid.weight_r(yi) * f[yi] * g.eval(group.compose(x, inverses[s]));
        }
        out[xi] = acc;
    });
    return out;
}

}  // namespace qha
