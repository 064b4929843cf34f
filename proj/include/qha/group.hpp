#pragma once

// Group backends. A backend provides the group law in chart coordinates,
// Haar densities with respect to chart Lebesgue measure, the modular function
// and (where defined) the scaling map and a right-invariant metric.
//
// Affine group: points (x, a), a > 0, law (x,a)(y,b) = (x + a y, a b).
// The chart used for windows and quadrature is (x, u = ln a), in which the
// right Haar measure dx da / a is plain Lebesgue measure dx du.
//
// Cyclic phase space: points (j, k) in (Z/N)^2 with additive law; Haar
// measure is 1/N per point so that the representation by translations and
// modulations has Duflo-Moore operator equal to the identity.

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <optional>
#include <string>
#include <variant>

#include "qha/core.hpp"

namespace qha {

struct GroupPoint {
    Backend backend = Backend::affine;
    std::array<double, 2> coords{0.0, 1.0};

    static GroupPoint affine(double x, double a) {
        require(a > 0.0 && std::isfinite(a) && std::isfinite(x), ErrorKind::invalid_argument,
                "affine point needs finite x and a > 0");
        return {Backend::affine, {x, a}};
    }

    // Affine point from chart coordinates (x, ln a).
    static GroupPoint affine_chart(double x, double u) { return affine(x, std::exp(u)); }

    static GroupPoint cyclic(long j, long k, long order) {
        require(order >= 1, ErrorKind::invalid_argument, "cyclic order must be positive");
        auto reduce = [order](long v) { return static_cast<double>(((v % order) + order) % order); };
        return {Backend::cyclic, {reduce(j), reduce(k)}};
    }

    double x() const { return coords[0]; }
    double a() const { return coords[1]; }
    double u() const { return std::log(coords[1]); }
    long j() const { return std::lround(coords[0]); }
    long k() const { return std::lround(coords[1]); }

    bool operator==(const GroupPoint&) const = default;
};

// Coordinate box in the chart: affine (x, ln a), cyclic (j, k) index ranges.
// Bounds are inclusive.
struct Box {
    double x0 = 0, x1 = 0, u0 = 0, u1 = 0;

    static Box chart(double x0, double x1, double u0, double u1) { return {x0, x1, u0, u1}; }

    static Box affine(double x0, double x1, double a0, double a1) {
        require(a0 > 0 && a1 > 0, ErrorKind::invalid_argument, "affine box needs positive a bounds");
        return {x0, x1, std::log(a0), std::log(a1)};
    }

    static Box empty() { return {0, 0, 0, 0}; }

    bool is_empty() const { return !(x1 > x0) || !(u1 > u0); }

    bool contains(double x, double u) const { return x >= x0 && x <= x1 && u >= u0 && u <= u1; }

    bool contains(const Box& inner) const {
        return inner.is_empty() || (inner.x0 >= x0 && inner.x1 <= x1 && inner.u0 >= u0 && inner.u1 <= u1);
    }

    bool operator==(const Box&) const = default;
};

template <class G>
concept GroupBackend = requires(const G& g, const GroupPoint& p, const Box& box) {
    { G::backend } -> std::convertible_to<Backend>;
    { g.identity() } -> std::same_as<GroupPoint>;
    { g.compose(p, p) } -> std::same_as<GroupPoint>;
    { g.inverse(p) } -> std::same_as<GroupPoint>;
    { g.right_haar_density(p) } -> std::same_as<double>;
    { g.left_haar_density(p) } -> std::same_as<double>;
    { g.modular(p) } -> std::same_as<double>;
    { g.right_haar_measure(box) } -> std::same_as<double>;
};

class AffineGroup {
public:
    static constexpr Backend backend = Backend::affine;

    GroupPoint identity() const { return GroupPoint::affine(0.0, 1.0); }

    GroupPoint compose(const GroupPoint& g, const GroupPoint& h) const {
        check(g);
        check(h);
        return GroupPoint::affine(g.x() + g.a() * h.x(), g.a() * h.a());
    }

    GroupPoint inverse(const GroupPoint& g) const {
        check(g);
        return GroupPoint::affine(-g.x() / g.a(), 1.0 / g.a());
    }

    // Densities with respect to dx da.
    double right_haar_density(const GroupPoint& g) const { return 1.0 / g.a(); }
    double left_haar_density(const GroupPoint& g) const { return 1.0 / (g.a() * g.a()); }

    // Delta(x, a) = 1/a, so that d mu_r(g) = Delta(g^-1) d mu_l(g).
    double modular(const GroupPoint& g) const { return 1.0 / g.a(); }

    double right_haar_measure(const Box& box) const {
        if (box.is_empty()) return 0.0;
        return (box.x1 - box.x0) * (box.u1 - box.u0);
    }

    GroupPoint scale_map(const GroupPoint& g, double r) const {
        require(r > 0, ErrorKind::invalid_argument, "scale factor must be positive");
        return GroupPoint::affine(r * g.x(), std::pow(g.a(), r));
    }

    Box scale_set(const Box& box, double r) const {
        require(r > 0, ErrorKind::invalid_argument, "scale factor must be positive");
        if (box.is_empty()) return box;
        return {r * box.x0, r * box.x1, r * box.u0, r * box.u1};
    }

    double metric(const GroupPoint& g, const GroupPoint& h) const {
        return std::abs(g.x() - h.x()) + std::abs(std::log(g.a() / h.a()));
    }

private:
    static void check(const GroupPoint& g) {
        require(g.backend == Backend::affine, ErrorKind::backend_mismatch, "expected an affine group point");
    }
};

class CyclicPhaseSpace {
public:
    static constexpr Backend backend = Backend::cyclic;

    explicit CyclicPhaseSpace(long order) : order_(order) {
        require(order >= 2, ErrorKind::invalid_argument, "cyclic order must be at least 2");
    }

    long order() const { return order_; }

    GroupPoint identity() const { return GroupPoint::cyclic(0, 0, order_); }

    GroupPoint compose(const GroupPoint& g, const GroupPoint& h) const {
        check(g);
        check(h);
        return GroupPoint::cyclic(g.j() + h.j(), g.k() + h.k(), order_);
    }

    GroupPoint inverse(const GroupPoint& g) const {
        check(g);
        return GroupPoint::cyclic(-g.j(), -g.k(), order_);
    }

    double right_haar_density(const GroupPoint&) const { return point_weight(); }
    double left_haar_density(const GroupPoint&) const { return point_weight(); }
    double modular(const GroupPoint&) const { return 1.0; }
    double point_weight() const { return 1.0 / static_cast<double>(order_); }

    // Number of lattice points in the (inclusive) box times the point weight.
    double right_haar_measure(const Box& box) const {
        auto count = [this](double lo, double hi) -> double {
            if (hi < lo) return 0.0;
            const double n = std::floor(hi + 1e-9) - std::ceil(lo - 1e-9) + 1.0;
            return std::clamp(n, 0.0, static_cast<double>(order_));
        };
        return count(box.x0, box.x1) * count(box.u0, box.u1) * point_weight();
    }

private:
    void check(const GroupPoint& g) const {
        require(g.backend == Backend::cyclic, ErrorKind::backend_mismatch, "expected a cyclic group point");
    }

    long order_;
};

static_assert(GroupBackend<AffineGroup>);
static_assert(GroupBackend<CyclicPhaseSpace>);

// Runtime wrapper over the two backends.
class GroupModel {
public:
    static GroupModel affine() { return GroupModel(AffineGroup{}); }
    static GroupModel cyclic(long order) { return GroupModel(CyclicPhaseSpace(order)); }

    Backend backend() const { return std::visit([](const auto& g) { return g.backend; }, impl_); }
    int dimension() const { return 2; }

    long cyclic_order() const {
        require(backend() == Backend::cyclic, ErrorKind::unsupported, "cyclic order requested on affine group");
        return std::get<CyclicPhaseSpace>(impl_).order();
    }

    GroupPoint identity() const { return std::visit([](const auto& g) { return g.identity(); }, impl_); }

    GroupPoint compose(const GroupPoint& g, const GroupPoint& h) const {
        return std::visit([&](const auto& grp) { return grp.compose(g, h); }, impl_);
    }

    GroupPoint inverse(const GroupPoint& g) const {
        return std::visit([&](const auto& grp) { return grp.inverse(g); }, impl_);
    }

    double right_haar_density(const GroupPoint& g) const {
        return std::visit([&](const auto& grp) { return grp.right_haar_density(g); }, impl_);
    }

    double left_haar_density(const GroupPoint& g) const {
        return std::visit([&](const auto& grp) { return grp.left_haar_density(g); }, impl_);
    }

    double modular(const GroupPoint& g) const {
        return std::visit([&](const auto& grp) { return grp.modular(g); }, impl_);
    }

    double right_haar_measure(const Box& box) const {
        return std::visit([&](const auto& grp) { return grp.right_haar_measure(box); }, impl_);
    }

    GroupPoint scale_map(const GroupPoint& g, double r) const { return as_affine("scale_map").scale_map(g, r); }
    Box scale_set(const Box& box, double r) const { return as_affine("scale_set").scale_set(box, r); }
    double metric(const GroupPoint& g, const GroupPoint& h) const { return as_affine("metric").metric(g, h); }

    // Chart coordinates of a point (affine: (x, ln a); cyclic: (j, k)).
    std::array<double, 2> chart(const GroupPoint& g) const {
        require(g.backend == backend(), ErrorKind::backend_mismatch, "point does not belong to this group");
        if (g.backend == Backend::affine) return {g.x(), g.u()};
        return g.coords;
    }

    GroupPoint from_chart(double c0, double c1) const {
        if (backend() == Backend::affine) return GroupPoint::affine_chart(c0, c1);
        return GroupPoint::cyclic(std::lround(c0), std::lround(c1), cyclic_order());
    }

    bool operator==(const GroupModel& other) const {
        if (backend() != other.backend()) return false;
        return backend() == Backend::affine || cyclic_order() == other.cyclic_order();
    }

private:
    explicit GroupModel(std::variant<AffineGroup, CyclicPhaseSpace> impl) : impl_(std::move(impl)) {}

    const AffineGroup& as_affine(const char* op) const {
        require(backend() == Backend::affine, ErrorKind::unsupported,
                std::string(op) + " is only defined on the affine group");
        return std::get<AffineGroup>(impl_);
    }

    std::variant<AffineGroup, CyclicPhaseSpace> impl_;
};

}  // namespace qha
