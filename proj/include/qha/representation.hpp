#pragma once

// Representation of the group on the truncated basis.
//
// Affine: (sigma(x, a) psi)(omega) = sqrt(a) e^{-2 pi i x omega} psi(a omega).
// With a = e^{m delta} this is an index shift by m plus a diagonal phase in
// orthonormal coordinates; indices pushed past the truncation are dropped.
// Only lattice dilations are accepted.
//
// Cyclic: sigma(j, k) = T_j M_k with (T_j f)(n) = f(n - j) and
// (M_k f)(n) = e^{2 pi i k n / N} f(n). This is projective:
// sigma(j,k) sigma(j',k') = e^{2 pi i k j' / N} sigma(j+j', k+k').

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <utility>

#include "qha/grid.hpp"
#include "qha/operator.hpp"

namespace qha {

struct DufloMoore {
    RealVec diag;      // D
    RealVec diag_inv;  // D^-1
};

class Representation {
public:
    Representation(HilbertBasis basis, GroupModel group)
        : basis_(std::move(basis)), group_(std::move(group)), cache_(std::make_shared<Cache>()) {
        require(basis_.backend() == group_.backend(), ErrorKind::backend_mismatch, "basis and group backends differ");
        if (group_.backend() == Backend::cyclic)
            require(static_cast<long>(basis_.dim()) == group_.cyclic_order(), ErrorKind::backend_mismatch,
                    "cyclic basis dimension must equal the group order");
        const Eigen::Index n = basis_.size();
        duflo_.diag.resize(n);
        duflo_.diag_inv.resize(n);
        for (Eigen::Index j = 0; j < n; ++j) {
            const double w = basis_.backend() == Backend::affine ? basis_.omega(static_cast<std::size_t>(j)) : 1.0;
            duflo_.diag[j] = std::sqrt(w);
            duflo_.diag_inv[j] = 1.0 / std::sqrt(w);
        }
    }

    static Representation affine(const HilbertBasis& basis) { return {basis, GroupModel::affine()}; }
    static Representation cyclic(std::size_t n) {
        return {HilbertBasis::cyclic(n), GroupModel::cyclic(static_cast<long>(n))};
    }

    const HilbertBasis& basis() const { return basis_; }
    const GroupModel& group() const { return group_; }
    Backend backend() const { return basis_.backend(); }
    const DufloMoore& duflo() const { return duflo_; }

    // Affine: m with a = e^{m delta}. Cyclic: j.
    long shift(const GroupPoint& g) const {
        check_point(g);
        if (backend() == Backend::cyclic) return g.j();
        const double t = g.u() / basis_.delta();
        const double m = std::round(t);
        require(std::abs(t - m) <= 1e-9 * std::max(1.0, std::abs(t)), ErrorKind::invalid_argument,
                "dilation a = " + std::to_string(g.a()) + " is not on the basis lattice");
        return static_cast<long>(m);
    }

    Vec apply(const GroupPoint& g, const Vec& v) const {
        const long n = static_cast<long>(basis_.dim());
        const long m = shift(g);
        Vec out = Vec::Zero(v.size());
        if (backend() == Backend::affine) {
            for (long j = 0; j < n; ++j) {
                const long src = j + m;
                if (src < 0 || src >= n) continue;
                out[j] = std::polar(1.0, -2 * pi * g.x() * basis_.omega(static_cast<std::size_t>(j))) * v[src];
            }
        } else {
            const long k = g.k();
            for (long p = 0; p < n; ++p) {
                const long src = ((p - m) % n + n) % n;
                out[p] = std::polar(1.0, 2 * pi * static_cast<double>(k * src % n) / static_cast<double>(n)) * v[src];
            }
        }
        return out;
    }

    Vec apply_adjoint(const GroupPoint& g, const Vec& v) const {
        const long n = static_cast<long>(basis_.dim());
        const long m = shift(g);
        Vec out = Vec::Zero(v.size());
        if (backend() == Backend::affine) {
            for (long k = 0; k < n; ++k) {
                const long src = k - m;
                if (src < 0 || src >= n) continue;
                out[k] = std::polar(1.0, 2 * pi * g.x() * basis_.omega(static_cast<std::size_t>(src))) * v[src];
            }
        } else {
            const long kk = g.k();
            for (long p = 0; p < n; ++p) {
                const long src = (p + m) % n;
                out[p] = std::polar(1.0, -2 * pi * static_cast<double>(kk * p % n) / static_cast<double>(n)) * v[src];
            }
        }
        return out;
    }

    // Dense sigma(g); cached.
    Mat matrix(const GroupPoint& g) const {
        const Key key{g.coords[0], g.coords[1]};
        {
            std::shared_lock lock(cache_->mutex);
            auto it = cache_->entries.find(key);
            if (it != cache_->entries.end()) return it->second;
        }
        const Eigen::Index n = basis_.size();
        Mat s(n, n);
        for (Eigen::Index c = 0; c < n; ++c) s.col(c) = apply(g, Vec::Unit(n, c));
        std::unique_lock lock(cache_->mutex);
        if (cache_->entries.size() >= cache_capacity) cache_->entries.clear();
        cache_->entries.emplace(key, s);
        return s;
    }

    // alpha_g(S) = sigma(g)* S sigma(g)
    Operator conjugate(const Operator& s, const GroupPoint& g) const {
        check_operator(s);
        const long n = static_cast<long>(basis_.dim());
        const long m = shift(g);
        const Mat& src = s.matrix();
        Mat out = Mat::Zero(n, n);
        if (backend() == Backend::affine) {
            Vec phase(n);
            for (long p = 0; p < n; ++p) phase[p] = std::polar(1.0, 2 * pi * g.x() * basis_.omega(static_cast<std::size_t>(p)));
            const long lo = std::max(0L, m);
            const long hi = std::min(n, n + m);
            for (long l = lo; l < hi; ++l) {
                const cplx cl = std::conj(phase[l - m]);
                for (long k = lo; k < hi; ++k) out(k, l) = phase[k - m] * src(k - m, l - m) * cl;
            }
        } else {
            const long kk = g.k();
            Vec phase(n);
            for (long p = 0; p < n; ++p)
                phase[p] = std::polar(1.0, -2 * pi * static_cast<double>(kk * p % n) / static_cast<double>(n));
            for (long q = 0; q < n; ++q) {
                const cplx cq = std::conj(phase[q]);
                for (long p = 0; p < n; ++p) out(p, q) = phase[p] * src((p + m) % n, (q + m) % n) * cq;
            }
        }
        return {basis_, std::move(out)};
    }

    // sigma(g) P sigma(g)*
    Operator conjugate_forward(const Operator& p, const GroupPoint& g) const {
        check_operator(p);
        const long n = static_cast<long>(basis_.dim());
        const long m = shift(g);
        const Mat& src = p.matrix();
        Mat out = Mat::Zero(n, n);
        if (backend() == Backend::affine) {
            Vec phase(n);
            for (long j = 0; j < n; ++j) phase[j] = std::polar(1.0, -2 * pi * g.x() * basis_.omega(static_cast<std::size_t>(j)));
            const long lo = std::max(0L, -m);
            const long hi = std::min(n, n - m);
            for (long k = lo; k < hi; ++k) {
                const cplx ck = std::conj(phase[k]);
                for (long j = lo; j < hi; ++j) out(j, k) = phase[j] * src(j + m, k + m) * ck;
            }
        } else {
            const long kk = g.k();
            Vec phase(n);
            for (long p0 = 0; p0 < n; ++p0) {
                const long src_idx = ((p0 - m) % n + n) % n;
                phase[p0] = std::polar(1.0, 2 * pi * static_cast<double>(kk * src_idx % n) / static_cast<double>(n));
            }
            for (long q = 0; q < n; ++q) {
                const cplx cq = std::conj(phase[q]);
                for (long p0 = 0; p0 < n; ++p0)
                    out(p0, q) = phase[p0] * src(((p0 - m) % n + n) % n, ((q - m) % n + n) % n) * cq;
            }
        }
        return {basis_, std::move(out)};
    }

    // Same as conjugate, through dense matrix products.
    Operator conjugate_dense(const Operator& s, const GroupPoint& g) const {
        check_operator(s);
        const Mat sg = matrix(g);
        return {basis_, sg.adjoint() * s.matrix() * sg};
    }

    // D^-1 S D^-1
    Operator apply_duflo_inv(const Operator& s) const {
        check_operator(s);
        return {basis_, duflo_.diag_inv.cast<cplx>().asDiagonal() * s.matrix() * duflo_.diag_inv.cast<cplx>().asDiagonal()};
    }

    // D S D
    Operator apply_duflo(const Operator& s) const {
        check_operator(s);
        return {basis_, duflo_.diag.cast<cplx>().asDiagonal() * s.matrix() * duflo_.diag.cast<cplx>().asDiagonal()};
    }

    Vec duflo_inv(const Vec& v) const { return duflo_.diag_inv.cast<cplx>().cwiseProduct(v); }
    Vec duflo(const Vec& v) const { return duflo_.diag.cast<cplx>().cwiseProduct(v); }

    // Affine: widen the ln a range of the box to whole lattice cells
    // [(m - 1/2) delta, (m + 1/2) delta] for every lattice row m inside it.
    // Cyclic: unchanged.
    Box lattice_box(const Box& box) const {
        if (backend() == Backend::cyclic) return box;
        const double d = basis_.delta();
        const double m0 = std::ceil(box.u0 / d - 1e-9);
        const double m1 = std::floor(box.u1 / d + 1e-9);
        require(m1 >= m0, ErrorKind::invalid_argument, "box contains no dilation lattice row");
        return {box.x0, box.x1, (m0 - 0.5) * d, (m1 + 0.5) * d};
    }

    // Grid whose ln a rows are exactly the lattice rows inside `window`.
    GridPtr lattice_grid(const Box& window, std::size_t nx) const {
        if (backend() == Backend::cyclic) return build_grid(window, 2, group_);
        const Box snapped = lattice_box(window);
        const auto nu = static_cast<std::size_t>(std::lround((snapped.u1 - snapped.u0) / basis_.delta()));
        require(nu >= 2, ErrorKind::invalid_argument, "window spans fewer than two dilation rows");
        return build_grid(snapped, nx, nu, group_);
    }

    void check_operator(const Operator& s) const {
        require(s.basis() == basis_, ErrorKind::backend_mismatch, "operator basis does not match the representation");
    }

    void check_grid(const HaarGrid& grid) const {
        require(grid.group() == group_, ErrorKind::backend_mismatch, "grid group does not match the representation");
    }

private:
    static constexpr std::size_t cache_capacity = 64;

    using Key = std::pair<double, double>;
    struct Cache {
        std::shared_mutex mutex;
        std::map<Key, Mat> entries;
    };

    void check_point(const GroupPoint& g) const {
        require(g.backend == backend(), ErrorKind::backend_mismatch, "point does not belong to the representation's group");
    }

    HilbertBasis basis_;
    GroupModel group_;
    DufloMoore duflo_;
    std::shared_ptr<Cache> cache_;
};

}  // namespace qha
