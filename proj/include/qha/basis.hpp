#pragma once

// Truncated Hilbert spaces.
//
// Affine: L^2(R+) sampled at omega_j = omega_min e^{j delta}, j < N, with
// quadrature weights omega_j delta. Vectors are stored in orthonormal
// coordinates c_j = sqrt(omega_j delta) psi(omega_j), so the weighted pairing
// is the plain Euclidean one.
//
// Cyclic: C^N with the standard basis.

#include <cmath>
#include <functional>
#include <utility>

#include "qha/core.hpp"

namespace qha {

class HilbertBasis {
public:
    static HilbertBasis affine(std::size_t n, double omega_min, double delta) {
        require(n >= 2, ErrorKind::invalid_argument, "basis dimension must be at least 2");
        require(omega_min > 0 && std::isfinite(omega_min), ErrorKind::invalid_argument, "omega_min must be positive");
        require(delta > 0 && std::isfinite(delta), ErrorKind::invalid_argument, "log-frequency step must be positive");
        return HilbertBasis(Backend::affine, n, omega_min, delta);
    }

    static HilbertBasis affine_default() { return affine(256, 1.0 / 16.0, std::log(2.0) / 16.0); }

    static HilbertBasis cyclic(std::size_t n) {
        require(n >= 2, ErrorKind::invalid_argument, "cyclic dimension must be at least 2");
        return HilbertBasis(Backend::cyclic, n, 0.0, 0.0);
    }

    Backend backend() const { return backend_; }
    std::size_t dim() const { return n_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(n_); }
    double omega_min() const { return omega_min_; }
    double delta() const { return delta_; }

    double omega(std::size_t j) const { return omega_min_ * std::exp(static_cast<double>(j) * delta_); }

    double weight(std::size_t j) const { return backend_ == Backend::affine ? omega(j) * delta_ : 1.0; }

    // Half-open index range that excludes the outer 10% on each side.
    std::pair<std::size_t, std::size_t> interior_band() const {
        const auto edge = static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(n_)));
        return {edge, n_ - edge};
    }

    bool operator==(const HilbertBasis& o) const {
        return backend_ == o.backend_ && n_ == o.n_ && omega_min_ == o.omega_min_ && delta_ == o.delta_;
    }

private:
    HilbertBasis(Backend b, std::size_t n, double omega_min, double delta)
        : backend_(b), n_(n), omega_min_(omega_min), delta_(delta) {}

    Backend backend_;
    std::size_t n_;
    double omega_min_;
    double delta_;
};

inline cplx inner(const Vec& psi, const Vec& phi) { return phi.dot(psi); }

// Orthonormal coordinates of a function of frequency (affine) or of a
// sequence n -> f(n) (cyclic).
inline Vec sample(const HilbertBasis& basis, const std::function<cplx(double)>& f) {
    Vec c(basis.size());
    for (std::size_t j = 0; j < basis.dim(); ++j) {
        const double arg = basis.backend() == Backend::affine ? basis.omega(j) : static_cast<double>(j);
        c[static_cast<Eigen::Index>(j)] = std::sqrt(basis.weight(j)) * f(arg);
    }
    return c;
}

// Function values psi(omega_j) from orthonormal coordinates.
inline Vec to_samples(const HilbertBasis& basis, const Vec& c) {
    Vec v(c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j) v[j] = c[j] / std::sqrt(basis.weight(static_cast<std::size_t>(j)));
    return v;
}

// Unit-norm wave packet, Gaussian in ln(omega) around `center` with log-width
// `width`, translated to time `time` (phase e^{-2 pi i time omega}).
// Amplitudes below 1e-18 of the peak are stored as exact zeros so that
// band-limited kernels can skip them.
inline Vec log_gaussian(const HilbertBasis& basis, double center, double width, double time = 0.0) {
    require(basis.backend() == Backend::affine, ErrorKind::backend_mismatch, "log-gaussian packets are affine vectors");
    require(center > 0 && width > 0, ErrorKind::invalid_argument, "packet needs positive center and width");
    Vec c = sample(basis, [&](double w) {
        const double l = std::log(w / center) / width;
        const double amp = std::exp(-0.5 * l * l);
        return amp < 1e-18 ? cplx(0.0) : amp * std::polar(1.0, -2 * pi * time * w);
    });
    return c / c.norm();
}

// Unit-norm periodized Gaussian on Z/N, centred at `center`, modulated by
// e^{2 pi i freq n / N}.
inline Vec cyclic_gaussian(const HilbertBasis& basis, double center, double width, double freq = 0.0) {
    require(basis.backend() == Backend::cyclic, ErrorKind::backend_mismatch, "cyclic packets need a cyclic basis");
    const double n = static_cast<double>(basis.dim());
    Vec c = sample(basis, [&](double j) {
        double acc = 0.0;
        for (int wrap = -2; wrap <= 2; ++wrap) {
            const double d = (j - center + wrap * n) / width;
            acc += std::exp(-0.5 * d * d);
        }
        return acc * std::polar(1.0, 2 * pi * freq * j / n);
    });
    return c / c.norm();
}

// Fraction of squared norm outside the interior band.
inline double band_leakage(const HilbertBasis& basis, const Vec& c) {
    const auto [lo, hi] = basis.interior_band();
    const double total = c.squaredNorm();
    if (total == 0.0) return 0.0;
    const double inside = c.segment(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(hi - lo)).squaredNorm();
    return (total - inside) / total;
}

}  // namespace qha
