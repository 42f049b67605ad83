#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "nlsym/geometry.hpp"
#include "nlsym/kernels.hpp"
#include "nlsym/quadrature.hpp"

namespace nlsym {

/// Profile for the reference evaluation of the principal-value operator by
/// adaptive quadrature. `second_difference(x, z)` returns
/// 2u(x) - u(x+z) - u(x-z); supplying a cancellation-safe closed form keeps
/// the reference accurate near z = 0. `kink_radii` lists radii |y| where u is
/// not smooth, so the quadrature can split there.
struct ReferenceProfile {
    std::function<double(const Point&)> value;
    std::function<double(const Point&, const Point&)> second_difference;
    double support_radius = std::numeric_limits<double>::infinity();
    double decay_radius = std::numeric_limits<double>::infinity();
    std::vector<double> kink_radii;
};

namespace detail {

inline double plain_second_difference(const ReferenceProfile& u, const Point& x, const Point& z,
                                      int dim) {
    Point p = x, q = x;
    for (int d = 0; d < dim; ++d) {
        p[d] += z[d];
        q[d] -= z[d];
    }
    return 2.0 * u.value(x) - u.value(p) - u.value(q);
}

inline double second_difference(const ReferenceProfile& u, const Point& x, const Point& z, int dim) {
    if (u.second_difference) return u.second_difference(x, z);
    return plain_second_difference(u, x, z, dim);
}

}  // namespace detail

/// Reference value of (Lu)(x) = P.V. integral of (u(x)-u(y)) K(x-y) dy,
/// computed by adaptive quadrature of the symmetrized difference
/// (1/2)(2u(x)-u(x+z)-u(x-z)) against K. Independent of the grid scheme.
/// Supports dim 1 and 2.
inline double pv_operator_value(const KernelSpec& k, const ReferenceProfile& u, const Point& x,
                                double rel_tol = 1e-10) {
    const int dim = k.dim();
    const double ax = norm(x, dim);
    const bool has_precise = static_cast<bool>(u.second_difference);
    const double r_inner = has_precise ? 1e-7 : 1e-4;
    const double fd_scale = std::max(r_inner, 1e-5);

    // outer radius beyond which u(x +- z) is zero or negligible
    double r_outer;
    if (std::isfinite(u.support_radius))
        r_outer = u.support_radius + ax + 1e-12;
    else if (std::isfinite(u.decay_radius))
        r_outer = u.decay_radius + ax;
    else
        throw std::invalid_argument("pv_operator_value: profile needs a support or decay radius");

    std::vector<double> radial_splits(k.breakpoints());
    for (double rk : u.kink_radii) {
        radial_splits.push_back(std::abs(rk - ax));
        radial_splits.push_back(rk + ax);
    }

    const double scale = k.normalization();
    const int levels = rel_tol <= 1e-8 ? 36 : 22;
    auto graded_over_pieces = [&](auto&& f, double a, double b, const std::vector<double>& splits) {
        std::vector<double> pts{a, b};
        for (double s : splits)
            if (s > a && s < b) pts.push_back(s);
        std::sort(pts.begin(), pts.end());
        double total = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            total += quad::graded_panels(f, pts[i], pts[i + 1], levels);
        return total;
    };

    if (dim == 1) {
        auto D = [&](double r) { return detail::second_difference(u, x, make_point(r), 1); };
        const double upp = -D(fd_scale) / (fd_scale * fd_scale);
        const double inner = -upp * k.radial_moment(0.0, r_inner);
        const double tail = 2.0 * u.value(x) * k.tail_integral(r_outer);
        auto f = [&](double r) { return D(r) * k.value_radial(r); };
        const double main = graded_over_pieces(f, r_inner, r_outer, radial_splits);
        return scale * (inner + main + tail);
    }
    if (dim != 2) throw std::invalid_argument("pv_operator_value: implemented for dim 1 and 2");

    const double phi = std::atan2(x[1], x[0]);
    auto D = [&](const Point& z) { return detail::second_difference(u, x, z, 2); };
    double lap_scale;
    {
        const double d1 = D(make_point(fd_scale, 0.0));
        const double d2 = D(make_point(0.0, fd_scale));
        lap_scale = -(d1 + d2) / (fd_scale * fd_scale);  // approximates the local Laplacian
    }
    const double inner = -0.5 * M_PI * lap_scale * k.radial_moment(0.0, r_inner);
    const double tail = 2.0 * M_PI * u.value(x) * k.tail_integral(r_outer);

    // fixed graded panels per smooth angular piece: deterministic values, so
    // the outer radial adaptivity sees a clean integrand
    auto angular = [&](double r) {
        std::vector<double> pts{0.0, M_PI};
        if (ax > 1e-14) {
            for (double rk : u.kink_radii) {
                const double c = (rk * rk - ax * ax - r * r) / (2.0 * r * ax);
                if (std::abs(c) <= 1.0) {
                    const double dth = std::acos(c);
                    for (double theta : {phi + dth, phi - dth, phi + dth - M_PI, phi - dth - M_PI}) {
                        double t = std::fmod(theta, M_PI);
                        if (t < 0.0) t += M_PI;
                        if (t > 0.0 && t < M_PI) pts.push_back(t);
                    }
                }
            }
        }
        std::sort(pts.begin(), pts.end());
        auto f = [&](double theta) { return D(make_point(r * std::cos(theta), r * std::sin(theta))); };
        double total = 0.0;
        const int ang_levels = rel_tol <= 1e-8 ? 28 : 18;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
            total += quad::graded_panels(f, pts[i], pts[i + 1], ang_levels);
        return total;
    };

    auto f_rad = [&](double r) { return angular(r) * k.value_radial(r) * r; };
    const double main = graded_over_pieces(f_rad, r_inner, r_outer, radial_splits);
    return scale * (inner + main + tail);
}

/// Normalization of the ball profile (R^2 - |x|^2)_+^alpha: the fractional
/// Laplacian of (1 - |x|^2)_+^alpha equals this constant on the unit ball.
inline double torsion_normalization(int dim, double alpha) {
    return std::pow(4.0, alpha) * std::tgamma(1.0 + alpha) * std::tgamma(0.5 * dim + alpha) /
           std::tgamma(0.5 * dim);
}

/// Solution of (-Delta)^alpha u = 1 on the ball of the given radius with zero
/// exterior values.
inline double torsion_value(int dim, double alpha, const Point& x, double radius = 1.0) {
    const double r2 = 1.0 - std::pow(norm(x, dim) / radius, 2);
    if (r2 <= 0.0) return 0.0;
    return std::pow(radius, 2.0 * alpha) * std::pow(r2, alpha) / torsion_normalization(dim, alpha);
}

/// Reference profile for the ball torsion solution, with a cancellation-safe
/// second difference.
inline ReferenceProfile torsion_reference_profile(int dim, double alpha, double radius = 1.0) {
    ReferenceProfile p;
    p.support_radius = radius;
    p.kink_radii = {radius};
    const double scale = std::pow(radius, 2.0 * alpha) / torsion_normalization(dim, alpha);
    p.value = [dim, alpha, radius, scale](const Point& y) {
        const double t = 1.0 - std::pow(norm(y, dim) / radius, 2);
        return t > 0.0 ? scale * std::pow(t, alpha) : 0.0;
    };
    p.second_difference = [dim, alpha, radius, scale](const Point& x, const Point& z) -> double {
        double xz = 0.0, z2 = 0.0, x2 = 0.0;
        for (int d = 0; d < dim; ++d) {
            xz += x[d] * z[d];
            z2 += z[d] * z[d];
            x2 += x[d] * x[d];
        }
        const double R2 = radius * radius;
        const double t0 = (R2 - x2) / R2;
        if (!(t0 > 0.0)) {
            const double tp = t0 - (2.0 * xz + z2) / R2;
            const double tm = t0 + (2.0 * xz - z2) / R2;
            const double up = tp > 0.0 ? scale * std::pow(tp, alpha) : 0.0;
            const double um = tm > 0.0 ? scale * std::pow(tm, alpha) : 0.0;
            return -up - um;
        }
        // relative increments formed directly, so tiny steps do not cancel away
        const double dp = -(2.0 * xz + z2) / (R2 * t0);
        const double dm = (2.0 * xz - z2) / (R2 * t0);
        const double u0 = scale * std::pow(t0, alpha);
        if (dp > -1.0 && dm > -1.0) {
            const double sp = std::expm1(alpha * std::log1p(dp));
            const double sm = std::expm1(alpha * std::log1p(dm));
            return -u0 * (sp + sm);
        }
        const double up = dp > -1.0 ? scale * std::pow(t0 * (1.0 + dp), alpha) : 0.0;
        const double um = dm > -1.0 ? scale * std::pow(t0 * (1.0 + dm), alpha) : 0.0;
        return 2.0 * u0 - up - um;
    };
    return p;
}

/// Gaussian exp(-|y|^2) with a cancellation-safe second difference.
inline ReferenceProfile gaussian_reference_profile(int dim) {
    ReferenceProfile p;
    p.decay_radius = 14.0;
    p.value = [dim](const Point& y) {
        double s = 0.0;
        for (int d = 0; d < dim; ++d) s += y[d] * y[d];
        return std::exp(-s);
    };
    p.second_difference = [dim](const Point& x, const Point& z) -> double {
        double xz = 0.0, z2 = 0.0, x2 = 0.0;
        for (int d = 0; d < dim; ++d) {
            xz += x[d] * z[d];
            z2 += z[d] * z[d];
            x2 += x[d] * x[d];
        }
        const double u0 = std::exp(-x2);
        const double s = 2.0 * xz;
        // 2 - e^{-z2}(e^{-s} + e^{s}) = -2 expm1(log cosh(s) - z2)
        const double sh = std::sinh(0.5 * s);
        const double log_cosh = std::log1p(2.0 * sh * sh);
        return -2.0 * u0 * std::expm1(log_cosh - z2);
    };
    return p;
}

}  // namespace nlsym
