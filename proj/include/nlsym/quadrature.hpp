#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "nlsym/geometry.hpp"
#include "nlsym/kernels.hpp"

namespace nlsym {
namespace quad {

// Gauss-Legendre nodes/weights on [-1, 1]
inline constexpr std::array<double, 2> g4_x = {0.33998104358485626, 0.86113631159405258};
inline constexpr std::array<double, 2> g4_w = {0.65214515486254614, 0.34785484513745386};
inline constexpr std::array<double, 4> g8_x = {0.18343464249564980, 0.52553240991632899,
                                               0.79666647741362674, 0.96028985649753623};
inline constexpr std::array<double, 4> g8_w = {0.36268378337836198, 0.31370664587788729,
                                               0.22238103445337447, 0.10122853629037626};
inline constexpr std::array<double, 8> g16_x = {0.09501250983763744, 0.28160355077925891,
                                                0.45801677765722739, 0.61787624440264375,
                                                0.75540440835500303, 0.86563120238783174,
                                                0.94457502307323258, 0.98940093499164993};
inline constexpr std::array<double, 8> g16_w = {0.18945061045506850, 0.18260341504492359,
                                                0.16915651939500254, 0.14959598881657673,
                                                0.12462897125553387, 0.09515851168249278,
                                                0.06225352393864789, 0.02715245941175409};

template <typename F>
double gauss8(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += g8_w[i] * (f(c + r * g8_x[i]) + f(c - r * g8_x[i]));
    return s * r;
}

template <typename F>
double gauss16(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += g16_w[i] * (f(c + r * g16_x[i]) + f(c - r * g16_x[i]));
    return s * r;
}

namespace detail {
template <typename F>
double adapt_interval_rec(F& f, double a, double b, double tol, double noise_floor, int depth,
                          int max_depth) {
    const double c = 0.5 * (a + b), r = 0.5 * (b - a);
    double q16 = 0.0, q16_abs = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double fp = f(c + r * g16_x[i]);
        const double fm = f(c - r * g16_x[i]);
        q16 += g16_w[i] * (fp + fm);
        q16_abs += g16_w[i] * (std::abs(fp) + std::abs(fm));
    }
    q16 *= r;
    q16_abs *= r;
    const double q8 = gauss8(f, a, b);
    const double err = std::abs(q16 - q8);
    // noise floor relative to the absolute mass: below it refinement only adds noise
    if (err <= tol || err <= noise_floor * q16_abs || depth >= max_depth) return q16;
    const double m = 0.5 * (a + b);
    if (!(m > a && m < b)) return q16;
    return adapt_interval_rec(f, a, m, 0.5 * tol, noise_floor, depth + 1, max_depth) +
           adapt_interval_rec(f, m, b, 0.5 * tol, noise_floor, depth + 1, max_depth);
}
}  // namespace detail

/// Adaptive 1-D quadrature with an absolute tolerance. Endpoint algebraic
/// singularities are handled by depth grading; `noise_floor` is the relative
/// accuracy of the integrand itself.
template <typename F>
double adapt_interval(F&& f, double a, double b, double abs_tol, int max_depth = 48,
                      double noise_floor = 1e-15) {
    if (!(b > a)) return 0.0;
    return detail::adapt_interval_rec(f, a, b, abs_tol, noise_floor, 0, max_depth);
}

/// Same, with mandatory split points inserted first.
template <typename F>
double adapt_interval_split(F&& f, double a, double b, const std::vector<double>& splits,
                            double abs_tol, int max_depth = 48, double noise_floor = 1e-15) {
    std::vector<double> pts{a, b};
    for (double s : splits)
        if (s > a && s < b) pts.push_back(s);
    std::sort(pts.begin(), pts.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        total += adapt_interval(f, pts[i], pts[i + 1], abs_tol / static_cast<double>(pts.size() - 1),
                                max_depth, noise_floor);
    return total;
}

/// Fixed-cost rule for piecewise-smooth integrands whose non-smooth points sit
/// at the interval endpoints: dyadic panel grading from both ends with Gauss-16
/// per panel. On geometric panels the rule is accurate to machine precision,
/// and the cost is deterministic, so repeated evaluations carry no adaptivity
/// noise.
template <typename F>
double graded_panels(F&& f, double a, double b, int levels = 36) {
    if (!(b > a)) return 0.0;
    const double len = b - a;
    double total = 0.0;
    double step = len * std::pow(0.5, levels + 1);
    // innermost panels touch the endpoints
    total += gauss16(f, a, a + step);
    total += gauss16(f, b - step, b);
    double left = a + step;
    double right = b - step;
    for (int j = levels; j >= 1; --j) {
        const double next_step = len * std::pow(0.5, j);
        total += gauss16(f, left, a + next_step);
        total += gauss16(f, b - next_step, right);
        left = a + next_step;
        right = b - next_step;
    }
    return total;
}

using Vec4 = std::array<double, 4>;

inline Vec4& operator+=(Vec4& a, const Vec4& b) {
    for (int i = 0; i < 4; ++i) a[i] += b[i];
    return a;
}

struct BoxIntegrandResult {
    Vec4 value{0, 0, 0, 0};
};

namespace detail {

inline void box_radius_range(int dim, const Point& lo, const Point& hi, double& rmin, double& rmax) {
    double s_min = 0.0, s_max = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double near = (lo[d] > 0.0) ? lo[d] : ((hi[d] < 0.0) ? -hi[d] : 0.0);
        const double far = std::max(std::abs(lo[d]), std::abs(hi[d]));
        s_min += near * near;
        s_max += far * far;
    }
    rmin = std::sqrt(s_min);
    rmax = std::sqrt(s_max);
}

template <typename F>
Vec4 tensor_gauss(int dim, F& f, const Point& lo, const Point& hi, const double* gx, const double* gw,
                  int half_n, Vec4* abs_out = nullptr) {
    Vec4 acc{0, 0, 0, 0};
    Vec4 abs_acc{0, 0, 0, 0};
    // full node lists per axis (mirror the half tables)
    std::array<std::array<double, 16>, 3> xs{}, ws{};
    std::array<int, 3> nn{};
    for (int d = 0; d < dim; ++d) {
        const double c = 0.5 * (lo[d] + hi[d]);
        const double r = 0.5 * (hi[d] - lo[d]);
        int m = 0;
        for (int i = 0; i < half_n; ++i) {
            xs[d][m] = c + r * gx[i];
            ws[d][m] = r * gw[i];
            ++m;
            xs[d][m] = c - r * gx[i];
            ws[d][m] = r * gw[i];
            ++m;
        }
        nn[d] = m;
    }
    std::array<int, 3> idx{0, 0, 0};
    while (true) {
        Point p{0, 0, 0};
        double w = 1.0;
        for (int d = 0; d < dim; ++d) {
            p[d] = xs[d][idx[d]];
            w *= ws[d][idx[d]];
        }
        const Vec4 v = f(p);
        for (int i = 0; i < 4; ++i) {
            acc[i] += w * v[i];
            abs_acc[i] += std::abs(w * v[i]);
        }
        int d = dim - 1;
        while (d >= 0) {
            if (++idx[d] < nn[d]) break;
            idx[d] = 0;
            --d;
        }
        if (d < 0) break;
    }
    if (abs_out) *abs_out = abs_acc;
    return acc;
}

template <typename F>
void adapt_box_rec(int dim, F& f, Point lo, Point hi, const std::vector<double>& interfaces,
                   double clip_below, const Vec4& tol, int depth, int max_depth, Vec4& acc) {
    double rmin, rmax;
    box_radius_range(dim, lo, hi, rmin, rmax);
    if (clip_below > 0.0 && rmax <= clip_below) return;  // fully clipped away
    bool must_split = false;
    if (depth < max_depth) {
        for (double s : interfaces)
            if (rmin < s && s < rmax) must_split = true;
        if (clip_below > 0.0 && rmin < clip_below && clip_below < rmax) must_split = true;
    }
    Vec4 q4{0, 0, 0, 0}, q8{0, 0, 0, 0};
    if (!must_split) {
        Vec4 q8_abs{0, 0, 0, 0};
        q4 = tensor_gauss(dim, f, lo, hi, g4_x.data(), g4_w.data(), 2);
        q8 = tensor_gauss(dim, f, lo, hi, g8_x.data(), g8_w.data(), 4, &q8_abs);
        bool ok = true;
        for (int i = 0; i < 4; ++i) {
            const double err = std::abs(q8[i] - q4[i]);
            if (err > tol[i] && err > 1e-15 * q8_abs[i]) ok = false;
        }
        if (ok || depth >= max_depth) {
            acc += q8;
            return;
        }
    }
    // split the longest axis
    int axis = 0;
    double len = hi[0] - lo[0];
    for (int d = 1; d < dim; ++d)
        if (hi[d] - lo[d] > len) {
            len = hi[d] - lo[d];
            axis = d;
        }
    const double mid = 0.5 * (lo[axis] + hi[axis]);
    Vec4 half_tol = tol;
    for (int i = 0; i < 4; ++i) half_tol[i] *= 0.5;
    Point hi_l = hi;
    hi_l[axis] = mid;
    Point lo_r = lo;
    lo_r[axis] = mid;
    adapt_box_rec(dim, f, lo, hi_l, interfaces, clip_below, half_tol, depth + 1, max_depth, acc);
    adapt_box_rec(dim, f, lo_r, hi, interfaces, clip_below, half_tol, depth + 1, max_depth, acc);
}

}  // namespace detail

/// Adaptive tensor-Gauss integration of a Vec4-valued integrand over a box.
/// Boxes straddling an interface radius (or the clip radius) are subdivided
/// before the error test; points with |z| < clip_below contribute zero.
template <typename F>
Vec4 adapt_box(int dim, F&& f, const Point& lo, const Point& hi,
               const std::vector<double>& interfaces, double clip_below, double rel_tol,
               int max_depth = 22) {
    auto clipped = [&](const Point& p) -> Vec4 {
        if (clip_below > 0.0) {
            double s = 0.0;
            for (int d = 0; d < dim; ++d) s += p[d] * p[d];
            if (s < clip_below * clip_below) return Vec4{0, 0, 0, 0};
        }
        return f(p);
    };
    // root estimate fixes the absolute tolerances
    const Vec4 root = detail::tensor_gauss(dim, clipped, lo, hi, g8_x.data(), g8_w.data(), 4);
    Vec4 tol;
    for (int i = 0; i < 4; ++i) tol[i] = std::max(rel_tol * std::abs(root[i]), 1e-300);
    Vec4 acc{0, 0, 0, 0};
    detail::adapt_box_rec(dim, clipped, lo, hi, interfaces, clip_below, tol, 0, max_depth, acc);
    return acc;
}

/// Kernel mass and per-axis second moments over a box: integrals of K and of
/// z_d^2 K for d < dim.
inline Vec4 kernel_cell_moments(const KernelSpec& k, const Point& lo, const Point& hi,
                                double rel_tol = 1e-12, double clip_below = 0.0) {
    const int dim = k.dim();
    auto f = [&](const Point& p) -> Vec4 {
        double s = 0.0;
        for (int d = 0; d < dim; ++d) s += p[d] * p[d];
        const double r = std::sqrt(s);
        const double kv = k.value_radial(r);
        Vec4 out{kv, 0, 0, 0};
        for (int d = 0; d < dim; ++d) out[1 + d] = p[d] * p[d] * kv;
        return out;
    };
    return adapt_box(dim, f, lo, hi, k.breakpoints(), clip_below, rel_tol);
}

/// Integral of K(z) over { |z| > rho } intersected with the exterior of the
/// centered box with the given half-widths: area * G(rho) minus the part of
/// the annulus inside the box.
inline double centered_box_exterior_mass(const KernelSpec& k, const Point& halfwidth,
                                         double rel_tol = 1e-10) {
    const int dim = k.dim();
    double rho = halfwidth[0];
    for (int d = 1; d < dim; ++d) rho = std::min(rho, halfwidth[d]);
    if (!(rho > 0.0)) throw std::invalid_argument("box_exterior_mass: box must contain the origin");
    const double whole = sphere_area(dim) * k.tail_integral(rho);
    if (dim == 1) return whole;  // the box is exactly the inscribed interval
    Point lo{0, 0, 0}, hi{0, 0, 0};
    for (int d = 0; d < dim; ++d) {
        lo[d] = -halfwidth[d];
        hi[d] = halfwidth[d];
    }
    const Vec4 inside = kernel_cell_moments(k, lo, hi, rel_tol, rho);
    return whole - inside[0];
}

/// Same for an arbitrary box [lo, hi] strictly containing the origin.
inline double box_exterior_mass(const KernelSpec& k, const Point& lo, const Point& hi,
                                double rel_tol = 1e-10) {
    const int dim = k.dim();
    double rho = std::numeric_limits<double>::infinity();
    for (int d = 0; d < dim; ++d) {
        if (!(lo[d] < 0.0 && hi[d] > 0.0))
            throw std::invalid_argument("box_exterior_mass: origin not strictly inside the box");
        rho = std::min(rho, std::min(-lo[d], hi[d]));
    }
    const double whole = sphere_area(dim) * k.tail_integral(rho);
    if (dim == 1) {
        // exterior of [lo, hi] on the line
        return k.tail_integral(-lo[0]) + k.tail_integral(hi[0]);
    }
    const Vec4 inside = kernel_cell_moments(k, lo, hi, rel_tol, rho);
    return whole - inside[0];
}

/// Integral of K(x - y) over the exterior of the open ball B(center, R), for x
/// strictly inside: radial tail integrals against the angular boundary
/// distance.
inline double ball_exterior_mass(const KernelSpec& k, const Point& x, const Point& center,
                                 double radius, double rel_tol = 1e-9) {
    const int dim = k.dim();
    const double d = dist(x, center, dim);
    if (!(d < radius)) throw std::invalid_argument("tail_mass: point is not strictly inside the ball");
    auto boundary_dist = [&](double cos_theta) {
        // distance from x to the sphere along a ray at angle theta to (x - center)
        return -d * cos_theta + std::sqrt(d * d * cos_theta * cos_theta + radius * radius - d * d);
    };
    if (dim == 1) return k.tail_integral(radius - d) + k.tail_integral(radius + d);
    if (dim == 2) {
        auto f = [&](double theta) { return k.tail_integral(boundary_dist(std::cos(theta))); };
        const double scale = k.tail_integral(radius - d) + 1e-300;
        return 2.0 * adapt_interval(f, 0.0, M_PI, rel_tol * scale * M_PI);
    }
    auto f = [&](double theta) {
        return std::sin(theta) * k.tail_integral(boundary_dist(std::cos(theta)));
    };
    const double scale = k.tail_integral(radius - d) + 1e-300;
    return 2.0 * M_PI * adapt_interval(f, 0.0, M_PI, rel_tol * scale * M_PI);
}

}  // namespace quad

/// Integral of K(x - y) over the exterior of the mask. Ball masks use the
/// semi-analytic radial route; box masks integrate the exterior of the box;
/// custom masks sum cell integrals over non-mask cells of the grid box and add
/// the analytic far field beyond it.
inline double tail_mass(const KernelSpec& k, const Point& x, const DomainMask& mask,
                        double rel_tol = 1e-9) {
    if (k.dim() != mask.grid().dim()) throw std::invalid_argument("tail_mass: dimension mismatch");
    const int dim = k.dim();
    if (mask.kind() == MaskKind::Ball)
        return quad::ball_exterior_mass(k, x, mask.ball_center(), mask.ball_radius(), rel_tol);

    const UniformGrid& g = mask.grid();
    const double h = g.spacing();
    // grid box region (cells centered at nodes) relative to x
    Point rel_lo{0, 0, 0}, rel_hi{0, 0, 0};
    for (int d = 0; d < dim; ++d) {
        rel_lo[d] = (g.lo(d) - 0.5) * h - x[d];
        rel_hi[d] = (g.hi(d) + 0.5) * h - x[d];
        if (!(rel_lo[d] < 0.0 && rel_hi[d] > 0.0))
            throw std::invalid_argument("tail_mass: point is not strictly inside the grid box");
    }
    {  // the point itself must sit strictly inside the mask region
        const Index nearest = g.snap(x, 0.51);
        if (!mask.inside(nearest)) throw std::invalid_argument("tail_mass: point is not inside the mask");
    }
    double total = quad::box_exterior_mass(k, rel_lo, rel_hi, rel_tol);
    const double cell_tol = rel_tol / static_cast<double>(g.size());
    for (std::size_t f = 0; f < g.size(); ++f) {
        if (mask.inside(f)) continue;
        const Point c = g.coord(f);
        Point lo{0, 0, 0}, hi{0, 0, 0};
        bool contains_origin = true;
        for (int d = 0; d < dim; ++d) {
            lo[d] = c[d] - 0.5 * h - x[d];
            hi[d] = c[d] + 0.5 * h - x[d];
            if (lo[d] > 0.0 || hi[d] < 0.0) contains_origin = false;
        }
        if (contains_origin)
            throw std::invalid_argument("tail_mass: point lies in an exterior cell of the mask");
        total += quad::kernel_cell_moments(k, lo, hi, std::max(cell_tol, 1e-13))[0];
    }
    return total;
}

}  // namespace nlsym
