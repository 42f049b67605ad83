#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlsym {

using Point = std::array<double, 3>;
using Index = std::array<int, 3>;

inline Point make_point(double x0 = 0.0, double x1 = 0.0, double x2 = 0.0) {
    return Point{x0, x1, x2};
}

inline double norm(const Point& p, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) s += p[d] * p[d];
    return std::sqrt(s);
}

inline double dist(const Point& a, const Point& b, int dim) {
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double t = a[d] - b[d];
        s += t * t;
    }
    return std::sqrt(s);
}

/// Reflection across the hyperplane {x_axis = lambda}. Involution by construction.
inline Point reflect_point(const Point& x, double lambda, int axis, int dim) {
    if (axis < 0 || axis >= dim) throw std::invalid_argument("reflect_point: axis out of range");
    Point y = x;
    y[axis] = 2.0 * lambda - x[axis];
    return y;
}

/// Uniform lattice {i*h : lo <= i <= hi} in `dim` dimensions (dim in 1..3).
/// Node coordinates are exact integer multiples of h, so the plane x_d = 0
/// passes through nodes and any reflection across a half-grid multiple of h
/// maps the lattice onto itself.
class UniformGrid {
public:
    UniformGrid(int dim, double h, Index lo, Index hi) : dim_(dim), h_(h), lo_(lo), hi_(hi) {
        if (dim < 1 || dim > 3) throw std::invalid_argument("UniformGrid: dim must be 1..3");
        if (!(h > 0.0)) throw std::invalid_argument("UniformGrid: spacing must be positive");
        for (int d = dim; d < 3; ++d) { lo_[d] = 0; hi_[d] = 0; }
        std::size_t total = 1;
        for (int d = 0; d < dim_; ++d) {
            if (hi_[d] < lo_[d]) throw std::invalid_argument("UniformGrid: empty extent");
            n_[d] = hi_[d] - lo_[d] + 1;
            total *= static_cast<std::size_t>(n_[d]);
        }
        for (int d = dim_; d < 3; ++d) n_[d] = 1;
        size_ = total;
        stride_[dim_ - 1] = 1;
        for (int d = dim_ - 2; d >= 0; --d) stride_[d] = stride_[d + 1] * n_[d + 1];
    }

    /// Box symmetric about the origin with per-axis half-width, snapped to the lattice.
    static UniformGrid symmetric(int dim, double h, const std::array<double, 3>& halfwidth) {
        Index lo{0, 0, 0}, hi{0, 0, 0};
        for (int d = 0; d < dim; ++d) {
            const int n = static_cast<int>(std::ceil(halfwidth[d] / h - 1e-12));
            lo[d] = -n;
            hi[d] = n;
        }
        return UniformGrid(dim, h, lo, hi);
    }

    int dim() const { return dim_; }
    double spacing() const { return h_; }
    int lo(int d) const { return lo_[d]; }
    int hi(int d) const { return hi_[d]; }
    int extent(int d) const { return n_[d]; }
    std::size_t size() const { return size_; }

    double cell_volume() const {
        double v = 1.0;
        for (int d = 0; d < dim_; ++d) v *= h_;
        return v;
    }

    bool contains(const Index& i) const {
        for (int d = 0; d < dim_; ++d)
            if (i[d] < lo_[d] || i[d] > hi_[d]) return false;
        return true;
    }

    std::size_t flat(const Index& i) const {
        std::size_t f = 0;
        for (int d = 0; d < dim_; ++d) f += static_cast<std::size_t>(i[d] - lo_[d]) * stride_[d];
        return f;
    }

    Index unflat(std::size_t f) const {
        Index i{0, 0, 0};
        for (int d = 0; d < dim_; ++d) {
            i[d] = lo_[d] + static_cast<int>(f / stride_[d]);
            f %= stride_[d];
        }
        return i;
    }

    Point coord(const Index& i) const {
        Point p{0.0, 0.0, 0.0};
        for (int d = 0; d < dim_; ++d) p[d] = i[d] * h_;
        return p;
    }

    Point coord(std::size_t f) const { return coord(unflat(f)); }

    /// Nearest lattice index; throws when the point is further than tol from the lattice.
    Index snap(const Point& p, double tol = 1e-9) const {
        Index i{0, 0, 0};
        for (int d = 0; d < dim_; ++d) {
            const double q = p[d] / h_;
            i[d] = static_cast<int>(std::llround(q));
            if (std::abs(q - i[d]) > tol * std::max(1.0, std::abs(q)))
                throw std::invalid_argument("UniformGrid::snap: point is not on the lattice");
        }
        return i;
    }

    /// 2*lambda/h as an exact integer tick count. Throws when lambda is not a
    /// multiple of h/2, which would take reflections off the lattice.
    int plane_ticks(double lambda) const {
        const double q = 2.0 * lambda / h_;
        const long long t = std::llround(q);
        if (std::abs(q - t) > 1e-9 * std::max(1.0, std::abs(q)))
            throw std::invalid_argument("lambda must be an integer multiple of h/2");
        return static_cast<int>(t);
    }

    /// Reflected index across {x_axis = ticks*h/2}; exact integer arithmetic.
    Index reflect_index(const Index& i, int ticks, int axis) const {
        Index j = i;
        j[axis] = ticks - i[axis];
        return j;
    }

    bool operator==(const UniformGrid& o) const {
        if (dim_ != o.dim_ || h_ != o.h_) return false;
        for (int d = 0; d < dim_; ++d)
            if (lo_[d] != o.lo_[d] || hi_[d] != o.hi_[d]) return false;
        return true;
    }
    bool operator!=(const UniformGrid& o) const { return !(*this == o); }

private:
    int dim_;
    double h_;
    Index lo_, hi_, n_;
    std::array<std::size_t, 3> stride_{1, 1, 1};
    std::size_t size_;
};

enum class MaskKind { Ball, Box, Custom };

/// Boolean membership per grid node. Ball membership is strict (|x-c| < r), so
/// boundary nodes count as exterior, matching a zero condition on the closed
/// complement of an open set.
class DomainMask {
public:
    static DomainMask ball(const UniformGrid& grid, const Point& center, double radius) {
        DomainMask m(grid, MaskKind::Ball);
        m.center_ = center;
        m.radius_ = radius;
        m.inside_.assign(grid.size(), 0);
        for (std::size_t f = 0; f < grid.size(); ++f) {
            const Point p = grid.coord(f);
            if (dist(p, center, grid.dim()) < radius) m.inside_[f] = 1;
        }
        for (int d = 0; d < grid.dim(); ++d)
            if (std::abs(center[d]) < 1e-15) m.symmetry_axes_.push_back(d);
        m.finish();
        return m;
    }

    static DomainMask box(const UniformGrid& grid, const Point& lo, const Point& hi) {
        DomainMask m(grid, MaskKind::Box);
        m.inside_.assign(grid.size(), 0);
        for (std::size_t f = 0; f < grid.size(); ++f) {
            const Point p = grid.coord(f);
            bool in = true;
            for (int d = 0; d < grid.dim(); ++d)
                if (!(p[d] > lo[d] && p[d] < hi[d])) in = false;
            m.inside_[f] = in ? 1 : 0;
        }
        for (int d = 0; d < grid.dim(); ++d)
            if (std::abs(lo[d] + hi[d]) < 1e-15) m.symmetry_axes_.push_back(d);
        m.finish();
        return m;
    }

    static DomainMask custom(const UniformGrid& grid, std::vector<std::uint8_t> inside,
                             std::vector<int> symmetry_axes = {}) {
        if (inside.size() != grid.size())
            throw std::invalid_argument("DomainMask::custom: size mismatch");
        DomainMask m(grid, MaskKind::Custom);
        m.inside_ = std::move(inside);
        m.symmetry_axes_ = std::move(symmetry_axes);
        for (int a : m.symmetry_axes_)
            if (!m.symmetric_under_reflection(a))
                throw std::invalid_argument("DomainMask::custom: declared symmetry axis fails validation");
        m.finish();
        return m;
    }

    const UniformGrid& grid() const { return grid_; }
    MaskKind kind() const { return kind_; }
    const Point& ball_center() const { return center_; }
    double ball_radius() const { return radius_; }
    const std::vector<int>& symmetry_axes() const { return symmetry_axes_; }

    bool inside(std::size_t f) const { return inside_[f] != 0; }
    bool inside(const Index& i) const { return grid_.contains(i) && inside_[grid_.flat(i)] != 0; }
    const std::vector<std::size_t>& nodes() const { return nodes_; }
    std::size_t node_count() const { return nodes_.size(); }

    double measure() const { return static_cast<double>(nodes_.size()) * grid_.cell_volume(); }

    double diameter() const {
        if (kind_ == MaskKind::Ball) return 2.0 * radius_;
        // max pairwise distance over boundary nodes (nodes with an exterior neighbor)
        std::vector<std::size_t> bd;
        for (std::size_t f : nodes_) {
            const Index i = grid_.unflat(f);
            bool boundary = false;
            for (int d = 0; d < grid_.dim() && !boundary; ++d) {
                for (int s = -1; s <= 1 && !boundary; s += 2) {
                    Index j = i;
                    j[d] += s;
                    if (!inside(j)) boundary = true;
                }
            }
            if (boundary) bd.push_back(f);
        }
        double best = 0.0;
        for (std::size_t a = 0; a < bd.size(); ++a) {
            const Point pa = grid_.coord(bd[a]);
            for (std::size_t b = a + 1; b < bd.size(); ++b)
                best = std::max(best, dist(pa, grid_.coord(bd[b]), grid_.dim()));
        }
        return best;
    }

    bool symmetric_under_reflection(int axis) const {
        for (std::size_t f = 0; f < grid_.size(); ++f) {
            const Index i = grid_.unflat(f);
            const Index j = grid_.reflect_index(i, 0, axis);
            const bool a = inside_[f] != 0;
            const bool b = grid_.contains(j) ? (inside_[grid_.flat(j)] != 0) : false;
            if (a != b) return false;
        }
        return true;
    }

    /// Slice convexity: for two inside nodes sharing the coordinate on `axis`,
    /// every lattice node on the segment between them must be inside.
    bool convex_in_direction(int axis) const {
        const int dim = grid_.dim();
        if (dim == 1) return true;
        if (dim == 2) {
            const int other = (axis == 0) ? 1 : 0;
            for (int a = grid_.lo(axis); a <= grid_.hi(axis); ++a) {
                int first = INT32_MAX, last = INT32_MIN;
                for (int b = grid_.lo(other); b <= grid_.hi(other); ++b) {
                    Index i{0, 0, 0};
                    i[axis] = a;
                    i[other] = b;
                    if (inside(i)) {
                        first = std::min(first, b);
                        last = std::max(last, b);
                    }
                }
                if (first > last) continue;
                for (int b = first; b <= last; ++b) {
                    Index i{0, 0, 0};
                    i[axis] = a;
                    i[other] = b;
                    if (!inside(i)) return false;
                }
            }
            return true;
        }
        // dim == 3: pairwise with gcd stepping along the in-slice segment
        for (std::size_t pa = 0; pa < nodes_.size(); ++pa) {
            const Index ia = grid_.unflat(nodes_[pa]);
            for (std::size_t pb = pa + 1; pb < nodes_.size(); ++pb) {
                const Index ib = grid_.unflat(nodes_[pb]);
                if (ia[axis] != ib[axis]) continue;
                Index d{ib[0] - ia[0], ib[1] - ia[1], ib[2] - ia[2]};
                const int g = std::gcd(std::abs(d[0]), std::gcd(std::abs(d[1]), std::abs(d[2])));
                if (g <= 1) continue;
                for (int s = 1; s < g; ++s) {
                    Index m{ia[0] + s * d[0] / g, ia[1] + s * d[1] / g, ia[2] + s * d[2] / g};
                    if (!inside(m)) return false;
                }
            }
        }
        return true;
    }

private:
    explicit DomainMask(const UniformGrid& grid, MaskKind kind) : grid_(grid), kind_(kind) {}

    void finish() {
        nodes_.clear();
        for (std::size_t f = 0; f < grid_.size(); ++f)
            if (inside_[f]) nodes_.push_back(f);
    }

    UniformGrid grid_;
    MaskKind kind_;
    Point center_{0, 0, 0};
    double radius_ = 0.0;
    std::vector<std::uint8_t> inside_;
    std::vector<int> symmetry_axes_;
    std::vector<std::size_t> nodes_;
};

enum class ExteriorRule { Zero, Constant, RadialTable };

/// Scalar field sampled on a grid box, with an explicit rule for values beyond
/// the box. Radial tables are evaluated by linear interpolation in |x| and
/// clamped at the last sample.
class GridFunction {
public:
    explicit GridFunction(const UniformGrid& grid)
        : grid_(grid), values_(grid.size(), 0.0), rule_(ExteriorRule::Zero) {}

    GridFunction(const UniformGrid& grid, std::vector<double> values,
                 ExteriorRule rule = ExteriorRule::Zero, double constant = 0.0)
        : grid_(grid), values_(std::move(values)), rule_(rule), constant_(constant) {
        if (values_.size() != grid_.size())
            throw std::invalid_argument("GridFunction: value count does not match grid");
    }

    static GridFunction sample(const UniformGrid& grid, const std::function<double(const Point&)>& f,
                               ExteriorRule rule = ExteriorRule::Zero, double constant = 0.0) {
        GridFunction g(grid);
        g.rule_ = rule;
        g.constant_ = constant;
        for (std::size_t i = 0; i < grid.size(); ++i) g.values_[i] = f(grid.coord(i));
        return g;
    }

    const UniformGrid& grid() const { return grid_; }
    ExteriorRule exterior_rule() const { return rule_; }
    double exterior_constant() const { return rule_ == ExteriorRule::Constant ? constant_ : 0.0; }

    void set_exterior_constant(double c) {
        rule_ = ExteriorRule::Constant;
        constant_ = c;
    }
    void set_exterior_radial(std::vector<double> radii, std::vector<double> vals) {
        if (radii.size() != vals.size() || radii.size() < 2)
            throw std::invalid_argument("GridFunction: radial table needs >= 2 samples");
        rule_ = ExteriorRule::RadialTable;
        table_r_ = std::move(radii);
        table_v_ = std::move(vals);
    }

    double operator[](std::size_t f) const { return values_[f]; }
    double& operator[](std::size_t f) { return values_[f]; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    double at(const Index& i) const {
        if (grid_.contains(i)) return values_[grid_.flat(i)];
        return exterior_value(grid_.coord(i));
    }

    double exterior_value(const Point& p) const {
        switch (rule_) {
            case ExteriorRule::Zero: return 0.0;
            case ExteriorRule::Constant: return constant_;
            case ExteriorRule::RadialTable: {
                const double r = norm(p, grid_.dim());
                if (r <= table_r_.front()) return table_v_.front();
                if (r >= table_r_.back()) return table_v_.back();
                auto it = std::upper_bound(table_r_.begin(), table_r_.end(), r);
                const std::size_t k = static_cast<std::size_t>(it - table_r_.begin());
                const double t = (r - table_r_[k - 1]) / (table_r_[k] - table_r_[k - 1]);
                return table_v_[k - 1] + t * (table_v_[k] - table_v_[k - 1]);
            }
        }
        return 0.0;
    }

    bool all_finite() const {
        for (double v : values_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    double min_value() const {
        double m = std::numeric_limits<double>::infinity();
        for (double v : values_) m = std::min(m, v);
        return m;
    }

    /// Index-exact copy onto a containing grid with the same spacing; nodes of
    /// the target outside the source box take the source's exterior value.
    GridFunction embedded(const UniformGrid& target) const {
        if (target.dim() != grid_.dim() || target.spacing() != grid_.spacing())
            throw std::invalid_argument("GridFunction::embedded: incompatible grids");
        GridFunction out(target);
        out.rule_ = rule_;
        out.constant_ = constant_;
        out.table_r_ = table_r_;
        out.table_v_ = table_v_;
        for (std::size_t f = 0; f < target.size(); ++f) {
            const Index i = target.unflat(f);
            out.values_[f] = at(i);
        }
        return out;
    }

private:
    UniformGrid grid_;
    std::vector<double> values_;
    ExteriorRule rule_;
    double constant_ = 0.0;
    std::vector<double> table_r_, table_v_;
};

/// Nodes of the mask strictly beyond the plane {x_axis = lambda}; lambda must
/// be a half-grid multiple so the reflected set stays on the lattice.
inline std::vector<std::size_t> sigma_lambda(const DomainMask& mask, double lambda, int axis = 0) {
    const UniformGrid& g = mask.grid();
    if (axis < 0 || axis >= g.dim()) throw std::invalid_argument("sigma_lambda: axis out of range");
    const int ticks = g.plane_ticks(lambda);
    std::vector<std::size_t> out;
    for (std::size_t f : mask.nodes()) {
        const Index i = g.unflat(f);
        if (2 * i[axis] > ticks) out.push_back(f);
    }
    return out;
}

/// u_lambda(x) = u(x_lambda), evaluated without interpolation. Reflected nodes
/// that land outside the box are read through the exterior rule.
inline GridFunction reflect_function(const GridFunction& u, double lambda, int axis = 0) {
    const UniformGrid& g = u.grid();
    if (axis < 0 || axis >= g.dim()) throw std::invalid_argument("reflect_function: axis out of range");
    const int ticks = g.plane_ticks(lambda);
    GridFunction out(g);
    if (u.exterior_rule() == ExteriorRule::Constant) out.set_exterior_constant(u.exterior_constant());
    for (std::size_t f = 0; f < g.size(); ++f) {
        const Index i = g.unflat(f);
        out[f] = u.at(g.reflect_index(i, ticks, axis));
    }
    return out;
}

inline double region_measure(const std::vector<std::size_t>& nodes, const UniformGrid& grid) {
    return static_cast<double>(nodes.size()) * grid.cell_volume();
}

}  // namespace nlsym
