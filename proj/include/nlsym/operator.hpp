#pragma once

#include <fftw3.h>

#include <complex>
#include <memory>
#include <vector>

#include "nlsym/geometry.hpp"
#include "nlsym/kernels.hpp"
#include "nlsym/pvquad.hpp"
#include "nlsym/quadrature.hpp"

namespace nlsym {

struct AssembleOptions {
    double cell_rel_tol = 1e-12;   // per-cell relative quadrature target
    std::size_t fft_threshold = 4096;  // box sizes at or above this use the spectral apply
    bool force_direct = false;
};

namespace detail {

inline int next_fast_size(int n) {
    for (;; ++n) {
        int m = n;
        for (int p : {2, 3, 5, 7})
            while (m % p == 0) m /= p;
        if (m == 1) return n;
    }
}

struct FftwDeleter {
    void operator()(void* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<std::complex<double>[], FftwDeleter>;

inline FftwBuffer fftw_buffer(std::size_t n) {
    auto* p = static_cast<std::complex<double>*>(fftw_malloc(sizeof(std::complex<double>) * n));
    return FftwBuffer(p);
}

}  // namespace detail

/// Quadrature-weight realization of Lu(x) = P.V. integral of (u(x)-u(y))K(x-y) dy
/// on a uniform grid with an exterior rule, in symmetric second-difference form:
///
///   (Lu)(x_i) = sum_k W_k (u_i - u_{i+k}) + sum_d s_d/(2h^2) (2u_i - u_{i+e_d} - u_{i-e_d})
///               + T (u_i - exterior constant)
///
/// W_k is the kernel integrated over the lattice cell at offset k*h (so W is
/// even in every axis and non-increasing under axis shifts away from zero for
/// admissible kernels), T is the kernel mass beyond the window box, and s_d is
/// the singular-cell moment plus the window second-moment defect, which makes
/// the scheme exact on quadratics over the window. All stored quantities carry
/// the kernel normalization.
class DiscreteNonlocalOperator {
public:
    static DiscreteNonlocalOperator assemble(const UniformGrid& grid, const DomainMask& mask,
                                             const KernelSpec& kernel, AssembleOptions opts = {}) {
        if (mask.grid() != grid) throw std::invalid_argument("assemble: mask grid mismatch");
        if (kernel.dim() != grid.dim()) throw std::invalid_argument("assemble: kernel dimension mismatch");
        if (mask.node_count() == 0) throw std::invalid_argument("assemble: empty mask");
        if (kernel.variant() == KernelVariant::GeneralDecreasing) {
            const ConditionCReport rep = kernel.validate_condition_C();
            if (!rep.pass)
                throw std::invalid_argument("assemble: kernel fails the decreasing-class conditions: " +
                                            rep.message);
        }
        DiscreteNonlocalOperator op(grid, mask, kernel, opts);
        op.build();
        return op;
    }

    const UniformGrid& grid() const { return grid_; }
    const DomainMask& mask() const { return mask_; }
    const KernelSpec& kernel() const { return kernel_; }
    double cell_rel_tol() const { return opts_.cell_rel_tol; }

    int window_extent(int d) const { return wn_[d]; }
    /// Cell-integrated kernel weight at lattice offset k (normalized); zero offset gives 0.
    double weight(const Index& k) const {
        for (int d = 0; d < grid_.dim(); ++d)
            if (std::abs(k[d]) > wn_[d]) return 0.0;
        return w_[windex(k)];
    }
    /// Singular-cell correction coefficient for the given axis.
    double singular_correction(int d) const { return s_[d]; }
    double window_tail() const { return tail_; }
    double diagonal() const { return diag_; }

    /// Weight including the nearest-neighbour share of the singular correction.
    double effective_weight(const Index& k) const {
        double w = weight(k);
        int nz = -1, count = 0;
        for (int d = 0; d < grid_.dim(); ++d)
            if (k[d] != 0) {
                nz = d;
                ++count;
            }
        if (count == 1 && std::abs(k[nz]) == 1) w += 0.5 * s_[nz] / (h_ * h_);
        return w;
    }

    /// Lu on the mask nodes (other nodes of the result are zero). Input values
    /// are read on the whole grid box; beyond it the exterior rule applies
    /// (Zero or Constant).
    GridFunction apply(const GridFunction& u) const {
        check_input(u);
        GridFunction out(grid_);
        std::vector<double> shifted = exterior_reduced(u);
        if (use_fft_) {
            std::vector<double> conv = correlate_fft(shifted);
            for (std::size_t f : mask_.nodes()) out[f] = diag_ * shifted[f] - conv[f];
        } else {
            for (std::size_t f : mask_.nodes()) out[f] = apply_node(shifted, grid_.unflat(f));
        }
        return out;
    }

    /// Lu at selected box nodes by direct summation (sign-grouped, so the
    /// result commutes bitwise with axis reflections on symmetric data).
    std::vector<double> apply_at(const GridFunction& u, const std::vector<std::size_t>& nodes) const {
        check_input(u);
        std::vector<double> shifted = exterior_reduced(u);
        std::vector<double> out(nodes.size());
        for (std::size_t i = 0; i < nodes.size(); ++i) out[i] = apply_node(shifted, grid_.unflat(nodes[i]));
        return out;
    }

    /// Dense matrix over (mask rows) x (box columns); assembled on demand for
    /// cross-checks against the translation-invariant paths.
    std::vector<double> dense_matrix() const {
        const std::size_t nb = grid_.size();
        if (nb > 20000) throw std::invalid_argument("dense_matrix: grid too large for dense storage");
        const std::vector<std::size_t>& rows = mask_.nodes();
        std::vector<double> a(rows.size() * nb, 0.0);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const Index i = grid_.unflat(rows[r]);
            double* row = a.data() + r * nb;
            for (std::size_t c = 0; c < nb; ++c) {
                const Index j = grid_.unflat(c);
                if (c == rows[r]) {
                    row[c] = diag_;
                    continue;
                }
                Index k{j[0] - i[0], j[1] - i[1], j[2] - i[2]};
                row[c] = -effective_weight(k);
            }
        }
        return a;
    }

    const std::vector<double>& window_weights() const { return w_; }
    std::array<int, 3> window_dims() const {
        std::array<int, 3> d{1, 1, 1};
        for (int a = 0; a < grid_.dim(); ++a) d[a] = 2 * wn_[a] + 1;
        return d;
    }

    DiscreteNonlocalOperator(DiscreteNonlocalOperator&&) = default;
    DiscreteNonlocalOperator& operator=(DiscreteNonlocalOperator&&) = default;

private:
    DiscreteNonlocalOperator(const UniformGrid& grid, const DomainMask& mask, const KernelSpec& kernel,
                             AssembleOptions opts)
        : grid_(grid), mask_(mask), kernel_(kernel), opts_(opts), h_(grid.spacing()) {}

    std::size_t windex(const Index& k) const {
        std::size_t f = 0;
        for (int d = 0; d < grid_.dim(); ++d) f = f * (2 * wn_[d] + 1) + (k[d] + wn_[d]);
        return f;
    }

    void check_input(const GridFunction& u) const {
        if (u.grid() != grid_) throw std::invalid_argument("apply: grid mismatch");
        if (u.exterior_rule() == ExteriorRule::RadialTable)
            throw std::invalid_argument("apply: radial-table exterior rules are not representable by "
                                        "the assembled tail; use Zero or Constant");
    }

    // subtracting the exterior constant reduces every apply to the Zero case
    std::vector<double> exterior_reduced(const GridFunction& u) const {
        std::vector<double> v = u.values();
        if (u.exterior_rule() == ExteriorRule::Constant) {
            const double c = u.exterior_constant();
            for (double& x : v) x -= c;
        }
        return v;
    }

    double value_or_zero(const std::vector<double>& v, const Index& i) const {
        if (!grid_.contains(i)) return 0.0;
        return v[grid_.flat(i)];
    }

    // sign-grouped direct sum: members of each sign class are combined with a
    // fixed nested parenthesization, one level per axis, so axis reflections
    // permute operands only across commutative additions
    double apply_node(const std::vector<double>& v, const Index& i) const {
        const int dim = grid_.dim();
        const double self = v[grid_.flat(i)];
        double acc = 0.0;
        Index k{0, 0, 0};
        const auto group_value = [&](const Index& kk) {
            double g0 = value_or_zero(v, Index{i[0] + kk[0], i[1] + kk[1], i[2] + kk[2]});
            if (kk[0] != 0) {
                g0 += value_or_zero(v, Index{i[0] - kk[0], i[1] + kk[1], i[2] + kk[2]});
                if (dim > 1 && kk[1] != 0) {
                    double g1 = value_or_zero(v, Index{i[0] + kk[0], i[1] - kk[1], i[2] + kk[2]}) +
                                value_or_zero(v, Index{i[0] - kk[0], i[1] - kk[1], i[2] + kk[2]});
                    g0 += g1;
                }
            } else if (dim > 1 && kk[1] != 0) {
                g0 += value_or_zero(v, Index{i[0], i[1] - kk[1], i[2] + kk[2]});
            }
            return g0;
        };
        for (k[0] = 0; k[0] <= wn_[0]; ++k[0]) {
            for (k[1] = 0; k[1] <= (dim > 1 ? wn_[1] : 0); ++k[1]) {
                for (k[2] = 0; k[2] <= (dim > 2 ? wn_[2] : 0); ++k[2]) {
                    if (k[0] == 0 && k[1] == 0 && k[2] == 0) continue;
                    const double w = w_[windex(k)];
                    if (dim > 2 && k[2] != 0) {
                        const double gp = group_value(Index{k[0], k[1], k[2]});
                        const double gm = group_value(Index{k[0], k[1], -k[2]});
                        acc += w * (gp + gm);
                    } else {
                        acc += w * group_value(k);
                    }
                }
            }
        }
        // nearest-neighbour singular correction, grouped the same way
        double corr = 0.0;
        for (int d = 0; d < dim; ++d) {
            Index p = i, m = i;
            p[d] += 1;
            m[d] -= 1;
            corr += (0.5 * s_[d] / (h_ * h_)) * (value_or_zero(v, p) + value_or_zero(v, m));
        }
        return diag_ * self - acc - corr;
    }

    std::vector<double> correlate_fft(const std::vector<double>& v) const {
        const int dim = grid_.dim();
        std::size_t ptotal = 1;
        for (int d = 0; d < dim; ++d) ptotal *= static_cast<std::size_t>(pad_[d]);
        detail::FftwBuffer buf = detail::fftw_buffer(ptotal);
        std::fill(buf.get(), buf.get() + ptotal, std::complex<double>(0.0, 0.0));
        // scatter box values into the padded array
        for (std::size_t f = 0; f < grid_.size(); ++f) {
            const Index i = grid_.unflat(f);
            std::size_t p = 0;
            for (int d = 0; d < dim; ++d) p = p * pad_[d] + static_cast<std::size_t>(i[d] - grid_.lo(d));
            buf[p] = v[f];
        }
        fftw_execute_dft(fwd_plan_.get(), reinterpret_cast<fftw_complex*>(buf.get()),
                         reinterpret_cast<fftw_complex*>(buf.get()));
        for (std::size_t p = 0; p < ptotal; ++p) buf[p] *= spectrum_[p];
        fftw_execute_dft(bwd_plan_.get(), reinterpret_cast<fftw_complex*>(buf.get()),
                         reinterpret_cast<fftw_complex*>(buf.get()));
        const double inv = 1.0 / static_cast<double>(ptotal);
        std::vector<double> out(grid_.size());
        for (std::size_t f = 0; f < grid_.size(); ++f) {
            const Index i = grid_.unflat(f);
            std::size_t p = 0;
            for (int d = 0; d < dim; ++d) p = p * pad_[d] + static_cast<std::size_t>(i[d] - grid_.lo(d));
            out[f] = buf[p].real() * inv;
        }
        return out;
    }

    void build() {
        const int dim = grid_.dim();
        for (int d = 0; d < 3; ++d) wn_[d] = 0;
        std::size_t wtotal = 1;
        for (int d = 0; d < dim; ++d) {
            wn_[d] = grid_.extent(d) - 1;
            wtotal *= static_cast<std::size_t>(2 * wn_[d] + 1);
        }
        w_.assign(wtotal, 0.0);
        const double norm = kernel_.normalization();
        const std::vector<double>& interfaces = kernel_.breakpoints();

        std::array<double, 3> defect{0.0, 0.0, 0.0};
        double wsum = 0.0;
        Index k{0, 0, 0};
        for (k[0] = 0; k[0] <= wn_[0]; ++k[0]) {
            for (k[1] = 0; k[1] <= (dim > 1 ? wn_[1] : 0); ++k[1]) {
                for (k[2] = 0; k[2] <= (dim > 2 ? wn_[2] : 0); ++k[2]) {
                    if (k[0] == 0 && k[1] == 0 && k[2] == 0) continue;
                    Point lo{0, 0, 0}, hi{0, 0, 0};
                    for (int d = 0; d < dim; ++d) {
                        lo[d] = (k[d] - 0.5) * h_;
                        hi[d] = (k[d] + 0.5) * h_;
                    }
                    const quad::Vec4 cell =
                        quad::kernel_cell_moments(kernel_, lo, hi, opts_.cell_rel_tol);
                    const double w = norm * cell[0];
                    if (!(w >= 0.0))
                        throw std::domain_error("assemble: negative cell weight from quadrature");
                    // multiplicity from mirroring the canonical octant
                    int mult = 1;
                    for (int d = 0; d < dim; ++d)
                        if (k[d] != 0) mult *= 2;
                    wsum += mult * w;
                    for (int d = 0; d < dim; ++d) {
                        const double moment = norm * cell[1 + d];
                        defect[d] += mult * (moment - (k[d] * h_) * (k[d] * h_) * w);
                    }
                    // scatter to all sign combinations
                    Index sk{0, 0, 0};
                    for (int s0 : {1, -1}) {
                        if (s0 < 0 && k[0] == 0) continue;
                        for (int s1 : {1, -1}) {
                            if (s1 < 0 && (dim < 2 || k[1] == 0)) continue;
                            for (int s2 : {1, -1}) {
                                if (s2 < 0 && (dim < 3 || k[2] == 0)) continue;
                                sk = Index{s0 * k[0], s1 * k[1], s2 * k[2]};
                                w_[windex(sk)] = w;
                            }
                        }
                    }
                }
            }
        }
        wsum_ = wsum;

        // singular cell: analytic inscribed-ball moment plus the cube corners
        const double rho = 0.5 * h_;
        const double ball_axis_moment = sphere_area(dim) * kernel_.radial_moment(0.0, rho) / dim;
        std::array<double, 3> s0{0.0, 0.0, 0.0};
        for (int d = 0; d < dim; ++d) s0[d] = norm * ball_axis_moment;
        if (dim > 1) {
            Point lo{0, 0, 0}, hi{0, 0, 0};
            for (int d = 0; d < dim; ++d) {
                lo[d] = -rho;
                hi[d] = rho;
            }
            const quad::Vec4 corner = quad::kernel_cell_moments(kernel_, lo, hi, 1e-11, rho);
            for (int d = 0; d < dim; ++d) s0[d] += norm * corner[1 + d];
        }
        (void)interfaces;
        for (int d = 0; d < dim; ++d) s_[d] = s0[d] + defect[d];

        // monotone structure: the folded nearest-neighbour weight stays nonnegative
        for (int d = 0; d < dim; ++d) {
            Index e{0, 0, 0};
            e[d] = 1;
            if (w_[windex(e)] + 0.5 * s_[d] / (h_ * h_) < 0.0)
                throw std::domain_error("assemble: singular-cell correction breaks monotonicity");
        }

        {
            Point halfwidth{0, 0, 0};
            for (int d = 0; d < dim; ++d) halfwidth[d] = (wn_[d] + 0.5) * h_;
            tail_ = norm * quad::centered_box_exterior_mass(kernel_, halfwidth, 1e-10);
        }

        diag_ = wsum_ + tail_;
        for (int d = 0; d < dim; ++d) diag_ += s_[d] / (h_ * h_);

        use_fft_ = !opts_.force_direct && grid_.size() >= opts_.fft_threshold;
        if (use_fft_) prepare_fft();
    }

    void prepare_fft() {
        const int dim = grid_.dim();
        std::size_t ptotal = 1;
        int pdims[3] = {1, 1, 1};
        for (int d = 0; d < dim; ++d) {
            pad_[d] = detail::next_fast_size(2 * grid_.extent(d) - 1);
            pdims[d] = pad_[d];
            ptotal *= static_cast<std::size_t>(pad_[d]);
        }
        detail::FftwBuffer buf = detail::fftw_buffer(ptotal);
        {
            fftw_complex* raw = reinterpret_cast<fftw_complex*>(buf.get());
            fwd_plan_.reset(fftw_plan_dft(dim, pdims, raw, raw, FFTW_FORWARD, FFTW_ESTIMATE));
            bwd_plan_.reset(fftw_plan_dft(dim, pdims, raw, raw, FFTW_BACKWARD, FFTW_ESTIMATE));
        }
        std::fill(buf.get(), buf.get() + ptotal, std::complex<double>(0.0, 0.0));
        // effective weights (with the nearest-neighbour correction folded in)
        Index k{0, 0, 0};
        const int dim_ = grid_.dim();
        std::array<int, 3> klo{-wn_[0], dim_ > 1 ? -wn_[1] : 0, dim_ > 2 ? -wn_[2] : 0};
        std::array<int, 3> khi{wn_[0], dim_ > 1 ? wn_[1] : 0, dim_ > 2 ? wn_[2] : 0};
        for (k[0] = klo[0]; k[0] <= khi[0]; ++k[0]) {
            for (k[1] = klo[1]; k[1] <= khi[1]; ++k[1]) {
                for (k[2] = klo[2]; k[2] <= khi[2]; ++k[2]) {
                    if (k[0] == 0 && k[1] == 0 && k[2] == 0) continue;
                    const double w = effective_weight(k);
                    if (w == 0.0) continue;
                    std::size_t p = 0;
                    for (int d = 0; d < dim_; ++d) {
                        const int m = k[d] >= 0 ? k[d] : k[d] + pad_[d];
                        p = p * pad_[d] + static_cast<std::size_t>(m);
                    }
                    buf[p] = w;
                }
            }
        }
        fftw_execute_dft(fwd_plan_.get(), reinterpret_cast<fftw_complex*>(buf.get()),
                         reinterpret_cast<fftw_complex*>(buf.get()));
        spectrum_.assign(buf.get(), buf.get() + ptotal);
    }

    struct PlanDeleter {
        void operator()(fftw_plan_s* p) const {
            if (p) fftw_destroy_plan(p);
        }
    };

    UniformGrid grid_;
    DomainMask mask_;
    KernelSpec kernel_;
    AssembleOptions opts_;
    double h_;
    std::array<int, 3> wn_{0, 0, 0};
    std::vector<double> w_;
    std::array<double, 3> s_{0, 0, 0};
    double tail_ = 0.0;
    double diag_ = 0.0;
    double wsum_ = 0.0;
    bool use_fft_ = false;
    std::array<int, 3> pad_{1, 1, 1};
    std::vector<std::complex<double>> spectrum_;
    std::unique_ptr<fftw_plan_s, PlanDeleter> fwd_plan_;
    std::unique_ptr<fftw_plan_s, PlanDeleter> bwd_plan_;
};

struct ConvergenceProbeResult {
    std::vector<double> h;
    std::vector<double> error;
    double order = 0.0;  // least-squares slope of log(error) against log(h)
};

/// Error of the assembled operator against the reference PV quadrature on a
/// sequence of grids; the profile is sampled on a symmetric box of the given
/// half-width with zero exterior.
inline ConvergenceProbeResult convergence_probe(const KernelSpec& kernel, const ReferenceProfile& profile,
                                                const std::vector<double>& h_list, double halfwidth,
                                                const std::vector<Point>& eval_points,
                                                double reference_tol = 1e-10) {
    if (h_list.size() < 3)
        throw std::invalid_argument("convergence_probe: need at least three grid levels");
    std::vector<double> ref(eval_points.size());
    for (std::size_t i = 0; i < eval_points.size(); ++i)
        ref[i] = pv_operator_value(kernel, profile, eval_points[i], reference_tol);

    ConvergenceProbeResult res;
    for (double h : h_list) {
        const UniformGrid grid =
            UniformGrid::symmetric(kernel.dim(), h, {halfwidth, halfwidth, halfwidth});
        const DomainMask all = DomainMask::box(
            grid, make_point(-halfwidth - h, -halfwidth - h, -halfwidth - h),
            make_point(halfwidth + h, halfwidth + h, halfwidth + h));
        const DiscreteNonlocalOperator op = DiscreteNonlocalOperator::assemble(grid, all, kernel);
        GridFunction u = GridFunction::sample(grid, profile.value);
        std::vector<std::size_t> nodes;
        for (const Point& p : eval_points) nodes.push_back(grid.flat(grid.snap(p)));
        const std::vector<double> got = op.apply_at(u, nodes);
        double err = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) err = std::max(err, std::abs(got[i] - ref[i]));
        res.h.push_back(h);
        res.error.push_back(err);
    }
    // least-squares slope
    const std::size_t n = res.h.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::log(res.h[i]);
        const double y = std::log(std::max(res.error[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    res.order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return res;
}

}  // namespace nlsym
