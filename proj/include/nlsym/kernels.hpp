#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nlsym/geometry.hpp"

namespace nlsym {

enum class KernelVariant { RieszFractional, PiecewiseMu, GeneralDecreasing };

struct ConditionCReport {
    bool pass = true;
    double witness_r1 = 0.0;
    double witness_r2 = 0.0;
    std::string message;
};

inline double sphere_area(int dim) {
    switch (dim) {
        case 1: return 2.0;
        case 2: return 2.0 * M_PI;
        case 3: return 4.0 * M_PI;
    }
    throw std::invalid_argument("sphere_area: dim must be 1..3");
}

/// Symmetric nonnegative radial interaction kernel. All admissible variants
/// reduce to a piecewise power profile K(r) = coeff * r^expo on half-open
/// radial segments [a, b); the sampled theta profile of the general class is
/// interpolated log-linearly, which is a power law on each table interval
/// and extrapolated by the last slope beyond the table.
class KernelSpec {
public:
    struct Segment {
        double a, b;  // [a, b), b may be +inf
        double coeff, expo;
    };

    static KernelSpec riesz(int dim, double alpha) {
        check_alpha(alpha, "alpha");
        KernelSpec k(dim, KernelVariant::RieszFractional);
        k.alpha_ = alpha;
        k.segments_.push_back({0.0, inf(), 1.0, -dim - 2.0 * alpha});
        k.finish();
        return k;
    }

    static KernelSpec piecewise_mu(int dim, double mu, double alpha1, double alpha2) {
        check_alpha(alpha1, "alpha1");
        check_alpha(alpha2, "alpha2");
        if (!(mu >= 0.0 && mu <= 1.0)) throw std::invalid_argument("KernelSpec: mu must lie in [0,1]");
        KernelSpec k(dim, KernelVariant::PiecewiseMu);
        k.alpha_ = alpha1;
        k.mu_ = mu;
        k.alpha2_ = alpha2;
        k.segments_.push_back({0.0, 1.0, 1.0, -dim - 2.0 * alpha1});
        k.segments_.push_back({1.0, inf(), mu, -dim - 2.0 * alpha2});
        k.finish();
        return k;
    }

    static KernelSpec general_decreasing(int dim, double alpha, double r_junction,
                                         std::vector<double> radii, std::vector<double> theta) {
        check_alpha(alpha, "alpha");
        if (!(r_junction > 0.0)) throw std::invalid_argument("KernelSpec: junction radius must be positive");
        if (radii.size() != theta.size() || radii.size() < 2)
            throw std::invalid_argument("KernelSpec: theta table needs >= 2 samples");
        for (std::size_t i = 0; i < radii.size(); ++i) {
            if (!(theta[i] > 0.0))
                throw std::invalid_argument("KernelSpec: theta samples must be positive (log-linear interpolation)");
            if (i > 0 && !(radii[i] > radii[i - 1]))
                throw std::invalid_argument("KernelSpec: theta radii must be strictly increasing");
        }
        if (!(radii.front() <= r_junction * (1.0 + 1e-12)))
            throw std::invalid_argument("KernelSpec: theta table must start at or before the junction radius");
        KernelSpec k(dim, KernelVariant::GeneralDecreasing);
        k.alpha_ = alpha;
        k.r_junction_ = r_junction;
        k.table_r_ = radii;
        k.table_v_ = theta;
        k.segments_.push_back({0.0, r_junction, 1.0, -dim - 2.0 * alpha});
        // log-linear pieces: theta(r) = theta_i * (r/r_i)^{p_i}
        double cursor = r_junction;
        for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
            const double b = radii[i + 1];
            if (b <= cursor) continue;
            const double p = std::log(theta[i + 1] / theta[i]) / std::log(radii[i + 1] / radii[i]);
            const double coeff = theta[i] * std::pow(radii[i], -p);
            k.segments_.push_back({cursor, b, coeff, p});
            cursor = b;
        }
        {  // extrapolate the last slope beyond the table
            const std::size_t m = radii.size();
            const double p = std::log(theta[m - 1] / theta[m - 2]) / std::log(radii[m - 1] / radii[m - 2]);
            const double coeff = theta[m - 1] * std::pow(radii[m - 1], -p);
            k.segments_.push_back({cursor, inf(), coeff, p});
        }
        k.finish();
        return k;
    }

    int dim() const { return dim_; }
    KernelVariant variant() const { return variant_; }
    /// Exponent of the singular inner piece; controls scheme tolerances.
    double alpha() const { return alpha_; }
    /// Multiplier turning the raw principal-value integral against the kernel
    /// into the standard fractional Laplacian for the pure power case; the
    /// same constant (from the inner exponent) scales the other variants so
    /// that they coincide with it whenever the profiles coincide.
    double normalization() const {
        const double a = alpha_;
        return a * std::pow(4.0, a) * std::tgamma(0.5 * dim_ + a) /
               (std::pow(M_PI, 0.5 * dim_) * std::tgamma(1.0 - a));
    }
    double mu() const { return mu_; }
    double alpha2() const { return alpha2_; }
    double junction_radius() const { return r_junction_; }
    const std::vector<Segment>& segments() const { return segments_; }
    /// Radii where the assembled profile jumps in value or slope.
    const std::vector<double>& breakpoints() const { return breakpoints_; }

    double value_radial(double r) const {
        if (!(r > 0.0)) throw std::invalid_argument("kernel is singular at z = 0");
        const Segment& s = segment_at(r);
        return s.coeff * std::pow(r, s.expo);
    }

    double value(const Point& z) const { return value_radial(norm(z, dim_)); }

    /// G(rho) = integral over {|z| > rho} of K divided by the sphere area,
    /// i.e. the radial tail integral of K(r) r^{dim-1}.
    double tail_integral(double rho) const {
        if (!(rho > 0.0)) throw std::invalid_argument("tail_integral: rho must be positive");
        double total = 0.0;
        for (const Segment& s : segments_) {
            const double a = std::max(s.a, rho);
            if (a >= s.b) continue;
            total += power_integral(s.coeff, s.expo + dim_ - 1, a, s.b);
        }
        return total;
    }

    /// Integral of K(r) r^{dim-1} over [a, b].
    double mass_between(double a, double b) const { return weighted_between(a, b, dim_ - 1); }

    /// Integral of K(r) r^{dim+1} over [a, b]; finite down to a = 0.
    double radial_moment(double a, double b) const { return weighted_between(a, b, dim_ + 1); }

    /// Shape conditions of the general decreasing class: nonnegative theta,
    /// integrable tail, and a profile that never increases with the radius
    /// (checked across the junction and on a dense sample). Returns the first
    /// violating radius pair on failure.
    ConditionCReport validate_condition_C() const {
        if (variant_ != KernelVariant::GeneralDecreasing)
            throw std::invalid_argument("validate_condition_C: kernel is not of the general decreasing class");
        ConditionCReport rep;
        for (std::size_t i = 0; i < table_v_.size(); ++i) {
            if (table_v_[i] < 0.0) {
                rep.pass = false;
                rep.witness_r1 = rep.witness_r2 = table_r_[i];
                rep.message = "theta is negative";
                return rep;
            }
        }
        const Segment& last = segments_.back();
        if (!(last.expo + dim_ < 0.0)) {
            rep.pass = false;
            rep.witness_r1 = table_r_[table_r_.size() - 2];
            rep.witness_r2 = table_r_.back();
            rep.message = "theta tail decays too slowly to be integrable over the exterior";
            return rep;
        }
        // dense geometric sample across the junction and the whole table range
        std::vector<double> sample;
        const double r0 = r_junction_ / 4.0;
        const double r1 = table_r_.back() * 4.0;
        const int n = 512;
        for (int i = 0; i <= n; ++i) sample.push_back(r0 * std::pow(r1 / r0, static_cast<double>(i) / n));
        sample.push_back(std::nextafter(r_junction_, 0.0));
        sample.push_back(std::nextafter(r_junction_, inf()));
        for (double r : table_r_)
            if (r > r_junction_) sample.push_back(r);
        std::sort(sample.begin(), sample.end());
        double prev_r = sample.front();
        double prev_v = value_radial(prev_r);
        for (std::size_t i = 1; i < sample.size(); ++i) {
            const double r = sample[i];
            if (r <= prev_r) continue;
            const double v = value_radial(r);
            if (v > prev_v * (1.0 + 1e-12)) {
                rep.pass = false;
                rep.witness_r1 = prev_r;
                rep.witness_r2 = r;
                rep.message = "kernel increases between the witness radii";
                return rep;
            }
            prev_r = r;
            prev_v = v;
        }
        rep.message = "ok";
        return rep;
    }

    bool operator==(const KernelSpec& o) const {
        return dim_ == o.dim_ && variant_ == o.variant_ && alpha_ == o.alpha_ && mu_ == o.mu_ &&
               alpha2_ == o.alpha2_ && r_junction_ == o.r_junction_ && table_r_ == o.table_r_ &&
               table_v_ == o.table_v_;
    }

private:
    KernelSpec(int dim, KernelVariant v) : dim_(dim), variant_(v) {
        if (dim < 1 || dim > 3) throw std::invalid_argument("KernelSpec: dim must be 1..3");
    }

    static double inf() { return std::numeric_limits<double>::infinity(); }

    static void check_alpha(double a, const char* name) {
        if (!(a > 0.0 && a < 1.0))
            throw std::invalid_argument(std::string("KernelSpec: ") + name + " must lie in (0,1)");
    }

    const Segment& segment_at(double r) const {
        for (const Segment& s : segments_)
            if (r < s.b) return s;
        return segments_.back();
    }

    static double power_integral(double coeff, double q, double a, double b) {
        // integral of coeff * r^q over [a, b], b possibly +inf
        if (coeff == 0.0) return 0.0;
        if (std::isinf(b)) {
            if (!(q < -1.0)) throw std::domain_error("kernel tail integral diverges");
            return -coeff * std::pow(a, q + 1.0) / (q + 1.0);
        }
        if (std::abs(q + 1.0) < 1e-12) return coeff * std::log(b / a);
        return coeff * (std::pow(b, q + 1.0) - std::pow(a, q + 1.0)) / (q + 1.0);
    }

    double weighted_between(double a, double b, int power) const {
        if (!(b >= a && a >= 0.0)) throw std::invalid_argument("KernelSpec: bad radial interval");
        double total = 0.0;
        for (const Segment& s : segments_) {
            const double lo = std::max(s.a, a);
            const double hi = std::min(s.b, b);
            if (lo >= hi) continue;
            total += power_integral(s.coeff, s.expo + power, lo, hi);
        }
        return total;
    }

    void finish() {
        // merge analytically identical neighbours so that e.g. mu = 1 with
        // equal exponents is indistinguishable from the pure fractional kernel
        std::vector<Segment> merged;
        for (const Segment& s : segments_) {
            if (!merged.empty() && merged.back().coeff == s.coeff && merged.back().expo == s.expo &&
                merged.back().b == s.a) {
                merged.back().b = s.b;
            } else {
                merged.push_back(s);
            }
        }
        segments_ = std::move(merged);
        breakpoints_.clear();
        for (std::size_t i = 0; i + 1 < segments_.size(); ++i) breakpoints_.push_back(segments_[i].b);
    }

    int dim_;
    KernelVariant variant_;
    double alpha_ = 0.0, mu_ = 1.0, alpha2_ = 0.0, r_junction_ = 0.0;
    std::vector<double> table_r_, table_v_;
    std::vector<Segment> segments_;
    std::vector<double> breakpoints_;
};

inline double eval_kernel(const KernelSpec& k, const Point& z) { return k.value(z); }

/// Two-column plain-text table (radius, value); '#' comments allowed.
inline void load_theta_table(const std::string& path, std::vector<double>& radii,
                             std::vector<double>& values) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open theta table: " + path);
    radii.clear();
    values.clear();
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        double r, v;
        if (ss >> r >> v) {
            if (!radii.empty() && r <= radii.back())
                throw std::invalid_argument("theta table radii must be strictly increasing: " + path);
            radii.push_back(r);
            values.push_back(v);
        }
    }
    if (radii.size() < 2) throw std::invalid_argument("theta table needs at least two rows: " + path);
}

}  // namespace nlsym
