#pragma once
#include <sparsenl/certificates.hpp>
#include <sparsenl/estimators.hpp>
#include <sparsenl/rng.hpp>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sparsenl {

/// Bounded mean-zero inner noise xi with |xi| <= r.
struct XiDistribution
{
    enum class Kind {
        Uniform,           // uniform on [-r, r]
        Rademacher,        // +-r with equal probability
        TruncatedGaussian, // N(0, (r/2)^2) conditioned on [-r, r]
        PointMass,         // xi = 0
    };
    Kind kind = Kind::Uniform;
    double r = 0.1;

    bool discrete() const { return kind == Kind::Rademacher || kind == Kind::PointMass; }
    // E h(xi): adaptive quadrature for continuous kinds, exact average otherwise.
    double expectation(const std::function<double(double)>& h) const;
    std::vector<double> expectation(const std::function<std::vector<double>(double)>& h) const;
    double sample(Rng& rng) const;
};

std::string to_string(XiDistribution::Kind kind);
XiDistribution::Kind xi_kind_from_string(const std::string& name);

struct CorruptionSpec
{
    XiDistribution xi;
    double R = 1.0;              // I = [-R, R]
    double R0 = 2.0;             // f analytic on |z| < R0
    std::optional<double> sup_f; // sup of |f| over |z| <= R0

    void validate() const;
};

// Modulus bound of a built-in link on |z| <= R0 (boundary grid, padded).
double estimate_sup_f(const AnalyticLink& f, double R0);

/**
 * g(z) = E f(z + xi). Usable anywhere an AnalyticLink is expected through
 * link(); evaluation outside |z| < R0 - r throws DomainError.
 */
class SmoothedLink
{
public:
    SmoothedLink(AnalyticLink f, CorruptionSpec spec);

    double operator()(double z) const { return link_.value(z); }
    // Power series about 0 summed over the stored coefficients.
    double series_value(double z) const;
    // E f^{(k)}(xi) / k! for k = 0..K_max.
    const std::vector<double>& series() const { return *series_; }
    // Lower bound on d(g, I) transferred from f on [-R0, R0].
    double slope_bound() const { return slope_bound_; }
    double sup_f() const { return sup_f_; }
    std::string method() const { return spec_.xi.discrete() ? "exact-average" : "quadrature"; }

    const AnalyticLink& link() const { return link_; }
    const AnalyticLink& base() const { return f_; }
    const CorruptionSpec& spec() const { return spec_; }

private:
    AnalyticLink f_;
    CorruptionSpec spec_;
    AnalyticLink link_;
    std::shared_ptr<const std::vector<double>> series_;
    double slope_bound_ = 0.0;
    double sup_f_ = 0.0;
};

SmoothedLink smooth_link(const AnalyticLink& f, const CorruptionSpec& spec);

// slope_lower_bound(f, [-R0, R0]); 0 when f is not monotone there.
double slope_bound_transfer(const AnalyticLink& f, const CorruptionSpec& spec);

// sigma' = 2 max(sup_f, sigma), c' = 2 + c_eps. sup_f is taken from spec.sup_f,
// or from estimate_sup_f when that is empty.
NoiseSpec composed_tail(const NoiseSpec& noise, const CorruptionSpec& spec, const AnalyticLink& f);

// Bounded outer noise |eps_i| <= eps_halfwidth: delta_i lies in an interval
// of half-length sup_f + eps_halfwidth, so Hoeffding gives c' = 2.
NoiseSpec composed_tail_bounded(double eps_halfwidth, const CorruptionSpec& spec, const AnalyticLink& f);

struct InducedProblem
{
    EstimationProblem problem;
    NoiseSpec noise;
    SmoothedLink smoothed;
};

// LSE problem on g with the composed noise constants. The domain interval
// must lie inside [-R, R].
InducedProblem induce_problem(const AnalyticLink& f, const CorruptionSpec& spec, DesignMatrix X, Vector y,
                              DomainSpec domain, double c_r, const NoiseSpec& noise);

} // namespace sparsenl
