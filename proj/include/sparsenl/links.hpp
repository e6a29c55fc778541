#pragma once
#include <sparsenl/types.hpp>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sparsenl {

// A computed bound together with how it was obtained.
struct CertifiedValue
{
    double value = 0.0;
    double tolerance = 0.0; // slack already subtracted (lower bounds) or added (upper bounds)
    bool warning = false;
    std::string method;
};

struct CumulantValues
{
    double value; // Lambda(t)
    double d1;    // Lambda'(t), the mean
    double d2;    // Lambda''(t), the variance
};

/**
 * One-parameter exponential family p(y; t) = exp(t y - Lambda(t)) through its
 * cumulant function. Only the built-in families are supported; each carries
 * closed-form derivatives.
 */
class ExpFamilyLink
{
public:
    enum class Kind { Logistic, Gaussian, Poisson };

    static ExpFamilyLink logistic();
    static ExpFamilyLink gaussian();
    // Lambda'' = e^t is unbounded, so certificates need a finite interval.
    static ExpFamilyLink poisson(Interval valid = {});

    Kind kind() const { return kind_; }
    const Interval& valid_interval() const { return valid_; }
    std::string name() const;

    CumulantValues eval(double t) const;
    double lambda(double t) const { return eval(t).value; }
    double mean(double t) const { return eval(t).d1; }
    double variance(double t) const { return eval(t).d2; }

private:
    ExpFamilyLink(Kind kind, Interval valid) : kind_(kind), valid_(valid) {}
    Kind kind_;
    Interval valid_;
};

CumulantValues eval_cumulant(const ExpFamilyLink& link, double t);

// inf over I of Lambda''(t). Closed form for every built-in; an interval on
// which Lambda'' vanishes at infinity yields 0 with warning set.
CertifiedValue inf_lambda2(const ExpFamilyLink& link, const Interval& I);

/// Interface behind AnalyticLink. Implementations supply exact Taylor data
/// and modulus bounds; the generic certified bounds are built from those.
class AnalyticLinkImpl
{
public:
    virtual ~AnalyticLinkImpl() = default;

    virtual std::string name() const = 0;
    virtual double value(double x) const = 0;
    virtual double derivative(double x) const = 0;
    virtual double second_derivative(double x) const { return 2.0 * taylor(x, 2)[2]; }

    // f^{(k)}(x0) / k! for k = 0..K.
    virtual std::vector<double> taylor(double x0, int K) const = 0;

    // Upper bound on |f(z)| over the closed disc |z - center| <= rho.
    virtual double modulus_bound(double center, double rho) const = 0;

    // Radius of the largest open disc about each point of I on which f is analytic.
    virtual double uniform_radius(const Interval& I) const = 0;

    // Polynomial degree when f is a polynomial.
    virtual std::optional<int> degree() const { return std::nullopt; }

    // Real set on which value() may be called.
    virtual Interval real_domain() const { return {}; }

    // Certified lower bound on d(f, I) = inf_{x != y in I} |f(x) - f(y)| / |x - y|.
    virtual CertifiedValue slope_lower_bound(const Interval& I) const;

    // Certified upper bound on sup_{x in I} |f^{(k)}(x)| / k!.
    virtual double dk_bound(int k, const Interval& I) const;
};

/**
 * Analytic link f in y = f(X'beta) + eps. Value type; copies share the
 * immutable implementation.
 */
class AnalyticLink
{
public:
    static constexpr int kDefaultMaxOrder = 64;

    explicit AnalyticLink(std::shared_ptr<const AnalyticLinkImpl> impl, int max_order = kDefaultMaxOrder);

    static AnalyticLink identity();
    static AnalyticLink affine(double slope, double intercept);
    static AnalyticLink exp();
    // Coefficients in ascending order: f(x) = sum_k coeffs[k] x^k.
    static AnalyticLink polynomial(std::vector<double> coeffs);
    // f(x) = 1 / (1 + exp(-scale x)); poles at x = i pi (2m + 1) / scale.
    static AnalyticLink sigmoid(double scale = 1.0);

    std::string name() const { return impl_->name(); }
    double value(double x) const { return impl_->value(x); }
    double derivative(double x) const { return impl_->derivative(x); }
    double second_derivative(double x) const { return impl_->second_derivative(x); }
    std::vector<double> taylor(double x0, int K) const { return impl_->taylor(x0, K); }
    double modulus_bound(double center, double rho) const { return impl_->modulus_bound(center, rho); }
    double radius_about_zero() const { return impl_->uniform_radius({0.0, 0.0}); }
    double uniform_radius(const Interval& I) const { return impl_->uniform_radius(I); }
    std::optional<int> degree() const { return impl_->degree(); }
    Interval real_domain() const { return impl_->real_domain(); }
    int max_order() const { return max_order_; }
    AnalyticLink with_max_order(int K) const { return AnalyticLink(impl_, K); }

    // |f^{(k)}(0)| for k = 1..K.
    std::vector<double> taylor0(int K) const;

    const AnalyticLinkImpl& impl() const { return *impl_; }

private:
    std::shared_ptr<const AnalyticLinkImpl> impl_;
    int max_order_;
};

// Certified lower bound on d(f, I). Requires a finite I of positive length
// except for links whose slope is known in closed form.
CertifiedValue slope_lower_bound(const AnalyticLink& link, const Interval& I);

// d_k upper bounds for k = k_first..k_last. Throws when k_last exceeds the
// link's max_order.
std::vector<double> dk_bounds(const AnalyticLink& link, int k_first, int k_last, const Interval& I);

using LinkModel = std::variant<ExpFamilyLink, AnalyticLink>;

std::string link_name(const LinkModel& link);

} // namespace sparsenl
