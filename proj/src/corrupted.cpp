#include <sparsenl/corrupted.hpp>
#include <sparsenl/error.hpp>
#include <sparsenl/quadrature.hpp>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace sparsenl {

namespace {

constexpr double kQuadTol = 1e-10;

// Density of N(0, (r/2)^2) restricted to [-r, r], normalized.
double truncated_gaussian_density(double x, double r)
{
    const double sd = 0.5 * r;
    const double z = std::erf(std::sqrt(2.0));
    return std::exp(-0.5 * (x / sd) * (x / sd)) / (sd * std::sqrt(2.0 * std::numbers::pi) * z);
}

} // namespace

std::string to_string(XiDistribution::Kind kind)
{
    switch (kind) {
    case XiDistribution::Kind::Uniform: return "uniform";
    case XiDistribution::Kind::Rademacher: return "rademacher";
    case XiDistribution::Kind::TruncatedGaussian: return "truncated-gaussian";
    case XiDistribution::Kind::PointMass: return "point-mass";
    }
    return "?";
}

XiDistribution::Kind xi_kind_from_string(const std::string& name)
{
    if (name == "uniform") return XiDistribution::Kind::Uniform;
    if (name == "rademacher" || name == "scaled-rademacher") return XiDistribution::Kind::Rademacher;
    if (name == "truncated-gaussian") return XiDistribution::Kind::TruncatedGaussian;
    if (name == "point-mass") return XiDistribution::Kind::PointMass;
    throw ValidationError("unknown xi distribution '" + name + "'");
}

double XiDistribution::expectation(const std::function<double(double)>& h) const
{
    switch (kind) {
    case Kind::PointMass: return h(0.0);
    case Kind::Rademacher: return 0.5 * (h(-r) + h(r));
    case Kind::Uniform:
        return quadrature::integrate([&](double x) { return h(x); }, -r, r, kQuadTol * 2.0 * r) / (2.0 * r);
    case Kind::TruncatedGaussian:
        return quadrature::integrate([&](double x) { return h(x) * truncated_gaussian_density(x, r); }, -r, r,
                                     kQuadTol);
    }
    return 0.0;
}

std::vector<double> XiDistribution::expectation(const std::function<std::vector<double>(double)>& h) const
{
    auto scaled = [](std::vector<double> v, double w) {
        for (double& x : v) x *= w;
        return v;
    };
    switch (kind) {
    case Kind::PointMass: return h(0.0);
    case Kind::Rademacher: {
        auto a = h(-r);
        const auto b = h(r);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = 0.5 * (a[i] + b[i]);
        return a;
    }
    case Kind::Uniform:
        return scaled(quadrature::integrate_vector(h, -r, r, kQuadTol * 2.0 * r), 1.0 / (2.0 * r));
    case Kind::TruncatedGaussian:
        return quadrature::integrate_vector(
            [&](double x) { return scaled(h(x), truncated_gaussian_density(x, r)); }, -r, r, kQuadTol);
    }
    return {};
}

double XiDistribution::sample(Rng& rng) const
{
    switch (kind) {
    case Kind::PointMass: return 0.0;
    case Kind::Rademacher: return r * rng.sign();
    case Kind::Uniform: return rng.uniform(-r, r);
    case Kind::TruncatedGaussian:
        while (true) {
            const double x = 0.5 * r * rng.normal();
            if (std::abs(x) <= r) return x;
        }
    }
    return 0.0;
}

void CorruptionSpec::validate() const
{
    if (!(xi.r > 0.0) || !std::isfinite(xi.r)) throw ValidationError("corruption: r must be positive");
    if (!(R > 0.0) || !std::isfinite(R)) throw ValidationError("corruption: R must be positive");
    if (!(R0 > R + xi.r)) throw ValidationError("corruption: R0 must exceed R + r");
    if (sup_f && !(*sup_f > 0.0)) throw ValidationError("corruption: sup_f must be positive");
}

double estimate_sup_f(const AnalyticLink& f, double R0)
{
    const double m = f.modulus_bound(0.0, R0);
    if (!std::isfinite(m)) {
        throw ValidationError("sup_f: " + f.name() + " is not bounded on |z| <= " + std::to_string(R0) +
                              "; declare sup_f explicitly or lower R0");
    }
    return m;
}

namespace {

class SmoothedImpl final : public AnalyticLinkImpl
{
public:
    SmoothedImpl(AnalyticLink f, CorruptionSpec spec) : f_(std::move(f)), spec_(std::move(spec)) {}

    std::string name() const override { return "smoothed(" + f_.name() + ")"; }

    double value(double z) const override
    {
        check(z);
        return spec_.xi.expectation([&](double x) { return f_.value(z + x); });
    }
    double derivative(double z) const override
    {
        check(z);
        return spec_.xi.expectation([&](double x) { return f_.derivative(z + x); });
    }
    double second_derivative(double z) const override
    {
        check(z);
        return spec_.xi.expectation([&](double x) { return f_.second_derivative(z + x); });
    }
    std::vector<double> taylor(double x0, int K) const override
    {
        // Taylor coefficients of g at x0 are E f^{(k)}(x0 + xi) / k!.
        return spec_.xi.expectation([&](double x) { return f_.taylor(x0 + x, K); });
    }
    double modulus_bound(double center, double rho) const override
    {
        return f_.modulus_bound(center, rho + spec_.xi.r);
    }
    double uniform_radius(const Interval& I) const override
    {
        const Interval widened{I.lo - spec_.xi.r, I.hi + spec_.xi.r};
        return std::max(0.0, f_.uniform_radius(widened) - spec_.xi.r);
    }
    std::optional<int> degree() const override { return f_.degree(); }
    Interval real_domain() const override
    {
        const double h = spec_.R0 - spec_.xi.r;
        return {-h, h};
    }
    CertifiedValue slope_lower_bound(const Interval&) const override
    {
        auto out = sparsenl::slope_lower_bound(f_, {-spec_.R0, spec_.R0});
        out.method = "transfer:" + out.method;
        return out;
    }
    double dk_bound(int k, const Interval& I) const override
    {
        return f_.impl().dk_bound(k, {I.lo - spec_.xi.r, I.hi + spec_.xi.r});
    }

private:
    void check(double z) const
    {
        if (!(std::abs(z) < spec_.R0 - spec_.xi.r)) {
            throw DomainError("smoothed link: |z| = " + std::to_string(std::abs(z)) + " >= R0 - r");
        }
    }

    AnalyticLink f_;
    CorruptionSpec spec_;
};

} // namespace

SmoothedLink::SmoothedLink(AnalyticLink f, CorruptionSpec spec)
    : f_(std::move(f)), spec_(std::move(spec)),
      link_(std::make_shared<SmoothedImpl>(f_, spec_), f_.max_order())
{
    spec_.validate();
    series_ = std::make_shared<const std::vector<double>>(link_.taylor(0.0, f_.max_order()));
    slope_bound_ = slope_bound_transfer(f_, spec_);
    sup_f_ = spec_.sup_f ? *spec_.sup_f : estimate_sup_f(f_, spec_.R0);
}

double SmoothedLink::series_value(double z) const
{
    if (!(std::abs(z) < spec_.R0 - spec_.xi.r)) throw DomainError("smoothed link: |z| >= R0 - r");
    double acc = 0.0;
    const auto& c = *series_;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * z + *it;
    return acc;
}

SmoothedLink smooth_link(const AnalyticLink& f, const CorruptionSpec& spec) { return SmoothedLink(f, spec); }

double slope_bound_transfer(const AnalyticLink& f, const CorruptionSpec& spec)
{
    spec.validate();
    return slope_lower_bound(f, {-spec.R0, spec.R0}).value;
}

NoiseSpec composed_tail(const NoiseSpec& noise, const CorruptionSpec& spec, const AnalyticLink& f)
{
    spec.validate();
    const double sup_f = spec.sup_f ? *spec.sup_f : estimate_sup_f(f, spec.R0);
    NoiseSpec out = noise;
    out.sigma = 2.0 * std::max(sup_f, noise.sigma);
    out.c_eps = 2.0 + noise.c_eps;
    return out;
}

NoiseSpec composed_tail_bounded(double eps_halfwidth, const CorruptionSpec& spec, const AnalyticLink& f)
{
    spec.validate();
    if (!(eps_halfwidth >= 0.0)) throw ValidationError("composed tail: eps half-width must be >= 0");
    const double sup_f = spec.sup_f ? *spec.sup_f : estimate_sup_f(f, spec.R0);
    NoiseSpec out;
    out.sigma = sup_f + eps_halfwidth;
    out.c_eps = 2.0;
    return out;
}

InducedProblem induce_problem(const AnalyticLink& f, const CorruptionSpec& spec, DesignMatrix X, Vector y,
                              DomainSpec domain, double c_r, const NoiseSpec& noise)
{
    spec.validate();
    if (!domain.interval.subset_of({-spec.R, spec.R})) {
        throw ValidationError("induce_problem: domain interval must lie inside [-R, R]");
    }
    SmoothedLink g(f, spec);
    EstimationProblem prob{
        .X = std::move(X),
        .y = std::move(y),
        .link = g.link(),
        .domain = std::move(domain),
        .c_r = c_r,
        .kind = ProblemKind::Lse,
    };
    prob.validate();
    return InducedProblem{std::move(prob), composed_tail(noise, spec, f), std::move(g)};
}

} // namespace sparsenl
