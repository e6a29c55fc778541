#include <sparsenl/links.hpp>
#include <sparsenl/error.hpp>
#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace sparsenl {

// ---------------------------------------------------------------------------
// Exponential family

ExpFamilyLink ExpFamilyLink::logistic() { return {Kind::Logistic, {}}; }
ExpFamilyLink ExpFamilyLink::gaussian() { return {Kind::Gaussian, {}}; }

ExpFamilyLink ExpFamilyLink::poisson(Interval valid)
{
    if (valid.lo > valid.hi) throw ValidationError("poisson: empty valid interval");
    return {Kind::Poisson, valid};
}

std::string ExpFamilyLink::name() const
{
    switch (kind_) {
    case Kind::Logistic: return "logistic";
    case Kind::Gaussian: return "gaussian";
    case Kind::Poisson: return "poisson";
    }
    return "unknown";
}

CumulantValues ExpFamilyLink::eval(double t) const
{
    if (!valid_.contains(t) || std::isnan(t)) {
        throw DomainError(name() + " cumulant evaluated outside its valid interval");
    }
    switch (kind_) {
    case Kind::Logistic: {
        const double value = t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
        const double mean = 1.0 / (1.0 + std::exp(-t));
        const double c = 2.0 * std::cosh(0.5 * t);
        return {value, mean, 1.0 / (c * c)};
    }
    case Kind::Gaussian:
        return {0.5 * t * t, t, 1.0};
    case Kind::Poisson: {
        const double e = std::exp(t);
        return {e, e, e};
    }
    }
    return {0.0, 0.0, 0.0};
}

CumulantValues eval_cumulant(const ExpFamilyLink& link, double t)
{
    return link.eval(t);
}

CertifiedValue inf_lambda2(const ExpFamilyLink& link, const Interval& I)
{
    if (I.lo > I.hi) throw ValidationError("inf_lambda2: empty interval");
    if (!I.subset_of(link.valid_interval())) {
        throw DomainError("inf_lambda2: interval exceeds the valid interval of " + link.name());
    }
    CertifiedValue out;
    switch (link.kind()) {
    case ExpFamilyLink::Kind::Gaussian:
        out.value = 1.0;
        out.method = "constant";
        break;
    case ExpFamilyLink::Kind::Logistic: {
        // Lambda'' = (2 cosh(t/2))^-2 decreases in |t|.
        const double far = I.max_abs();
        out.method = "endpoint";
        if (!std::isfinite(far)) {
            out.value = 0.0;
            out.warning = true;
        } else {
            const double c = 2.0 * std::cosh(0.5 * far);
            out.value = 1.0 / (c * c);
        }
        break;
    }
    case ExpFamilyLink::Kind::Poisson:
        out.method = "endpoint";
        out.value = std::exp(I.lo);
        out.warning = !std::isfinite(I.lo);
        break;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Analytic links: generic certified bounds

namespace {

constexpr int kSlopePieces = 4096;
constexpr int kSlopeMaxDepth = 8;
constexpr int kCauchyPieces = 16;

double binomial(int n, int k)
{
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

} // namespace

CertifiedValue AnalyticLinkImpl::slope_lower_bound(const Interval& I) const
{
    if (!I.bounded()) {
        throw ValidationError(name() + ": slope bound needs a finite interval");
    }
    CertifiedValue out;
    out.method = "piecewise-curvature";
    if (I.length() == 0.0) {
        out.value = std::abs(derivative(I.lo));
        return out;
    }
    // d(f, I) = inf_I |f'| by the mean value theorem. On each piece,
    // |f'| >= |f'(mid)| - halfwidth * sup |f''|.
    const double h = I.length() / kSlopePieces;
    double prev_sign = 0.0;
    for (int i = 0; i <= kSlopePieces; ++i) {
        const double d = derivative(I.lo + i * h);
        const double sign = (d > 0.0) - (d < 0.0);
        if (sign == 0.0 || (prev_sign != 0.0 && sign != prev_sign)) {
            out.value = 0.0; // f' vanishes somewhere in I
            return out;
        }
        prev_sign = sign;
    }

    double lower = kInf;
    double slack = 0.0;
    auto piece = [&](auto&& self, double a, double b, int depth) -> void {
        const double mid = 0.5 * (a + b);
        const double half = 0.5 * (b - a);
        const double fm = std::abs(derivative(mid));
        const double curvature = 2.0 * dk_bound(2, {a, b});
        const double lb = fm - half * curvature;
        if (lb > 0.0 || depth >= kSlopeMaxDepth || !std::isfinite(curvature)) {
            if (std::max(lb, 0.0) < lower) {
                lower = std::max(lb, 0.0);
                slack = half * curvature;
            }
            return;
        }
        self(self, a, mid, depth + 1);
        self(self, mid, b, depth + 1);
    };
    for (int i = 0; i < kSlopePieces; ++i) {
        piece(piece, I.lo + i * h, i + 1 == kSlopePieces ? I.hi : I.lo + (i + 1) * h, 0);
    }
    out.value = lower;
    out.tolerance = slack;
    return out;
}

double AnalyticLinkImpl::dk_bound(int k, const Interval& I) const
{
    if (k < 1) throw ValidationError("dk_bound: k must be >= 1");
    if (auto deg = degree(); deg && k > *deg) return 0.0;
    if (!I.bounded()) throw ValidationError(name() + ": d_k bound needs a finite interval");

    // Cauchy estimate |f^{(k)}(x)|/k! <= sup_{|z-x|=rho} |f| / rho^k, taken
    // uniformly over each piece by enlarging the disc by the piece half-width.
    const double radius = uniform_radius(I);
    const int pieces = I.length() > 0.0 ? kCauchyPieces : 1;
    const double half = 0.5 * I.length() / pieces;
    double worst = 0.0;
    for (int i = 0; i < pieces; ++i) {
        const double center = I.lo + (2 * i + 1) * half;
        double best = kInf;
        for (int t = 0; t < 48; ++t) {
            double rho;
            if (std::isfinite(radius)) {
                rho = radius * (0.02 + 0.0199 * t);
            } else {
                rho = 0.05 * std::pow(1.25, t);
            }
            if (rho <= 0.0) continue;
            const double M = modulus_bound(center, rho + half);
            if (!std::isfinite(M)) continue;
            best = std::min(best, M / std::pow(rho, k));
        }
        worst = std::max(worst, best);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Built-in analytic links

namespace {

class AffineLink final : public AnalyticLinkImpl
{
public:
    AffineLink(double slope, double intercept) : a_(slope), b_(intercept) {}

    std::string name() const override
    {
        return (a_ == 1.0 && b_ == 0.0) ? "identity" : "affine";
    }
    double value(double x) const override { return a_ * x + b_; }
    double derivative(double) const override { return a_; }
    double second_derivative(double) const override { return 0.0; }
    std::vector<double> taylor(double x0, int K) const override
    {
        std::vector<double> c(K + 1, 0.0);
        c[0] = value(x0);
        if (K >= 1) c[1] = a_;
        return c;
    }
    double modulus_bound(double center, double rho) const override
    {
        return std::abs(a_) * (std::abs(center) + rho) + std::abs(b_);
    }
    double uniform_radius(const Interval&) const override { return kInf; }
    std::optional<int> degree() const override { return a_ == 0.0 ? 0 : 1; }
    CertifiedValue slope_lower_bound(const Interval&) const override
    {
        return {std::abs(a_), 0.0, false, "closed-form"};
    }
    double dk_bound(int k, const Interval&) const override
    {
        if (k < 1) throw ValidationError("dk_bound: k must be >= 1");
        return k == 1 ? std::abs(a_) : 0.0;
    }

private:
    double a_, b_;
};

class ExpLink final : public AnalyticLinkImpl
{
public:
    std::string name() const override { return "exp"; }
    double value(double x) const override { return std::exp(x); }
    double derivative(double x) const override { return std::exp(x); }
    double second_derivative(double x) const override { return std::exp(x); }
    std::vector<double> taylor(double x0, int K) const override
    {
        std::vector<double> c(K + 1);
        double term = std::exp(x0);
        for (int k = 0; k <= K; ++k) {
            c[k] = term;
            term /= (k + 1);
        }
        return c;
    }
    double modulus_bound(double center, double rho) const override { return std::exp(center + rho); }
    double uniform_radius(const Interval&) const override { return kInf; }
    CertifiedValue slope_lower_bound(const Interval& I) const override
    {
        // f' = e^x is increasing.
        return {std::exp(I.lo), 0.0, !std::isfinite(I.lo), "monotone-derivative"};
    }
    double dk_bound(int k, const Interval& I) const override
    {
        if (k < 1) throw ValidationError("dk_bound: k must be >= 1");
        if (!std::isfinite(I.hi)) throw ValidationError("exp: d_k unbounded on this interval");
        return std::exp(I.hi - std::lgamma(k + 1.0));
    }
};

class PolynomialLink final : public AnalyticLinkImpl
{
public:
    explicit PolynomialLink(std::vector<double> coeffs) : c_(std::move(coeffs))
    {
        while (c_.size() > 1 && c_.back() == 0.0) c_.pop_back();
        if (c_.empty()) c_.push_back(0.0);
    }

    std::string name() const override { return "poly"; }
    double value(double x) const override
    {
        double acc = 0.0;
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * x + *it;
        return acc;
    }
    double derivative(double x) const override
    {
        double acc = 0.0;
        for (std::size_t k = c_.size() - 1; k >= 1; --k) acc = acc * x + k * c_[k];
        return acc;
    }
    double second_derivative(double x) const override
    {
        double acc = 0.0;
        for (std::size_t k = c_.size() - 1; k >= 2; --k) acc = acc * x + k * (k - 1) * c_[k];
        return acc;
    }
    std::vector<double> taylor(double x0, int K) const override
    {
        // Repeated synthetic division gives the coefficients about x0.
        std::vector<double> shifted = c_;
        const std::size_t d = shifted.size() - 1;
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = d - 1; j + 1 > i; --j) {
                shifted[j] += x0 * shifted[j + 1];
                if (j == 0) break;
            }
        }
        std::vector<double> out(K + 1, 0.0);
        for (std::size_t k = 0; k <= d && static_cast<int>(k) <= K; ++k) out[k] = shifted[k];
        return out;
    }
    double modulus_bound(double center, double rho) const override
    {
        const auto a = taylor(center, static_cast<int>(c_.size()) - 1);
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i]) * std::pow(rho, i);
        return acc;
    }
    double uniform_radius(const Interval&) const override { return kInf; }
    std::optional<int> degree() const override { return static_cast<int>(c_.size()) - 1; }

    double dk_bound(int k, const Interval& I) const override
    {
        if (k < 1) throw ValidationError("dk_bound: k must be >= 1");
        const int d = *degree();
        if (k > d) return 0.0;
        if (!I.bounded()) throw ValidationError("poly: d_k bound needs a finite interval");
        // Taylor enclosure of f^{(k)}/k! about each piece midpoint.
        constexpr int pieces = 64;
        const int n_pieces = I.length() > 0.0 ? pieces : 1;
        const double half = 0.5 * I.length() / n_pieces;
        double worst = 0.0;
        for (int p = 0; p < n_pieces; ++p) {
            const double mid = I.lo + (2 * p + 1) * half;
            const auto a = taylor(mid, d);
            double bound = 0.0;
            for (int i = 0; k + i <= d; ++i) {
                bound += binomial(k + i, k) * std::abs(a[k + i]) * std::pow(half, i);
            }
            worst = std::max(worst, bound);
        }
        return worst;
    }

private:
    std::vector<double> c_;
};

class SigmoidLink final : public AnalyticLinkImpl
{
public:
    explicit SigmoidLink(double scale) : s_(scale)
    {
        if (!(scale > 0.0)) throw ValidationError("sigmoid scale must be positive");
    }

    std::string name() const override { return "sigmoid"; }
    double value(double x) const override { return 1.0 / (1.0 + std::exp(-s_ * x)); }
    double derivative(double x) const override
    {
        const double c = 2.0 * std::cosh(0.5 * s_ * x);
        return s_ / (c * c);
    }
    double second_derivative(double x) const override
    {
        const double v = value(x);
        return s_ * s_ * v * (1.0 - v) * (1.0 - 2.0 * v);
    }
    std::vector<double> taylor(double x0, int K) const override
    {
        // sigma' = sigma - sigma^2 gives (k+1) b_{k+1} = b_k - sum_i b_i b_{k-i}.
        std::vector<double> b(K + 1, 0.0);
        b[0] = value(x0);
        for (int k = 0; k < K; ++k) {
            double conv = 0.0;
            for (int i = 0; i <= k; ++i) conv += b[i] * b[k - i];
            b[k + 1] = (b[k] - conv) / (k + 1);
        }
        double scale = 1.0;
        for (int k = 0; k <= K; ++k) {
            b[k] *= scale;
            scale *= s_;
        }
        return b;
    }
    double modulus_bound(double center, double rho) const override
    {
        // |1 + e^{-w}| >= 1 whenever |Im w| <= pi/2.
        if (s_ * rho <= 0.5 * std::numbers::pi) return 1.0;
        const double pole = std::numbers::pi / s_;
        if (std::hypot(center, pole) <= rho) return kInf;
        // Maximum modulus on the boundary circle, padded for the grid spacing.
        double worst = 0.0;
        constexpr int grid = 1024;
        for (int i = 0; i < grid; ++i) {
            const double theta = 2.0 * std::numbers::pi * i / grid;
            const std::complex<double> z(center + rho * std::cos(theta), rho * std::sin(theta));
            worst = std::max(worst, std::abs(1.0 / (1.0 + std::exp(-s_ * z))));
        }
        return 1.05 * worst;
    }
    double uniform_radius(const Interval& I) const override
    {
        const double nearest = I.contains(0.0) ? 0.0 : std::min(std::abs(I.lo), std::abs(I.hi));
        return std::hypot(nearest, std::numbers::pi / s_);
    }
    CertifiedValue slope_lower_bound(const Interval& I) const override
    {
        // f' = s sigma (1 - sigma) decreases in |x|.
        const double far = I.max_abs();
        if (!std::isfinite(far)) return {0.0, 0.0, true, "monotone-derivative"};
        return {derivative(far), 0.0, false, "monotone-derivative"};
    }

private:
    double s_;
};

} // namespace

// ---------------------------------------------------------------------------

AnalyticLink::AnalyticLink(std::shared_ptr<const AnalyticLinkImpl> impl, int max_order)
    : impl_(std::move(impl)), max_order_(max_order)
{
    if (!impl_) throw ValidationError("AnalyticLink: null implementation");
    if (max_order_ < 1) throw ValidationError("AnalyticLink: max_order must be >= 1");
}

AnalyticLink AnalyticLink::identity() { return affine(1.0, 0.0); }

AnalyticLink AnalyticLink::affine(double slope, double intercept)
{
    return AnalyticLink(std::make_shared<AffineLink>(slope, intercept));
}

AnalyticLink AnalyticLink::exp() { return AnalyticLink(std::make_shared<ExpLink>()); }

AnalyticLink AnalyticLink::polynomial(std::vector<double> coeffs)
{
    return AnalyticLink(std::make_shared<PolynomialLink>(std::move(coeffs)));
}

AnalyticLink AnalyticLink::sigmoid(double scale)
{
    return AnalyticLink(std::make_shared<SigmoidLink>(scale));
}

std::vector<double> AnalyticLink::taylor0(int K) const
{
    const auto a = impl_->taylor(0.0, K);
    std::vector<double> out(K);
    for (int k = 1; k <= K; ++k) out[k - 1] = std::abs(a[k]) * std::exp(std::lgamma(k + 1.0));
    return out;
}

CertifiedValue slope_lower_bound(const AnalyticLink& link, const Interval& I)
{
    if (I.lo > I.hi) throw ValidationError("slope_lower_bound: empty interval");
    return link.impl().slope_lower_bound(I);
}

std::vector<double> dk_bounds(const AnalyticLink& link, int k_first, int k_last, const Interval& I)
{
    if (k_first < 1 || k_last < k_first) throw ValidationError("dk_bounds: bad k range");
    if (k_last > link.max_order()) {
        throw ValidationError("dk_bounds: series data exhausted (K_max = " +
                              std::to_string(link.max_order()) + ")");
    }
    std::vector<double> out;
    out.reserve(k_last - k_first + 1);
    for (int k = k_first; k <= k_last; ++k) out.push_back(link.impl().dk_bound(k, I));
    return out;
}

std::string link_name(const LinkModel& link)
{
    return std::visit([](const auto& l) { return l.name(); }, link);
}

} // namespace sparsenl
