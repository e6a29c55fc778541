#include <sparsenl/quadrature.hpp>
#include <sparsenl/error.hpp>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace sparsenl::quadrature {
namespace {

constexpr int kCoarse = 10;
constexpr int kFine = 20;
constexpr int kMaxDepth = 40;

Rule build_rule(int n)
{
    Rule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

template <class T, class Fn, class Acc>
T apply_rule(const Rule& rule, Fn&& f, double a, double b, Acc&& accumulate, T zero)
{
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    T acc = zero;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        accumulate(acc, f(mid + half * rule.nodes[i]), half * rule.weights[i]);
    }
    return acc;
}

} // namespace

const Rule& gauss_legendre(int order)
{
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<Rule>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<Rule>(build_rule(order));
    return *slot;
}

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol)
{
    const Rule& coarse = gauss_legendre(kCoarse);
    const Rule& fine = gauss_legendre(kFine);
    auto add = [](double& acc, double v, double w) { acc += w * v; };
    auto panel = [&](auto&& self, double lo, double hi, double tol, int depth) -> double {
        const double c = apply_rule(coarse, f, lo, hi, add, 0.0);
        const double r = apply_rule(fine, f, lo, hi, add, 0.0);
        if (std::abs(r - c) <= tol || depth >= kMaxDepth) return r;
        const double m = 0.5 * (lo + hi);
        return self(self, lo, m, 0.5 * tol, depth + 1) + self(self, m, hi, 0.5 * tol, depth + 1);
    };
    if (a == b) return 0.0;
    return panel(panel, a, b, abs_tol, 0);
}

std::vector<double> integrate_vector(const std::function<std::vector<double>(double)>& f, double a,
                                     double b, double abs_tol)
{
    const Rule& coarse = gauss_legendre(kCoarse);
    const Rule& fine = gauss_legendre(kFine);
    const std::size_t dim = f(0.5 * (a + b)).size();
    auto add = [](std::vector<double>& acc, const std::vector<double>& v, double w) {
        if (v.size() != acc.size()) throw ValidationError("integrate_vector: ragged integrand");
        for (std::size_t i = 0; i < v.size(); ++i) acc[i] += w * v[i];
    };
    const std::vector<double> zero(dim, 0.0);
    auto panel = [&](auto&& self, double lo, double hi, double tol, int depth) -> std::vector<double> {
        const auto c = apply_rule(coarse, f, lo, hi, add, zero);
        auto r = apply_rule(fine, f, lo, hi, add, zero);
        double err = 0.0;
        for (std::size_t i = 0; i < dim; ++i) err = std::max(err, std::abs(r[i] - c[i]));
        if (err <= tol || depth >= kMaxDepth) return r;
        const double m = 0.5 * (lo + hi);
        auto left = self(self, lo, m, 0.5 * tol, depth + 1);
        const auto right = self(self, m, hi, 0.5 * tol, depth + 1);
        for (std::size_t i = 0; i < dim; ++i) left[i] += right[i];
        return left;
    };
    if (a == b) return zero;
    return panel(panel, a, b, abs_tol, 0);
}

} // namespace sparsenl::quadrature
