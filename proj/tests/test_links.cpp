#include <doctest.h>
#include <sparsenl/error.hpp>
#include <sparsenl/links.hpp>
#include <sparsenl/rng.hpp>
#include <cmath>

using namespace sparsenl;

namespace {

double factorial(int k)
{
    double r = 1.0;
    for (int i = 2; i <= k; ++i) r *= i;
    return r;
}

// Smallest difference quotient over random pairs, the empirical side of d(f, I).
double empirical_min_quotient(const AnalyticLink& f, const Interval& I, int pairs, std::uint64_t seed)
{
    Rng rng(seed);
    double best = kInf;
    for (int t = 0; t < pairs; ++t) {
        const double x = rng.uniform(I.lo, I.hi), y = rng.uniform(I.lo, I.hi);
        if (x == y) continue;
        best = std::min(best, std::abs(f.value(x) - f.value(y)) / std::abs(x - y));
    }
    return best;
}

std::vector<AnalyticLink> builtins()
{
    return {AnalyticLink::identity(),        AnalyticLink::affine(-2.5, 1.0), AnalyticLink::exp(),
            AnalyticLink::polynomial({0.0, 1.0, 0.5, 0.2}), AnalyticLink::polynomial({0.0, 0.0, 1.0}),
            AnalyticLink::sigmoid(1.0),      AnalyticLink::sigmoid(3.0)};
}

} // namespace

TEST_CASE("cumulant examples")
{
    const auto lg = eval_cumulant(ExpFamilyLink::logistic(), 0.0);
    CHECK(lg.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(lg.d1 == doctest::Approx(0.5));
    CHECK(lg.d2 == doctest::Approx(0.25));

    const auto g = eval_cumulant(ExpFamilyLink::gaussian(), 3.0);
    CHECK(g.value == doctest::Approx(4.5));
    CHECK(g.d1 == doctest::Approx(3.0));
    CHECK(g.d2 == doctest::Approx(1.0));

    const auto p = eval_cumulant(ExpFamilyLink::poisson(), 0.0);
    CHECK(p.value == doctest::Approx(1.0));
    CHECK(p.d1 == doctest::Approx(1.0));
    CHECK(p.d2 == doctest::Approx(1.0));

    CHECK_THROWS_AS(eval_cumulant(ExpFamilyLink::poisson({-1.0, 1.0}), 2.0), DomainError);

    // Extreme arguments stay finite and match the asymptotes.
    const auto big = eval_cumulant(ExpFamilyLink::logistic(), 800.0);
    CHECK(big.value == doctest::Approx(800.0));
    CHECK(big.d1 == doctest::Approx(1.0));
    CHECK(big.d2 >= 0.0);
    const auto small = eval_cumulant(ExpFamilyLink::logistic(), -800.0);
    CHECK(std::isfinite(small.value));
    CHECK(small.d1 >= 0.0);
}

TEST_CASE("cumulant finite differences")
{
    const double h = 1e-5;
    for (const auto& link : {ExpFamilyLink::logistic(), ExpFamilyLink::gaussian(), ExpFamilyLink::poisson()}) {
        Rng rng(11);
        for (int t = 0; t < 100; ++t) {
            const double x = rng.uniform(-4.0, 4.0);
            const auto c = link.eval(x);
            const double fd1 = (link.lambda(x + h) - link.lambda(x - h)) / (2 * h);
            const double fd2 = (link.mean(x + h) - link.mean(x - h)) / (2 * h);
            CHECK(std::abs(fd1 - c.d1) <= 1e-6 * (1.0 + std::abs(c.d1)));
            CHECK(std::abs(fd2 - c.d2) <= 1e-6 * (1.0 + std::abs(c.d2)));
            CHECK(c.d2 >= 0.0);
        }
    }
}

TEST_CASE("inf of the cumulant curvature")
{
    CHECK(inf_lambda2(ExpFamilyLink::gaussian(), {-3.0, 7.0}).value == 1.0);
    CHECK(inf_lambda2(ExpFamilyLink::gaussian(), {}).value == 1.0);

    const double expected = std::pow(2.0 * std::cosh(1.0), -2.0);
    CHECK(inf_lambda2(ExpFamilyLink::logistic(), {-2.0, 2.0}).value == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(0.104994).epsilon(1e-5));
    CHECK(inf_lambda2(ExpFamilyLink::logistic(), {0.0, 0.0}).value == doctest::Approx(0.25));
    // Asymmetric interval: the endpoint of largest modulus wins.
    CHECK(inf_lambda2(ExpFamilyLink::logistic(), {-1.0, 3.0}).value ==
          doctest::Approx(std::pow(2.0 * std::cosh(1.5), -2.0)));

    const auto unbounded = inf_lambda2(ExpFamilyLink::logistic(), {0.0, kInf});
    CHECK(unbounded.value == 0.0);
    CHECK(unbounded.warning);

    CHECK(inf_lambda2(ExpFamilyLink::poisson({-1.0, 2.0}), {-1.0, 2.0}).value == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("analytic link values and derivatives")
{
    const double h = 1e-5;
    for (const auto& f : builtins()) {
        Rng rng(5);
        for (int t = 0; t < 100; ++t) {
            const double x = rng.uniform(-1.5, 1.5);
            const double fd = (f.value(x + h) - f.value(x - h)) / (2 * h);
            CHECK(std::abs(fd - f.derivative(x)) <= 1e-6 * (1.0 + std::abs(f.derivative(x))));
            const double fd2 = (f.derivative(x + h) - f.derivative(x - h)) / (2 * h);
            CHECK(std::abs(fd2 - f.second_derivative(x)) <= 1e-6 * (1.0 + std::abs(f.second_derivative(x))));
        }
    }
    CHECK(AnalyticLink::sigmoid(2.0).value(0.3) == doctest::Approx(1.0 / (1.0 + std::exp(-0.6))));
    CHECK(AnalyticLink::polynomial({1.0, -2.0, 3.0}).value(2.0) == doctest::Approx(9.0));
}

TEST_CASE("taylor data and series evaluation")
{
    // Taylor coefficients of exp about x0 are e^x0 / k!.
    const auto e = AnalyticLink::exp().taylor(0.5, 10);
    for (int k = 0; k <= 10; ++k) CHECK(e[k] == doctest::Approx(std::exp(0.5) / factorial(k)));

    const auto t0 = AnalyticLink::exp().taylor0(5);
    REQUIRE(t0.size() == 5);
    for (double d : t0) CHECK(d == doctest::Approx(1.0));

    // Summing the series inside the disc reproduces the value.
    for (const auto& f : builtins()) {
        const double r = f.radius_about_zero();
        const double x = std::isfinite(r) ? 0.4 * r : 0.8;
        const auto c = f.taylor(0.0, 60);
        double acc = 0.0, xp = 1.0;
        for (double ck : c) {
            acc += ck * xp;
            xp *= x;
        }
        CHECK(acc == doctest::Approx(f.value(x)).epsilon(1e-9));
    }

    CHECK(AnalyticLink::sigmoid(2.0).radius_about_zero() == doctest::Approx(M_PI / 2.0));
    CHECK(std::isinf(AnalyticLink::exp().radius_about_zero()));
    CHECK(AnalyticLink::polynomial({0.0, 0.0, 1.0}).degree() == 2);
    CHECK_FALSE(AnalyticLink::exp().degree().has_value());
}

TEST_CASE("modulus bounds dominate the boundary")
{
    for (const auto& f : builtins()) {
        const double rho = std::isfinite(f.radius_about_zero()) ? 0.5 * f.radius_about_zero() : 1.5;
        const double M = f.modulus_bound(0.0, rho);
        // Real points of the disc are a subset of the boundary test.
        for (double x : {-rho, -rho / 2, 0.0, rho / 2, rho}) CHECK(std::abs(f.value(x)) <= M * (1 + 1e-12));
    }
    CHECK(AnalyticLink::exp().modulus_bound(0.0, 1.0) >= std::exp(1.0));
}

TEST_CASE("slope lower bounds")
{
    CHECK(slope_lower_bound(AnalyticLink::identity(), {-5.0, 5.0}).value == 1.0);
    CHECK(slope_lower_bound(AnalyticLink::identity(), {}).value == 1.0);
    CHECK(slope_lower_bound(AnalyticLink::affine(-2.5, 3.0), {0.0, 1.0}).value == 2.5);
    CHECK(slope_lower_bound(AnalyticLink::exp(), {0.0, 1.0}).value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(slope_lower_bound(AnalyticLink::polynomial({0.0, 0.0, 0.0, 1.0}), {-1.0, 1.0}).value == 0.0);
    CHECK(slope_lower_bound(AnalyticLink::polynomial({0.0, 0.0, 1.0}), {-1.0, 1.0}).value == 0.0);

    const std::vector<Interval> intervals = {{-1.0, 1.0}, {0.2, 2.0}, {-3.0, -0.5}};
    for (const auto& f : builtins()) {
        for (const auto& I : intervals) {
            const auto lb = slope_lower_bound(f, I);
            CHECK(lb.value >= 0.0);
            CHECK(lb.value <= empirical_min_quotient(f, I, 10000, 9) * (1 + 1e-12));
        }
    }
}

TEST_CASE("derivative bounds")
{
    const auto e = dk_bounds(AnalyticLink::exp(), 1, 3, {0.0, 1.0});
    REQUIRE(e.size() == 3);
    CHECK(e[0] >= std::exp(1.0));
    CHECK(e[0] == doctest::Approx(2.71828).epsilon(1e-5));
    CHECK(e[1] == doctest::Approx(1.35914).epsilon(1e-5));
    CHECK(e[2] == doctest::Approx(0.453047).epsilon(1e-5));

    const auto id = dk_bounds(AnalyticLink::identity(), 1, 4, {-2.0, 2.0});
    CHECK(id[0] == 1.0);
    for (std::size_t k = 1; k < id.size(); ++k) CHECK(id[k] == 0.0);

    const double m = 1.7;
    const auto sq = dk_bounds(AnalyticLink::polynomial({0.0, 0.0, 1.0}), 1, 5, {-m, m});
    CHECK(sq[0] == doctest::Approx(2 * m));
    CHECK(sq[1] == doctest::Approx(1.0));
    for (std::size_t k = 2; k < sq.size(); ++k) CHECK(sq[k] == 0.0);

    CHECK_THROWS(dk_bounds(AnalyticLink::exp().with_max_order(8), 1, 9, {0.0, 1.0}));

    // Sampled derivatives never exceed the certified bounds.
    for (const auto& f : builtins()) {
        const Interval I{-0.8, 0.6};
        const auto d = dk_bounds(f, 1, 6, I);
        Rng rng(21);
        for (int t = 0; t < 100; ++t) {
            const auto c = f.taylor(rng.uniform(I.lo, I.hi), 6);
            for (int k = 1; k <= 6; ++k) CHECK(std::abs(c[k]) <= d[k - 1] * (1 + 1e-9) + 1e-15);
        }
    }
}
