#include <doctest.h>
#include <sparsenl/error.hpp>
#include <sparsenl/estimators.hpp>
#include <sparsenl/oracle.hpp>
#include <sparsenl/rng.hpp>
#include <cmath>

using namespace sparsenl;

namespace {

Vector vec(std::initializer_list<double> xs)
{
    Vector v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Matrix gaussian_matrix(Index n, Index p, Rng& rng)
{
    Matrix M(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) M(i, j) = rng.normal();
    return M;
}

EstimationProblem lse(Matrix M, Vector y, double c_r, AnalyticLink f = AnalyticLink::identity())
{
    EstimationProblem prob{DesignMatrix(std::move(M)), std::move(y), std::move(f), {}, c_r, ProblemKind::Lse};
    return prob;
}

// Logistic instance with y ~ Bernoulli(Lambda'(X beta)).
struct LogisticInstance
{
    EstimationProblem prob;
    Vector beta;
    Vector eps;
};

LogisticInstance logistic_instance(Index n, Index p, std::uint64_t seed)
{
    Rng rng(seed);
    Matrix M = gaussian_matrix(n, p, rng);
    Vector beta = Vector::Zero(p);
    beta(0) = 0.8;
    if (p > 2) beta(2) = -0.5;
    const Vector z = M * beta;
    Vector y(n), eps(n);
    const auto link = ExpFamilyLink::logistic();
    for (Index i = 0; i < n; ++i) {
        const double m = link.mean(z(i));
        y(i) = rng.uniform() < m ? 1.0 : 0.0;
        eps(i) = y(i) - m;
    }
    EstimationProblem prob{DesignMatrix(M), y, link, {}, 1.0, ProblemKind::Mle};
    return {prob, beta, eps};
}

// Independent oracle for box-constrained identity lasso: log-barrier Newton on
//   min |y - Xv|^2 + c sum t   s.t.  -t <= v <= t,  lo <= Xv <= hi.
Vector barrier_lasso(const Matrix& X, const Vector& y, double c, double lo, double hi)
{
    const Index n = X.rows(), p = X.cols(), m = 2 * p + 2 * n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, 2 * p);
    Vector b = Vector::Zero(m);
    for (Index j = 0; j < p; ++j) {
        A(j, j) = 1;
        A(j, p + j) = -1;
        A(p + j, j) = -1;
        A(p + j, p + j) = -1;
    }
    for (Index i = 0; i < n; ++i) {
        A.block(2 * p + i, 0, 1, p) = X.row(i);
        b(2 * p + i) = hi;
        A.block(2 * p + n + i, 0, 1, p) = -X.row(i);
        b(2 * p + n + i) = -lo;
    }
    Vector x = Vector::Zero(2 * p);
    x.tail(p).setConstant(1.0);
    auto f0 = [&](const Vector& u) { return (y - X * u.head(p)).squaredNorm() + c * u.tail(p).sum(); };
    for (double tt = 1.0; m / tt > 1e-11; tt *= 8) {
        auto phi = [&](const Vector& u) { return tt * f0(u) - (b - A * u).array().log().sum(); };
        for (int it = 0; it < 200; ++it) {
            const Vector slack = b - A * x;
            Vector g = Vector::Zero(2 * p);
            Eigen::MatrixXd H = Eigen::MatrixXd::Zero(2 * p, 2 * p);
            g.head(p) = -2.0 * X.transpose() * (y - X * x.head(p));
            g.tail(p).setConstant(c);
            H.topLeftCorner(p, p) = 2.0 * X.transpose() * X;
            g *= tt;
            H *= tt;
            for (Index k = 0; k < m; ++k) {
                g += A.row(k).transpose() / slack(k);
                H += A.row(k).transpose() * A.row(k) / (slack(k) * slack(k));
            }
            const Vector dx = -H.ldlt().solve(g);
            if (-g.dot(dx) / 2 < 1e-14) break;
            double step = 1.0;
            while (((b - A * (x + step * dx)).array() <= 0).any()) step *= 0.5;
            const double p0 = phi(x);
            while (phi(x + step * dx) > p0 + 0.25 * step * g.dot(dx)) step *= 0.5;
            x += step * dx;
        }
    }
    return x.head(p);
}

void check_fit_invariants(const EstimationProblem& prob, const FitResult& r)
{
    for (std::size_t k = 1; k < r.objective_trace.size(); ++k) {
        CHECK(r.objective_trace[k] <= r.objective_trace[k - 1]);
    }
    CHECK(domain_contains(r.beta_hat, prob.X, prob.domain, 1e-8).inside);
    CHECK(r.objective_value == doctest::Approx(objective(prob, r.beta_hat)).epsilon(1e-12));
}

} // namespace

TEST_CASE("problem validation")
{
    auto prob = lse(Matrix::Identity(2, 2), vec({1.0, 2.0}), 1.0);
    CHECK_NOTHROW(prob.validate());
    CHECK(prob.convex());

    auto bad = prob;
    bad.y = vec({1.0});
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = prob;
    bad.c_r = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = prob;
    bad.kind = ProblemKind::Mle;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = prob;
    bad.link = ExpFamilyLink::logistic();
    CHECK_THROWS_AS(bad.validate(), ValidationError);

    auto nonconvex = lse(Matrix::Identity(2, 2), vec({1.0, 2.0}), 1.0, AnalyticLink::exp());
    CHECK_FALSE(nonconvex.convex());
}

TEST_CASE("objective examples")
{
    Rng rng(1);
    const Matrix M = gaussian_matrix(6, 3, rng);
    const Vector v = vec({0.3, -1.0, 2.0});
    CHECK(objective(lse(M, M * v, 0.0), v) == doctest::Approx(0.0).epsilon(1e-28));

    CHECK(objective(lse(Matrix::Identity(2, 2), vec({3.0, 0.5}), 2.0), Vector::Zero(2)) == doctest::Approx(9.25));
    CHECK(objective(lse(Matrix::Identity(2, 2), vec({3.0, 0.5}), 2.0), vec({1.0, -1.0})) ==
          doctest::Approx(4.0 + 2.25 + 4.0));

    auto inst = logistic_instance(12, 3, 2);
    CHECK(objective(inst.prob, Vector::Zero(3)) == doctest::Approx(12.0 * std::log(2.0)));

    // Gradient against central differences.
    for (auto* prob : {&inst.prob}) {
        const Vector x = vec({0.2, -0.1, 0.4});
        const Vector g = smooth_gradient(*prob, x);
        for (Index j = 0; j < 3; ++j) {
            Vector e = Vector::Zero(3);
            e(j) = 1e-6;
            const double fd = (smooth_objective(*prob, prob->X.apply(x + e)) -
                               smooth_objective(*prob, prob->X.apply(x - e))) / 2e-6;
            CHECK(fd == doctest::Approx(g(j)).epsilon(1e-6));
        }
    }

    // Evaluating outside the link's real domain is an error.
    EstimationProblem pois{DesignMatrix(Matrix::Identity(2, 2)), vec({1.0, 0.0}),
                           ExpFamilyLink::poisson({-1.0, 1.0}), {}, 1.0, ProblemKind::Mle};
    CHECK_THROWS_AS(objective(pois, vec({5.0, 0.0})), DomainError);
}

TEST_CASE("closed-form solutions")
{
    const auto prob = lse(Matrix::Identity(2, 2), vec({3.0, 0.5}), 2.0);
    const auto r = fit(prob);
    CHECK(r.converged);
    CHECK(r.beta_hat(0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(r.beta_hat(1) == 0.0);
    CHECK(optimality_residual(prob, vec({2.0, 0.0})) <= 1e-10);
    CHECK(optimality_residual(prob, Vector::Zero(2)) > 0.0);
    check_fit_invariants(prob, r);

    // Tiny penalty, y != f(0): zero is not stationary.
    CHECK(optimality_residual(lse(Matrix::Identity(2, 2), vec({1.0, 1.0}), 1e-6), Vector::Zero(2)) > 0.1);

    // c_r above twice the gradient at 0 forces beta_hat = 0.
    Rng rng(3);
    const Matrix M = gaussian_matrix(20, 5, rng);
    Vector y(20);
    for (Index i = 0; i < 20; ++i) y(i) = rng.normal();
    auto zero = lse(M, y, 1.0);
    zero.c_r = 2.0 * smooth_gradient(zero, Vector::Zero(5)).cwiseAbs().maxCoeff() + 1e-9;
    CHECK(fit(zero).beta_hat.isZero(0.0));

    // Orthogonal design: coordinatewise soft threshold.
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng r2(seed);
        const Index n = 12, p = 6;
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Eigen::MatrixXd(gaussian_matrix(n, n, r2)));
        const Matrix Q = Eigen::MatrixXd(qr.householderQ()).leftCols(p) * std::sqrt(double(n));
        Vector yy(n);
        for (Index i = 0; i < n; ++i) yy(i) = 3.0 * r2.normal();
        const double c_r = 5.0;
        const auto ortho = lse(Q, yy, c_r);
        const Vector u = Q.transpose() * yy / double(n);
        Vector expected(p);
        for (Index j = 0; j < p; ++j) expected(j) = soft_threshold(u(j), c_r / (2.0 * n));
        const auto fr = fit(ortho);
        CHECK((fr.beta_hat - expected).cwiseAbs().maxCoeff() <= 1e-8);
        CHECK(fr.optimality_residual <= 1e-8);
    }

    CHECK(soft_threshold(1.0, 1.0) == 0.0);
    CHECK(soft_threshold(-1.0, 1.0) == 0.0);
    CHECK(soft_threshold(-3.0, 1.0) == -2.0);
}

TEST_CASE("logistic fit matches the grid oracle")
{
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto inst = logistic_instance(20, 2, 100 + seed);
        inst.prob.domain.interval = {-4.0, 4.0};
        const auto r = fit(inst.prob);
        CHECK(r.converged);
        check_fit_invariants(inst.prob, r);
        const auto oracle = brute_force_refined(inst.prob, 2.0, 0.05, 1e-3);
        CHECK((r.beta_hat - oracle.v).cwiseAbs().maxCoeff() <= 2e-3);
        CHECK(r.objective_value <= oracle.objective + 1e-12);
    }
}

TEST_CASE("constrained and capped domains")
{
    Rng rng(5);
    for (int t = 0; t < 10; ++t) {
        const Matrix M = gaussian_matrix(15, 4, rng);
        Vector y(15);
        for (Index i = 0; i < 15; ++i) y(i) = 3.0 * rng.normal();
        auto prob = lse(M, y, 0.5);
        prob.domain.interval = {-0.5, 0.5};
        const auto r = fit(prob);
        check_fit_invariants(prob, r);
        CHECK(r.converged);
        CHECK(r.optimality_residual <= 1e-7);
        const Vector ref = barrier_lasso(M, y, 0.5, -0.5, 0.5);
        CHECK(r.objective_value <= objective(prob, ref) + 1e-8);
        CHECK((r.beta_hat - ref).cwiseAbs().maxCoeff() <= 1e-6);

        auto capped = lse(M, y, 0.5);
        capped.domain.weighted_l1_cap = 0.5;
        const auto rc = fit(capped);
        check_fit_invariants(capped, rc);
        CHECK(weighted_l1_norm(rc.beta_hat, capped.X) <= 0.5 + 1e-8);

        auto sparse = lse(M, y, 0.01);
        sparse.domain.support_cap = 1;
        const auto rs = fit(sparse);
        CHECK(support_size(rs.beta_hat) <= 1);
        CHECK(rs.support_cap_heuristic);
        CHECK(domain_contains(rs.beta_hat, sparse.X, sparse.domain, 1e-8).inside);
    }

    // Contradictory rows: D is empty.
    Matrix M(2, 1);
    M << 1, -1;
    auto empty = lse(M, vec({1.0, 1.0}), 1.0);
    empty.domain.interval = {1.0, 2.0};
    CHECK_THROWS_AS(fit(empty), ValidationError);
}

TEST_CASE("nonconvex links")
{
    Rng rng(9);
    const Matrix M = gaussian_matrix(30, 5, rng) / 2.0;
    Vector beta = Vector::Zero(5);
    beta(1) = 0.6;
    const Vector z = M * beta;
    Vector y(30);
    for (Index i = 0; i < 30; ++i) y(i) = std::exp(z(i)) + 0.1 * rng.uniform(-1.0, 1.0);
    auto prob = lse(M, y, 0.2, AnalyticLink::exp());
    prob.domain.interval = {-2.0, 2.0};
    const auto r = fit(prob);
    CHECK_FALSE(r.convex);
    check_fit_invariants(prob, r);
    CHECK(r.optimality_residual <= 1e-5);
    CHECK(r.objective_value <= objective(prob, beta));
    CHECK((r.beta_hat - beta).norm() < 0.3);
}

TEST_CASE("determinism")
{
    auto inst = logistic_instance(40, 6, 77);
    inst.prob.c_r = 2.0;
    const auto a = fit(inst.prob), b = fit(inst.prob);
    CHECK(a.beta_hat == b.beta_hat);
    CHECK(a.objective_trace == b.objective_trace);
    CHECK(a.iterations == b.iterations);
}

TEST_CASE("basic inequality")
{
    SUBCASE("equality at the truth")
    {
        auto inst = logistic_instance(20, 3, 4);
        const auto ctx = InequalityContext::for_problem(inst.prob, inst.beta, inst.eps);
        const auto c = check_basic_inequality(ctx, inst.prob, inst.beta);
        CHECK(c.holds);
        CHECK(c.lhs == doctest::Approx(0.0));
        CHECK(c.rhs == doctest::Approx(0.0));
    }
    SUBCASE("lse: implied by a lower objective")
    {
        int checked = 0;
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            Rng rng(seed);
            const Matrix M = gaussian_matrix(25, 5, rng);
            Vector beta = Vector::Zero(5);
            beta(rng.below(5)) = rng.uniform(-2.0, 2.0);
            Vector eps(25);
            for (Index i = 0; i < 25; ++i) eps(i) = rng.uniform(-1.0, 1.0);
            const auto f = seed % 2 ? AnalyticLink::exp() : AnalyticLink::identity();
            Vector fz(25);
            const Vector z = M * beta / 3.0;
            for (Index i = 0; i < 25; ++i) fz(i) = f.value(z(i));
            auto prob = lse(M / 3.0, fz + eps, rng.uniform(0.1, 3.0), f);
            const auto ctx = InequalityContext::for_problem(prob, beta, eps);
            std::vector<Vector> candidates = {fit(prob).beta_hat};
            for (int k = 0; k < 20; ++k) {
                Vector v = beta;
                for (Index j = 0; j < 5; ++j) v(j) += 0.05 * rng.normal();
                candidates.push_back(v);
            }
            for (const auto& v : candidates) {
                if (objective(prob, v) > objective(prob, beta)) continue;
                ++checked;
                CHECK(check_basic_inequality(ctx, prob, v).holds);
            }
        }
        CHECK(checked > 40);
    }
    SUBCASE("mle: implied by a lower objective")
    {
        int checked = 0;
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            auto inst = logistic_instance(30, 4, 500 + seed);
            Rng rng(seed);
            inst.prob.c_r = rng.uniform(0.1, 3.0);
            const auto ctx = InequalityContext::for_problem(inst.prob, inst.beta, inst.eps);
            std::vector<Vector> candidates = {fit(inst.prob).beta_hat};
            for (int k = 0; k < 20; ++k) {
                Vector v = inst.beta;
                for (Index j = 0; j < 4; ++j) v(j) += 0.1 * rng.normal();
                candidates.push_back(v);
            }
            for (const auto& v : candidates) {
                if (objective(inst.prob, v) > objective(inst.prob, inst.beta)) continue;
                ++checked;
                CHECK(check_basic_inequality(ctx, inst.prob, v).holds);
            }
        }
        CHECK(checked > 40);
    }
}

TEST_CASE("weighted l1 projection")
{
    const DesignMatrix I2(Matrix::Identity(2, 2));
    CHECK(project_weighted_l1(vec({0.2, -0.3}), 1.0, I2) == vec({0.2, -0.3}));
    const Vector p = project_weighted_l1(vec({3.0, 0.0}), 1.0, I2);
    CHECK(p(0) == doctest::Approx(1.0));
    CHECK(p(1) == 0.0);

    Rng rng(6);
    for (int t = 0; t < 200; ++t) {
        const Index n = 1 + static_cast<Index>(rng.below(6));
        Vector v(n), w(n);
        for (Index j = 0; j < n; ++j) {
            v(j) = 3.0 * rng.normal();
            w(j) = rng.uniform(0.2, 3.0);
        }
        const double cap = rng.uniform(0.1, 4.0);
        const Vector u = project_weighted_l1(v, cap, w);
        CHECK(w.cwiseProduct(u).lpNorm<1>() <= cap * (1 + 1e-12));
        // Homogeneity in (weights, cap).
        const double lam = rng.uniform(0.5, 4.0);
        CHECK((project_weighted_l1(v, lam * cap, (lam * w).eval()) - u).cwiseAbs().maxCoeff() <= 1e-9);
        // Optimality: no random feasible point is closer.
        for (int k = 0; k < 20; ++k) {
            Vector c(n);
            for (Index j = 0; j < n; ++j) c(j) = rng.normal();
            const double norm = w.cwiseProduct(c).lpNorm<1>();
            if (norm > cap) c *= cap / norm;
            CHECK((v - u).norm() <= (v - c).norm() + 1e-9);
        }
    }
    CHECK_THROWS_AS(project_weighted_l1(vec({1.0}), 0.0, I2), ValidationError);
}
