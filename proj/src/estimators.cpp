#include <sparsenl/estimators.hpp>
#include <sparsenl/error.hpp>
#include <sparsenl/rng.hpp>
#include <algorithm>
#include <cmath>
#include <numeric>

namespace sparsenl {

void EstimationProblem::validate() const
{
    if (y.size() != X.rows()) throw ValidationError("problem: y has length " + std::to_string(y.size()) +
                                                    " but X has " + std::to_string(X.rows()) + " rows");
    if (!y.allFinite()) throw ValidationError("problem: y contains non-finite values");
    if (!(c_r >= 0.0) || !std::isfinite(c_r)) throw ValidationError("problem: c_r must be finite and >= 0");
    if (domain.interval.lo > domain.interval.hi) throw ValidationError("problem: empty interval");
    if (domain.weighted_l1_cap && !(*domain.weighted_l1_cap > 0.0)) {
        throw ValidationError("problem: weighted_l1_cap must be positive");
    }
    if (domain.support_cap && *domain.support_cap < 1) throw ValidationError("problem: support_cap must be >= 1");
    if (kind == ProblemKind::Mle && !std::holds_alternative<ExpFamilyLink>(link)) {
        throw ValidationError("problem: mle requires an exponential-family link");
    }
    if (kind == ProblemKind::Lse && !std::holds_alternative<AnalyticLink>(link)) {
        throw ValidationError("problem: lse requires an analytic link");
    }
}

bool EstimationProblem::convex() const
{
    if (kind == ProblemKind::Mle) return true;
    const auto deg = std::get<AnalyticLink>(link).degree();
    return deg && *deg <= 1;
}

namespace {

// Per-row loss l_i(z) and its first two derivatives.
class RowLoss
{
public:
    explicit RowLoss(const EstimationProblem& prob) : y_(prob.y)
    {
        if (const auto* e = std::get_if<ExpFamilyLink>(&prob.link)) {
            defined_ = e->valid_interval();
            switch (e->kind()) {
            case ExpFamilyLink::Kind::Logistic: mode_ = Mode::Logistic; break;
            case ExpFamilyLink::Kind::Gaussian: mode_ = Mode::Gaussian; break;
            case ExpFamilyLink::Kind::Poisson: mode_ = Mode::Poisson; break;
            }
        } else {
            f_ = &std::get<AnalyticLink>(prob.link);
            defined_ = f_->real_domain();
            const auto deg = f_->degree();
            if (deg && *deg <= 1) {
                mode_ = Mode::Affine;
                slope_ = f_->derivative(0.0);
                intercept_ = f_->value(0.0);
            } else {
                mode_ = Mode::Analytic;
            }
        }
    }

    void check(double z) const
    {
        if (!defined_.contains(z)) {
            throw DomainError("link evaluated outside its domain at X_i'v = " + std::to_string(z));
        }
    }

    double value(Index i, double z) const
    {
        switch (mode_) {
        case Mode::Logistic: {
            const double lam = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
            return lam - y_(i) * z;
        }
        case Mode::Gaussian: return 0.5 * z * z - y_(i) * z;
        case Mode::Poisson: check(z); return std::exp(z) - y_(i) * z;
        case Mode::Affine: {
            const double r = y_(i) - slope_ * z - intercept_;
            return r * r;
        }
        case Mode::Analytic: {
            check(z);
            const double r = y_(i) - f_->value(z);
            return r * r;
        }
        }
        return 0.0;
    }

    double d1(Index i, double z) const
    {
        switch (mode_) {
        case Mode::Logistic: return 1.0 / (1.0 + std::exp(-z)) - y_(i);
        case Mode::Gaussian: return z - y_(i);
        case Mode::Poisson: return std::exp(z) - y_(i);
        case Mode::Affine: return -2.0 * slope_ * (y_(i) - slope_ * z - intercept_);
        case Mode::Analytic: return -2.0 * f_->derivative(z) * (y_(i) - f_->value(z));
        }
        return 0.0;
    }

    double d2(Index i, double z) const
    {
        switch (mode_) {
        case Mode::Logistic: {
            const double c = 2.0 * std::cosh(0.5 * z);
            return 1.0 / (c * c);
        }
        case Mode::Gaussian: return 1.0;
        case Mode::Poisson: return std::exp(z);
        case Mode::Affine: return 2.0 * slope_ * slope_;
        case Mode::Analytic: {
            const double fp = f_->derivative(z);
            return 2.0 * fp * fp - 2.0 * (y_(i) - f_->value(z)) * f_->second_derivative(z);
        }
        }
        return 0.0;
    }

    double total(const Vector& z) const
    {
        double acc = 0.0;
        for (Index i = 0; i < z.size(); ++i) acc += value(i, z(i));
        return acc;
    }

    void check_all(const Vector& z) const
    {
        for (Index i = 0; i < z.size(); ++i) check(z(i));
    }

private:
    enum class Mode { Logistic, Gaussian, Poisson, Affine, Analytic };
    const Vector& y_;
    Mode mode_ = Mode::Affine;
    const AnalyticLink* f_ = nullptr;
    double slope_ = 1.0;
    double intercept_ = 0.0;
    Interval defined_;
};

struct Run
{
    Vector v;
    double objective = kInf;
    std::vector<double> trace;
    std::vector<double> residuals;
    double residual = kInf;
    int sweeps = 0;
    bool converged = false;
};

class Solver
{
public:
    Solver(const EstimationProblem& prob, const FitOptions& opts)
        : prob_(prob), loss_(prob), X_(prob.X.entries()), n_(prob.X.rows()), p_(prob.X.cols()),
          convex_(prob.convex()), weights_(prob.X.col_linf())
    {
        tol_ = opts.tol.value_or(convex_ ? 1e-8 : 1e-6);
        max_iter_ = opts.max_iter;
        colsq_ = X_.colwise().squaredNorm().transpose();
        scratch_.resize(n_);
    }

    bool convex() const { return convex_; }
    double tol() const { return tol_; }

    double penalized(const Vector& v) const
    {
        const Vector z = X_ * v;
        loss_.check_all(z);
        return loss_.total(z) + prob_.c_r * v.lpNorm<1>();
    }

    Vector gradient(const Vector& z) const
    {
        Vector r(n_);
        for (Index i = 0; i < n_; ++i) r(i) = loss_.d1(i, z(i));
        return X_.transpose() * r;
    }

    bool feasible(const Vector& v, double tol) const
    {
        return domain_contains(v, prob_.X, without_support_cap(), tol).inside;
    }

    DomainSpec without_support_cap() const
    {
        DomainSpec d = prob_.domain;
        d.support_cap.reset();
        return d;
    }

    // Point on the segment from `a` (feasible) toward `b`, as far as feasibility allows.
    Vector pull_inside(const Vector& a, const Vector& b) const
    {
        const Vector za = X_ * a;
        const Vector dz = X_ * (b - a);
        const auto& I = prob_.domain.interval;
        double lam = 1.0;
        for (Index i = 0; i < n_; ++i) {
            if (dz(i) > 0.0 && std::isfinite(I.hi)) lam = std::min(lam, std::max(0.0, (I.hi - za(i)) / dz(i)));
            if (dz(i) < 0.0 && std::isfinite(I.lo)) lam = std::min(lam, std::max(0.0, (I.lo - za(i)) / dz(i)));
        }
        if (prob_.domain.weighted_l1_cap) {
            const double cap = *prob_.domain.weighted_l1_cap;
            auto norm_at = [&](double t) { return weighted_l1_norm(a + t * (b - a), prob_.X); };
            if (norm_at(lam) > cap) {
                double lo = 0.0, hi = lam;
                for (int it = 0; it < 100; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (norm_at(mid) <= cap ? lo : hi) = mid;
                }
                lam = lo;
            }
        }
        return a + lam * (b - a);
    }

    // Feasible point of D(I) (ignoring the support cap); 0 when possible.
    Vector feasible_base() const
    {
        Vector zero = Vector::Zero(p_);
        if (feasible(zero, 0.0)) return zero;
        // Alternating projections between range(X) and the box I^n.
        const auto& I = prob_.domain.interval;
        const Eigen::MatrixXd dense = X_;
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(dense);
        Vector z = Vector::Zero(n_).cwiseMax(I.lo).cwiseMin(I.hi);
        Vector v = cod.solve(z);
        for (int it = 0; it < 5000; ++it) {
            const Vector Xv = X_ * v;
            if (feasible(v, 0.0)) return v;
            // Aim a little inside the box so the limit point is strictly feasible.
            const double margin = I.bounded() ? 1e-9 * I.length() : 0.0;
            z = Xv.cwiseMax(I.lo + margin).cwiseMin(I.hi - margin);
            v = cod.solve(z);
        }
        if (feasible(v, 1e-12)) return v;
        throw ValidationError("search domain appears empty: no v with X_i'v in I was found");
    }

    // Per-coordinate move range keeping every constraint satisfied.
    std::pair<double, double> coordinate_range(const Vector& v, const Vector& z, Index j, double wsum) const
    {
        const auto& I = prob_.domain.interval;
        const double vj = v(j);
        double lo = -kInf, hi = kInf;
        if (std::isfinite(I.lo) || std::isfinite(I.hi)) {
            for (Index i = 0; i < n_; ++i) {
                const double x = X_(i, j);
                if (x == 0.0) continue;
                const double a = vj + (I.lo - z(i)) / x;
                const double b = vj + (I.hi - z(i)) / x;
                if (x > 0.0) {
                    lo = std::max(lo, a);
                    hi = std::min(hi, b);
                } else {
                    lo = std::max(lo, b);
                    hi = std::min(hi, a);
                }
            }
        }
        if (prob_.domain.weighted_l1_cap) {
            const double rest = wsum - weights_(j) * std::abs(vj);
            const double room = std::max(0.0, (*prob_.domain.weighted_l1_cap - rest) / weights_(j));
            lo = std::max(lo, -room);
            hi = std::min(hi, room);
        }
        return {std::min(lo, vj), std::max(hi, vj)};
    }

    // Monotone proximal-Newton coordinate descent. Each accepted step keeps
    // the iterate feasible and does not increase the objective.
    Run coordinate_descent(Vector v, const std::vector<char>& mask, int max_sweeps) const
    {
        Run run;
        Vector z = X_ * v;
        loss_.check_all(z);
        double smooth = loss_.total(z);
        double F_prev = smooth + prob_.c_r * v.lpNorm<1>();
        run.trace.push_back(F_prev);
        run.residuals.push_back(residual_masked(v, z, mask));
        int flat = 0;
        Vector& znew = scratch_;
        for (int sweep = 0; sweep < max_sweeps; ++sweep) {
            if (run.residuals.back() <= tol_) {
                run.converged = true;
                break;
            }
            double wsum = prob_.domain.weighted_l1_cap ? v.cwiseAbs().dot(weights_) : 0.0;
            double max_move = 0.0;
            for (Index j = 0; j < p_; ++j) {
                if (!mask[j]) continue;
                double g = 0.0, h = 0.0;
                for (Index i = 0; i < n_; ++i) {
                    const double x = X_(i, j);
                    if (x == 0.0) continue;
                    g += x * loss_.d1(i, z(i));
                    h += x * x * std::max(loss_.d2(i, z(i)), 0.0);
                }
                h = std::max(h, 1e-10 * colsq_(j));
                const double vj = v(j);
                // Coordinate is already stationary for the convex model.
                if (vj == 0.0 && std::abs(g) <= prob_.c_r) continue;
                const auto [lo, hi] = coordinate_range(v, z, j, wsum);
                const double F0 = smooth + prob_.c_r * std::abs(vj);
                for (int bt = 0; bt < 60; ++bt) {
                    const double t = std::clamp(soft_threshold(vj * h - g, prob_.c_r) / h, lo, hi);
                    if (t == vj) break;
                    const double delta = t - vj;
                    double F1 = prob_.c_r * std::abs(t);
                    bool ok = true;
                    for (Index i = 0; i < n_; ++i) {
                        znew(i) = z(i) + delta * X_(i, j);
                    }
                    try {
                        F1 += loss_.total(znew);
                    } catch (const DomainError&) {
                        ok = false;
                    }
                    if (ok && F1 <= F0) {
                        z.swap(znew);
                        if (prob_.domain.weighted_l1_cap) wsum += weights_(j) * (std::abs(t) - std::abs(vj));
                        v(j) = t;
                        smooth = F1 - prob_.c_r * std::abs(t);
                        max_move = std::max(max_move, std::abs(delta));
                        break;
                    }
                    h *= 2.0;
                }
            }
            ++run.sweeps;
            z = X_ * v; // drop accumulated drift
            smooth = loss_.total(z);
            const double F = smooth + prob_.c_r * v.lpNorm<1>();
            run.trace.push_back(F);
            run.residuals.push_back(residual_masked(v, z, mask));
            if (max_move == 0.0) break;
            flat = (F_prev - F <= 1e-15 * std::max(1.0, std::abs(F))) ? flat + 1 : 0;
            F_prev = F;
            if (flat >= 5) break;
        }
        run.residual = run.residuals.back();
        run.converged = run.residual <= tol_;
        run.objective = run.trace.back();
        run.v = std::move(v);
        return run;
    }

    // 1-D prox of a convex row loss restricted to I.
    double prox_row(Index i, double c, double rho) const
    {
        const auto& I = prob_.domain.interval;
        auto phi = [&](double t) { return loss_.d1(i, t) + rho * (t - c); };
        double x0 = std::clamp(c, I.lo, I.hi);
        double f0 = phi(x0);
        if (f0 == 0.0) return x0;
        double a = x0, b = x0;
        double step = std::max(1.0, std::abs(x0));
        if (f0 > 0.0) {
            while (true) {
                a = std::max(I.lo, b - step);
                if (phi(a) <= 0.0) break;
                if (a == I.lo) return I.lo;
                b = a;
                step *= 2.0;
            }
        } else {
            while (true) {
                b = std::min(I.hi, a + step);
                if (phi(b) >= 0.0) break;
                if (b == I.hi) return I.hi;
                a = b;
                step *= 2.0;
            }
        }
        double x = 0.5 * (a + b);
        for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(x)); ++it) {
            const double fx = phi(x);
            if (fx == 0.0) return x;
            (fx > 0.0 ? b : a) = x;
            const double dfx = loss_.d2(i, x) + rho;
            double nx = x - fx / dfx;
            if (!(nx > a && nx < b)) nx = 0.5 * (a + b);
            x = nx;
        }
        return x;
    }

    // ADMM on z = Xv (and v = w for the weighted cap) for convex problems.
    Vector admm(const Vector& v0, const std::vector<char>& mask, int& iterations) const
    {
        const auto& I = prob_.domain.interval;
        const bool cap = prob_.domain.weighted_l1_cap.has_value();
        Vector v = v0;
        Vector Xv = X_ * v;
        Vector z = Xv.cwiseMax(I.lo).cwiseMin(I.hi);
        Vector u = Vector::Zero(n_);
        Vector w = v, u2 = Vector::Zero(p_);
        double curvature = 0.0;
        for (Index i = 0; i < n_; ++i) curvature += std::max(loss_.d2(i, z(i)), 0.0);
        double rho = std::max(curvature / n_, 1e-2);
        const int max_outer = 20000;
        for (int it = 0; it < max_outer; ++it) {
            ++iterations;
            // v-update: lasso by coordinate descent.
            Vector r = (z - u) - Xv;
            for (int sweep = 0; sweep < 500; ++sweep) {
                double change = 0.0;
                for (Index j = 0; j < p_; ++j) {
                    if (!mask[j]) continue;
                    const double a = rho * colsq_(j) + (cap ? rho : 0.0);
                    double b = rho * (X_.col(j).dot(r) + colsq_(j) * v(j));
                    if (cap) b += rho * (w(j) - u2(j));
                    const double t = soft_threshold(b, prob_.c_r) / a;
                    const double d = t - v(j);
                    if (d != 0.0) {
                        r -= d * X_.col(j);
                        v(j) = t;
                        change = std::max(change, std::abs(d));
                    }
                }
                if (change <= 1e-14 * (1.0 + v.lpNorm<Eigen::Infinity>())) break;
            }
            Xv = X_ * v;
            // z-update
            const Vector z_old = z;
            for (Index i = 0; i < n_; ++i) z(i) = prox_row(i, Xv(i) + u(i), rho);
            if (cap) w = project_weighted_l1(v + u2, *prob_.domain.weighted_l1_cap, weights_);
            u += Xv - z;
            if (cap) u2 += v - w;
            double primal = (Xv - z).lpNorm<Eigen::Infinity>();
            if (cap) primal = std::max(primal, (v - w).lpNorm<Eigen::Infinity>());
            const double dual = rho * (X_.transpose() * (z - z_old)).lpNorm<Eigen::Infinity>();
            if (primal <= 1e-11 * (1.0 + z.lpNorm<Eigen::Infinity>()) && dual <= 0.1 * tol_) break;
            if (it % 10 == 9) {
                if (primal > 10.0 * dual) {
                    rho *= 2.0;
                    u /= 2.0;
                    u2 /= 2.0;
                } else if (dual > 10.0 * primal) {
                    rho /= 2.0;
                    u *= 2.0;
                    u2 *= 2.0;
                }
            }
        }
        return v;
    }

    double residual_masked(const Vector& v, const Vector& z, const std::vector<char>& mask) const
    {
        const Vector g = gradient(z);
        return stationarity(v, z, g, mask);
    }

    double stationarity(const Vector& v, const Vector& z, const Vector& g, const std::vector<char>& mask) const
    {
        const auto& I = prob_.domain.interval;
        const double c_r = prob_.c_r;
        // Active constraint normals: +X_i at the upper end, -X_i at the lower.
        std::vector<std::pair<Index, double>> active;
        for (Index i = 0; i < n_; ++i) {
            if (std::isfinite(I.hi) && z(i) >= I.hi - 1e-9 * (1.0 + std::abs(I.hi))) active.push_back({i, 1.0});
            else if (std::isfinite(I.lo) && z(i) <= I.lo + 1e-9 * (1.0 + std::abs(I.lo))) active.push_back({i, -1.0});
        }
        const bool cap_tight = prob_.domain.weighted_l1_cap &&
                               v.cwiseAbs().dot(weights_) >= *prob_.domain.weighted_l1_cap * (1.0 - 1e-9);

        Vector lambda = Vector::Zero(static_cast<Index>(active.size()));
        double nu = 0.0;
        // Coordinates within zero_tol of 0 may use either branch of the
        // subdifferential; the solver leaves such crumbs when rows are tight.
        const double zero_tol = 1e-9 * (1.0 + v.lpNorm<Eigen::Infinity>());
        auto residual_vec = [&](const Vector& gw, double nu_) {
            Vector r = Vector::Zero(p_);
            for (Index j = 0; j < p_; ++j) {
                if (!mask[j]) continue;
                const double thr = c_r + nu_ * weights_(j);
                const double at_zero = soft_threshold(gw(j), thr);
                if (v(j) == 0.0) {
                    r(j) = at_zero;
                    continue;
                }
                r(j) = gw(j) + thr * (v(j) > 0.0 ? 1.0 : -1.0);
                if (std::abs(v(j)) <= zero_tol && std::abs(at_zero) < std::abs(r(j))) r(j) = at_zero;
            }
            return r;
        };
        auto corrected = [&](const Vector& lam) {
            Vector gw = g;
            for (std::size_t k = 0; k < active.size(); ++k) {
                gw += active[k].second * lam(k) * X_.row(active[k].first).transpose();
            }
            return gw;
        };

        if (!active.empty() || cap_tight) {
            double L = 1e-300;
            for (const auto& [i, s] : active) L += X_.row(i).squaredNorm();
            if (cap_tight) L += weights_.squaredNorm();
            const double step = 1.0 / L;
            for (int it = 0; it < 5000; ++it) {
                const Vector gw = corrected(lambda);
                const Vector r = residual_vec(gw, nu);
                if (r.lpNorm<Eigen::Infinity>() <= 1e-3 * tol_) break;
                for (std::size_t k = 0; k < active.size(); ++k) {
                    const double grad = active[k].second * X_.row(active[k].first).dot(r);
                    lambda(k) = std::max(0.0, lambda(k) - step * grad);
                }
                if (cap_tight) {
                    double grad = 0.0;
                    for (Index j = 0; j < p_; ++j) {
                        if (!mask[j] || r(j) == 0.0) continue;
                        const double sgn = v(j) != 0.0 ? (v(j) > 0.0 ? 1.0 : -1.0) : -(gw(j) > 0.0 ? 1.0 : -1.0);
                        grad += r(j) * weights_(j) * sgn;
                    }
                    nu = std::max(0.0, nu - step * grad);
                }
            }
        }
        const Vector gw = corrected(lambda);
        if (convex_) return residual_vec(gw, nu).lpNorm<Eigen::Infinity>();

        // Proximal gradient mapping at step 1/L.
        double L = 1e-12;
        for (Index j = 0; j < p_; ++j) {
            double c = 0.0;
            for (Index i = 0; i < n_; ++i) c += X_(i, j) * X_(i, j) * std::abs(loss_.d2(i, z(i)));
            L = std::max(L, c);
        }
        double worst = 0.0;
        for (Index j = 0; j < p_; ++j) {
            if (!mask[j]) continue;
            const double thr = c_r + nu * weights_(j);
            const double step = v(j) - soft_threshold(v(j) - gw(j) / L, thr / L);
            worst = std::max(worst, L * std::abs(step));
        }
        return worst;
    }

    // Full solve from one start: coordinate descent, then ADMM when the
    // coordinate steps stall against coupled constraints.
    Run solve_from(const Vector& start, const std::vector<char>& mask, int& iterations) const
    {
        Run run = coordinate_descent(start, mask, max_iter_);
        iterations += run.sweeps;
        if (run.converged || !convex_) return run;
        const bool constrained = prob_.domain.interval.bounded() || std::isfinite(prob_.domain.interval.lo) ||
                                 std::isfinite(prob_.domain.interval.hi) || prob_.domain.weighted_l1_cap;
        if (!constrained) return run;
        for (int round = 0; round < 3 && !run.converged; ++round) {
            const Vector target = admm(run.v, mask, iterations);
            // ADMM iterates are feasible only up to its primal residual, so
            // also pull the target in from the anchor point.
            Vector candidate = pull_inside(run.v, target);
            if (anchor_) {
                Vector alt = pull_inside(*anchor_, target);
                if (penalized(alt) < penalized(candidate)) candidate = std::move(alt);
            }
            Run next = coordinate_descent(candidate, mask, max_iter_);
            iterations += next.sweeps;
            if (next.objective < run.objective || (next.objective == run.objective && next.residual < run.residual)) {
                for (double F : next.trace) {
                    if (F <= run.trace.back()) run.trace.push_back(F);
                }
                run.residuals.insert(run.residuals.end(), next.residuals.begin(), next.residuals.end());
                run.v = std::move(next.v);
                run.objective = run.trace.back();
                run.residual = next.residual;
                run.converged = next.converged;
            } else {
                break;
            }
        }
        return run;
    }

    Vector ridge_start(const Vector& base) const
    {
        // Linearize the link at 0 and solve a lightly regularized least squares.
        double slope = 1.0, offset = 0.0;
        if (const auto* f = std::get_if<AnalyticLink>(&prob_.link)) {
            slope = f->derivative(0.0);
            offset = f->value(0.0);
        }
        if (slope == 0.0) return base;
        const Vector target = (prob_.y.array() - offset) / slope;
        Eigen::MatrixXd gram = X_.transpose() * X_;
        const double ridge = 1e-3 * gram.trace() / p_ + 1e-12;
        gram.diagonal().array() += ridge;
        const Vector v = gram.ldlt().solve(X_.transpose() * target);
        return pull_inside(base, v);
    }

    Vector random_start(const Vector& base, Rng& rng) const
    {
        Vector v(p_);
        const double scale = 1.0 / X_.colwise().norm().maxCoeff() * std::sqrt(static_cast<double>(n_));
        for (Index j = 0; j < p_; ++j) v(j) = rng.normal() * scale / std::sqrt(static_cast<double>(p_));
        return pull_inside(base, v);
    }

    const EstimationProblem& prob_;
    RowLoss loss_;
    const Matrix& X_;
    Index n_, p_;
    bool convex_;
    Vector weights_;
    Vector colsq_;
    double tol_;
    int max_iter_;
    mutable Vector scratch_;
    std::optional<Vector> anchor_; // feasible point, ideally interior
};

} // namespace

double smooth_objective(const EstimationProblem& prob, const Vector& z)
{
    RowLoss loss(prob);
    loss.check_all(z);
    return loss.total(z);
}

double objective(const EstimationProblem& prob, const Vector& v)
{
    prob.validate();
    if (v.size() != prob.X.cols()) throw ValidationError("objective: dimension mismatch");
    return smooth_objective(prob, prob.X.apply(v)) + prob.c_r * v.lpNorm<1>();
}

Vector smooth_gradient(const EstimationProblem& prob, const Vector& v)
{
    prob.validate();
    RowLoss loss(prob);
    const Vector z = prob.X.apply(v);
    loss.check_all(z);
    Vector r(z.size());
    for (Index i = 0; i < z.size(); ++i) r(i) = loss.d1(i, z(i));
    return prob.X.apply_transpose(r);
}

double optimality_residual(const EstimationProblem& prob, const Vector& v)
{
    prob.validate();
    Solver solver(prob, {});
    const Vector z = prob.X.apply(v);
    const std::vector<char> mask(prob.X.cols(), 1);
    return solver.residual_masked(v, z, mask);
}

FitResult fit(const EstimationProblem& prob, const FitOptions& opts)
{
    prob.validate();
    const Index p = prob.X.cols();
    Solver solver(prob, opts);
    const std::vector<char> all(p, 1);

    Vector base = solver.feasible_base();
    solver.anchor_ = base;
    std::vector<Vector> starts;
    if (opts.warm_start) {
        if (opts.warm_start->size() != p) throw ValidationError("fit: warm start has wrong dimension");
        starts.push_back(solver.feasible(*opts.warm_start, 0.0) ? *opts.warm_start
                                                                 : solver.pull_inside(base, *opts.warm_start));
    }
    starts.push_back(base);
    if (!solver.convex()) {
        Rng rng(opts.seed, 0x5eed);
        starts.push_back(solver.ridge_start(base));
        while (static_cast<int>(starts.size()) < opts.starts + (opts.warm_start ? 1 : 0)) {
            starts.push_back(solver.random_start(base, rng));
        }
    } else if (starts.size() == 2 && solver.penalized(starts[1]) < solver.penalized(starts[0])) {
        // Convex: a single run from the better of warm start and base.
        std::swap(starts[0], starts[1]);
    }
    if (solver.convex()) starts.resize(1);

    FitResult result;
    result.convex = solver.convex();
    Run best;
    for (std::size_t k = 0; k < starts.size(); ++k) {
        Run run = solver.solve_from(starts[k], all, result.iterations);
        if (run.objective < best.objective) {
            best = std::move(run);
            result.start_index = static_cast<int>(k);
        }
    }

    if (prob.domain.support_cap && support_size(best.v) > *prob.domain.support_cap) {
        // Keep the h largest coordinates and refit on that support.
        const Index h = *prob.domain.support_cap;
        std::vector<Index> order(p);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return std::abs(best.v(a)) > std::abs(best.v(b)); });
        std::vector<char> mask(p, 0);
        Vector truncated = Vector::Zero(p);
        for (Index k = 0; k < h; ++k) {
            mask[order[k]] = 1;
            truncated(order[k]) = best.v(order[k]);
        }
        Vector start = solver.pull_inside(base, truncated);
        if (!solver.feasible(start, opts.feasibility_tol)) start = Vector::Zero(p);
        best = solver.solve_from(start, mask, result.iterations);
        result.support_cap_heuristic = true;
    }

    result.beta_hat = best.v;
    result.objective_value = best.objective;
    result.objective_trace = std::move(best.trace);
    result.residual_trace = std::move(best.residuals);
    result.optimality_residual = best.residual;
    result.converged = best.converged;
    result.domain_report = domain_contains(result.beta_hat, prob.X, prob.domain, opts.feasibility_tol);
    return result;
}

// ---------------------------------------------------------------------------

InequalityContext InequalityContext::for_problem(const EstimationProblem& prob, Vector beta_true, Vector eps)
{
    if (beta_true.size() != prob.X.cols() || eps.size() != prob.X.rows()) {
        throw ValidationError("inequality context: dimension mismatch");
    }
    InequalityContext ctx;
    ctx.G = prob.kind == ProblemKind::Mle ? Aggregate::Sum : Aggregate::SquaredNorm;
    ctx.beta_true = std::move(beta_true);
    ctx.eps = std::move(eps);
    return ctx;
}

InequalityCheck check_basic_inequality(const InequalityContext& ctx, const EstimationProblem& prob, const Vector& v)
{
    const Vector zv = prob.X.apply(v);
    const Vector zb = prob.X.apply(ctx.beta_true);
    const Index n = zv.size();
    double lhs = 0.0, inner = 0.0, scale = 0.0;
    if (ctx.G == InequalityContext::Aggregate::Sum) {
        const auto& link = std::get<ExpFamilyLink>(prob.link);
        for (Index i = 0; i < n; ++i) {
            const auto cb = link.eval(zb(i));
            const double psi_v = link.lambda(zv(i)) - cb.d1 * zv(i);
            const double psi_b = cb.value - cb.d1 * zb(i);
            lhs += psi_v - psi_b;
            scale += std::abs(psi_v) + std::abs(psi_b);
            inner += ctx.eps(i) * 0.5 * (zv(i) - zb(i));
        }
    } else {
        const auto& f = std::get<AnalyticLink>(prob.link);
        for (Index i = 0; i < n; ++i) {
            const double d = f.value(zv(i)) - f.value(zb(i));
            lhs += d * d;
            inner += ctx.eps(i) * d;
            scale += std::abs(ctx.eps(i) * d);
        }
    }
    const double l1v = v.lpNorm<1>(), l1b = ctx.beta_true.lpNorm<1>();
    InequalityCheck out;
    out.lhs = lhs;
    out.rhs = 2.0 * std::abs(inner) - prob.c_r * (l1v - l1b);
    scale += std::abs(lhs) + 2.0 * std::abs(inner) + prob.c_r * (l1v + l1b);
    out.holds = out.lhs <= out.rhs + 1e-10 * scale;
    return out;
}

Vector project_weighted_l1(const Vector& v, double cap, const Vector& weights)
{
    if (!(cap > 0.0)) throw ValidationError("project_weighted_l1: cap must be positive");
    if (weights.size() != v.size() || !(weights.array() > 0.0).all()) {
        throw ValidationError("project_weighted_l1: weights must be positive and match v");
    }
    if (v.cwiseAbs().dot(weights) <= cap) return v;
    // Solution is u_j = sign(v_j) max(|v_j| - lam w_j, 0) with sum w_j |u_j| = cap.
    auto mass = [&](double lam) {
        return (v.cwiseAbs() - lam * weights).cwiseMax(0.0).dot(weights);
    };
    double lo = 0.0, hi = (v.cwiseAbs().array() / weights.array()).maxCoeff();
    for (int it = 0; it < 200 && hi - lo > 1e-16 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) > cap ? lo : hi) = mid;
    }
    double lam = 0.5 * (lo + hi);
    // Solve exactly on the identified active set.
    double num = -cap, den = 0.0;
    for (Index j = 0; j < v.size(); ++j) {
        if (std::abs(v(j)) > lam * weights(j)) {
            num += weights(j) * std::abs(v(j));
            den += weights(j) * weights(j);
        }
    }
    if (den > 0.0) {
        const double exact = num / den;
        bool consistent = true;
        for (Index j = 0; j < v.size(); ++j) {
            const bool in = std::abs(v(j)) > lam * weights(j);
            if (in != (std::abs(v(j)) > exact * weights(j)) && std::abs(std::abs(v(j)) - exact * weights(j)) > 1e-12) {
                consistent = false;
            }
        }
        if (consistent) lam = exact;
    }
    Vector u(v.size());
    for (Index j = 0; j < v.size(); ++j) u(j) = soft_threshold(v(j), lam * weights(j));
    return u;
}

Vector project_weighted_l1(const Vector& v, double cap, const DesignMatrix& X)
{
    if (v.size() != X.cols()) throw ValidationError("project_weighted_l1: dimension mismatch");
    return project_weighted_l1(v, cap, X.col_linf());
}

} // namespace sparsenl
