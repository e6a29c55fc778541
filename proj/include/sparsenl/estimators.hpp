#pragma once
#include <sparsenl/design.hpp>
#include <sparsenl/links.hpp>
#include <cstdint>
#include <optional>
#include <vector>

namespace sparsenl {

enum class ProblemKind { Mle, Lse };

/**
 * l1-regularized estimation over a search domain D.
 *
 *   mle: minimize  sum_i Lambda(X_i'v) - y'Xv + c_r |v|_1
 *   lse: minimize  |y - f(Xv)|_2^2 + c_r |v|_1
 *
 * subject to v in D. The mle kind requires an exponential-family link.
 */
struct EstimationProblem
{
    DesignMatrix X;
    Vector y;
    LinkModel link;
    DomainSpec domain;
    double c_r = 1.0;
    ProblemKind kind = ProblemKind::Lse;

    // Throws ValidationError on inconsistent dimensions, kinds, or c_r < 0.
    void validate() const;
    bool convex() const;
};

// Full penalized objective. Points outside D still evaluate as long as the
// link is defined there; throws DomainError otherwise.
double objective(const EstimationProblem& prob, const Vector& v);

// The smooth part only, as a function of z = Xv.
double smooth_objective(const EstimationProblem& prob, const Vector& z);

// Gradient of the smooth part with respect to v.
Vector smooth_gradient(const EstimationProblem& prob, const Vector& v);

struct FitOptions
{
    std::optional<double> tol;      // default 1e-8 convex, 1e-6 nonconvex
    int max_iter = 50000;
    int starts = 5;                 // nonconvex multi-start count
    std::uint64_t seed = 0;         // random starts
    std::optional<Vector> warm_start;
    double feasibility_tol = 1e-8;
};

struct FitResult
{
    Vector beta_hat;
    double objective_value = 0.0;
    std::vector<double> objective_trace;   // nonincreasing
    std::vector<double> residual_trace;
    double optimality_residual = 0.0;
    DomainReport domain_report;
    int iterations = 0;
    bool converged = false;
    bool convex = true;
    bool support_cap_heuristic = false;    // hard-threshold-and-polish pass ran
    int start_index = 0;                   // which start produced beta_hat
};

FitResult fit(const EstimationProblem& prob, const FitOptions& opts = {});

/**
 * Stationarity measure at v (max-norm).
 *
 * Convex problems: distance from 0 to grad + c_r d|v|_1 + N_D(v), with the
 * normal cone spanned by the active rows (and the weighted cap when tight);
 * the multipliers are fitted by projected gradient, so the value is an upper
 * bound on the exact distance. Coordinates within 1e-9 (relative) of zero
 * are scored with whichever subgradient branch fits better. Nonconvex
 * problems: norm of the proximal
 * gradient mapping at step 1/L using the same multiplier-corrected gradient.
 */
double optimality_residual(const EstimationProblem& prob, const Vector& v);

/// Ingredients of the basic inequality
///   G(psi(Xv) - psi(Xb)) <= 2 |<eps, phi(Xv) - phi(Xb)>| - c_r (|v|_1 - |b|_1).
/// mle: G = sum, psi_i(z) = Lambda(z) - Lambda'(X_i'b) z, phi_i(z) = z / 2.
/// lse: G = |.|_2^2, psi_i = phi_i = f.
struct InequalityContext
{
    enum class Aggregate { Sum, SquaredNorm };
    Aggregate G = Aggregate::SquaredNorm;
    Vector beta_true;
    Vector eps;

    static InequalityContext for_problem(const EstimationProblem& prob, Vector beta_true, Vector eps);
};

struct InequalityCheck
{
    bool holds = false;
    double lhs = 0.0;
    double rhs = 0.0;
};

// `holds` allows a relative slack of 1e-10 on the magnitudes involved, so the
// algebraic consequence of objective(v) <= objective(beta) survives rounding.
InequalityCheck check_basic_inequality(const InequalityContext& ctx, const EstimationProblem& prob,
                                       const Vector& v);

// Euclidean projection onto {u : sum_j w_j |u_j| <= cap}, w_j = |V_j|_inf.
Vector project_weighted_l1(const Vector& v, double cap, const DesignMatrix& X);
Vector project_weighted_l1(const Vector& v, double cap, const Vector& weights);

// Soft threshold; ties at |x| == t go to 0.
inline double soft_threshold(double x, double t)
{
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

} // namespace sparsenl
