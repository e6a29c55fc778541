#pragma once
#include <sparsenl/design.hpp>
#include <sparsenl/links.hpp>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sparsenl {

// Generators for bounded mean-zero noise. Each draws values of magnitude at
// most sigma (logistic residuals lie in an interval of length 1), so
// Hoeffding gives the tail bound with this sigma and c_eps = 2.
enum class NoiseKind { Rademacher, Uniform, TruncatedGaussian, LogisticBernoulliResidual };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& name);

/// Tail parameters: Pr{|a'eps| > t |a|_2} <= c_eps exp(-t^2 / (2 sigma^2)).
struct NoiseSpec
{
    double sigma = 1.0;
    double c_eps = 2.0;
    NoiseKind kind = NoiseKind::Rademacher;
};

enum class Proposition {
    Basic,  // curvature in v: uses c2, kappa_r = 4 c1 / c2
    Basic2, // curvature in Xv: uses c3 and the coherence condition on tau
};

std::string to_string(Proposition prop);

struct Feasibility
{
    bool tau_condition = false;      // a + b mu > 2 b (3 + 4 tau) s mu
    bool basic_feasible = false; // a + b mu > 6 b s mu (Basic2), or c2 > 0 (Basic)
};

struct BoundCertificate
{
    Proposition proposition = Proposition::Basic;
    double c0 = 2.0;
    double q = 0.05;
    double c1 = 0.0;
    std::optional<double> c2;
    std::optional<double> c3;
    std::optional<double> tau;
    double c_r = 0.0;
    std::optional<double> kappa_r;
    Index s = 0;
    Index n = 0;
    Feasibility feasibility;
    std::optional<CoherenceStats> coherence;
    std::map<std::string, std::string> provenance;
    std::vector<std::string> diagnostics;

    // kappa_r sqrt(s / n), present only when kappa_r is.
    std::optional<double> radius() const;
    double confidence() const { return 1.0 - c0 * q; }
};

// ---------------------------------------------------------------------------
// c1

// sigma sqrt(ln(p/q) / (2n)) max_j |V_j|_2
double c1_expfamily(const NoiseSpec& noise, const DesignMatrix& X, double q);

struct AnalyticC1Params
{
    enum class Variant { BoundedDisc, General };
    Variant variant = Variant::BoundedDisc;
    double theta = 0.5;                // bounded disc: series radius theta * r_c
    double r_c = 1.0;                  // analyticity radius (about 0, or uniformly about I)
    double r_c1 = 0.5;                 // general: r_1 in (0, r_c)
    double q = 0.05;
    std::optional<double> delta_D;     // general: upper bound on delta(D)

    // ln[p (1 + 1/q)]
    double lambda_p(Index p) const;
    // 4 delta(D) / r_1 + 1
    double Q() const;
};

struct SeriesValue
{
    double value = 0.0;   // partial + tail
    double partial = 0.0;
    double tail = 0.0;    // certified bound on the omitted terms
    int terms = 0;
};

inline constexpr double kSeriesRelTol = 1e-9;

SeriesValue c1_analytic_bounded(const AnalyticLink& link, const DesignMatrix& X,
                                const AnalyticC1Params& params, const NoiseSpec& noise);

// I is the interval on which d_k = sup_I |f^{(k)}|/k! is taken.
SeriesValue c1_analytic_general(const AnalyticLink& link, const DesignMatrix& X,
                                const AnalyticC1Params& params, const NoiseSpec& noise,
                                const Interval& I);

// ---------------------------------------------------------------------------
// c2, c3

// (1/2) inf_I Lambda''. Throws when it is zero.
double c3_expfamily(const ExpFamilyLink& link, const Interval& I);
// d(f, I)^2. Throws when the slope bound is zero.
double c3_analytic(const AnalyticLink& link, const Interval& I);
double c3_constant(const LinkModel& link, const Interval& I);

// gamma(m) = a - (m - 1) b mu: lower bound on |Xd|^2 / (n |d|^2) over d with
// at most m nonzeros. Expanding |Xd|^2 over column pairs,
//   |Xd|^2 >= (a + b mu) n |d|^2 - b mu n |d|_1^2 >= (a - (m-1) b mu) n |d|^2,
// using |V_i'V_j| <= mu |V_i||V_j| <= b mu n and |d|_1^2 <= m |d|^2.
double restricted_gamma(const CoherenceStats& stats, Index m);

// c2 = c3 gamma(m) when gamma(m) > 0.
std::optional<double> c2_from_coherence(double c3, const CoherenceStats& stats, Index m);

// ---------------------------------------------------------------------------
// certificates

BoundCertificate certify_prop_basic(double c1, double c2, Index n, Index s, double c0, double q);

BoundCertificate certify_prop_basic2(double c1, double c3, const CoherenceStats& stats, Index s,
                                     double tau, Index n, double c0, double q);

// Whether a + b mu > 2 b (3 + 4 tau) s mu.
bool tau_condition_holds(const CoherenceStats& stats, Index s, double tau);

// sup{tau > 0 : tau_condition_holds}; +inf when mu = 0 or s = 0; nullopt when no
// tau > 0 works.
std::optional<double> max_feasible_tau(const CoherenceStats& stats, Index s);

// min(1, max_feasible_tau / 2)
std::optional<double> default_tau(const CoherenceStats& stats, Index s);

/// Everything needed to derive a certificate from a problem instance.
struct CertificateRequest
{
    Proposition proposition = Proposition::Basic2;
    DesignMatrix X;
    LinkModel link;
    Interval interval;
    NoiseSpec noise;
    Index s = 1;
    double q = 0.05;
    double c0 = 2.0;
    std::optional<double> tau;
    // Basic: support cap h of the search domain; m = h + s.
    std::optional<Index> support_cap;
    // Analytic links only.
    AnalyticC1Params analytic;
};

// Builds the certificate; exp-family links use c0 = c_eps. Infeasible
// instances come back with the feasibility flags cleared and diagnostics set
// rather than throwing.
BoundCertificate certify(const CertificateRequest& request);

// Largest h >= 1 with gamma(h + s) > 0.
std::optional<Index> max_support_cap(const CoherenceStats& stats, Index s, Index p);

// ---------------------------------------------------------------------------
// tail condition check

struct TailCheckRow
{
    double t;
    Index direction;
    double empirical;  // fraction of draws with |a'eps| > t
    double bound;      // c_eps exp(-t^2 / (2 sigma^2))
    double std_error;  // binomial standard error of `empirical`
    bool flagged;      // empirical > bound + 3 std_error
};

struct TailCheckReport
{
    std::vector<TailCheckRow> rows;
    bool violation = false;
    Index draws = 0;
};

// samples: one noise vector per row (draws x n). directions: unit vectors as
// columns (n x m).
TailCheckReport tail_check(const NoiseSpec& declared, const Matrix& samples, const Matrix& directions,
                           const std::vector<double>& t_grid);

} // namespace sparsenl
