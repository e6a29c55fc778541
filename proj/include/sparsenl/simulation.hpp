#pragma once
#include <sparsenl/certificates.hpp>
#include <sparsenl/corrupted.hpp>
#include <sparsenl/estimators.hpp>
#include <sparsenl/rng.hpp>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sparsenl {

struct DesignConfig
{
    std::string kind = "rademacher"; // gaussian | rademacher | orthogonal | file
    Index n = 200;
    Index p = 50;
    std::string path;                // kind == file
    bool normalize = true;           // scale columns to |V_j|_2 = sqrt(n)
};

struct TruthConfig
{
    Index s = 2;
    double magnitude = 1.0;
    std::string signs = "random";    // random | positive | alternating
};

struct CertificateConfig
{
    Proposition proposition = Proposition::Basic2;
    double q = 0.05;
    double c0 = 2.0;                 // ignored for exp-family links (c0 = c_eps)
    std::optional<double> tau;
    AnalyticC1Params analytic;
    // Multiplies kappa_r; values below 1 give a negative control.
    double kappa_scale = 1.0;
};

struct ExperimentConfig
{
    DesignConfig design;
    TruthConfig truth;
    ProblemKind kind = ProblemKind::Lse;
    LinkModel link = AnalyticLink::identity();
    NoiseSpec noise;
    std::optional<CorruptionSpec> corruption;
    DomainSpec domain;
    // Basic proposition: fit over the largest support cap with gamma(h + s) > 0
    // unless domain.support_cap is given.
    CertificateConfig certificate;
    std::optional<double> c_r;       // overrides the certified c_r
    int replicates = 100;
    std::uint64_t seed = 0;
    FitOptions fit;
    std::vector<Index> n_grid;       // scaling only
    int threads = 0;                 // 0: hardware concurrency

    void validate() const;
};

// Columns scaled to |V_j|_2 = sqrt(n) unless normalize is false.
DesignMatrix generate_design(const DesignConfig& cfg, std::uint64_t seed);
Vector generate_truth(Index p, const TruthConfig& cfg, Rng& rng);
// Bounded generators only; logistic residuals come from generate_response.
Vector generate_noise(const NoiseSpec& spec, Index n, Rng& rng);

struct Replicate
{
    Vector y;
    Vector eps;      // y - E[y | X], the noise entering the basic inequality
};

Replicate generate_response(const ExperimentConfig& cfg, const DesignMatrix& X, const Vector& beta, Rng& rng);

struct ReplicateRecord
{
    int index = 0;
    double error = 0.0;           // |beta_hat - beta|_2
    double radius = 0.0;          // kappa_r sqrt(s / n)
    bool within = false;          // error <= radius + 1e-12 (1 + |beta|_2)
    bool ineq_holds = false;
    bool objective_vs_truth = false; // objective(beta_hat) <= objective(beta)
    double objective_hat = 0.0;
    double objective_truth = 0.0;
    Index support_size = 0;
    bool converged = false;
    double residual = 0.0;
};

struct CoverageSummary
{
    int replicates = 0;
    int covered = 0;
    double rate = 0.0;
    double target = 0.0;          // 1 - c0 q
    double ci_low = 0.0;          // Wilson 95%
    double ci_high = 0.0;
    double p_value = 1.0;         // one-sided binomial test of rate >= target
    bool passes = false;          // p_value >= 0.01
    int ineq_violations = 0;      // among records with objective_vs_truth
};

struct CoverageReport
{
    BoundCertificate certificate;
    CoherenceStats coherence;
    double c_r = 0.0;
    std::optional<Index> support_cap;
    std::vector<ReplicateRecord> records;
    CoverageSummary summary;
};

// Throws InfeasibleCertificate carrying the certificate diagnostics.
CoverageReport run_coverage(const ExperimentConfig& cfg);

struct ScalingPoint
{
    Index n = 0;
    double median_error = 0.0;
    double median_error_2s = 0.0;  // same n with twice the sparsity
    double c_r = 0.0;
};

struct ScalingReport
{
    std::vector<ScalingPoint> points;
    double slope = 0.0;            // least squares slope of log median error on log n
    double sparsity_ratio = 0.0;   // geometric mean of median_error_2s / median_error
};

// When every median error is at most 1e-6 the report is flat: slope 0, ratio 1.
ScalingReport run_scaling(const ExperimentConfig& cfg);

// Binomial helpers used by the coverage summary.
double binomial_cdf(int k, int trials, double prob);
std::pair<double, double> wilson_interval(int successes, int trials, double z = 1.959963984540054);
CoverageSummary summarize(const std::vector<ReplicateRecord>& records, double target);

// Per-replicate CSV with a header row; floats use 17 significant digits.
std::string coverage_csv(const CoverageReport& report);

} // namespace sparsenl
