#pragma once
#include <sparsenl/certificates.hpp>
#include <sparsenl/corrupted.hpp>
#include <sparsenl/estimators.hpp>
#include <sparsenl/simulation.hpp>
#include <filesystem>
#include <json.hpp>

// JSON mapping for every configuration and report type. Relative file paths
// inside a configuration resolve against `base`, normally the directory of
// the configuration file. Unknown keys are rejected so typos surface early.
namespace sparsenl::serialize {

using json = nlohmann::json;

json read_json_file(const std::filesystem::path& path);

// [lo, hi]; infinite ends are written and accepted as "-inf" / "inf".
Interval interval_from_json(const json& j);
json to_json(const Interval& I);

/// {"kind": logistic|gaussian|poisson|identity|affine|exp|poly|sigmoid,
///  "coeffs": [...], "slope": a, "intercept": b, "scale": s,
///  "interval": [lo, hi], "radius": r, "max_order": K}
struct LinkSpec
{
    LinkModel link = AnalyticLink::identity();
    std::optional<double> radius; // analyticity radius used by certificates
};
LinkSpec link_from_json(const json& j);

DomainSpec domain_from_json(const json& j);
json to_json(const DomainSpec& D);
json to_json(const DomainReport& report);

NoiseSpec noise_from_json(const json& j);
json to_json(const NoiseSpec& noise);

CorruptionSpec corruption_from_json(const json& j);
json to_json(const CorruptionSpec& spec);

AnalyticC1Params analytic_from_json(const json& j, const std::optional<double>& link_radius);
Proposition proposition_from_json(const json& j);

json to_json(const CoherenceStats& stats);
json to_json(const BoundCertificate& cert);
json to_json(const FitResult& result);
json to_json(const CoverageReport& report);
json to_json(const ScalingReport& report);
json smoothing_diagnostics(const SmoothedLink& g, const Interval& I);

/// Certify configuration: either plug-in constants
///   {"proposition", "c1", "c2" | "c3" + "coherence", "s", "n", "tau", "q", "c0"}
/// or a data-derived request with "matrix", "link", "interval", "noise".
BoundCertificate certify_from_json(const json& j, const std::filesystem::path& base);

struct ProblemSpec
{
    EstimationProblem problem;
    FitOptions options;
    std::optional<BoundCertificate> certificate; // when c_r came from one
};
ProblemSpec problem_from_json(const json& j, const std::filesystem::path& base);

ExperimentConfig experiment_from_json(const json& j, const std::filesystem::path& base);

} // namespace sparsenl::serialize
