#include <sparsenl/simulation.hpp>
#include <sparsenl/error.hpp>
#include <sparsenl/io.hpp>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

namespace sparsenl {

namespace {

constexpr std::uint64_t kDesignStream = ~std::uint64_t{0};
constexpr std::uint64_t kTruthStream = ~std::uint64_t{1};

// Runs fn(k) for k = 0..count-1 on a small pool. Results are written by
// index, so the outcome does not depend on the thread count.
template <class Fn>
void parallel_for(int count, int threads, Fn&& fn)
{
    if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    threads = std::min(threads, std::max(count, 1));
    std::vector<std::exception_ptr> errors(count);
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k = next++; k < count; k = next++) {
            try {
                fn(k);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

double median(std::vector<double> v)
{
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

bool is_logistic(const LinkModel& link)
{
    const auto* e = std::get_if<ExpFamilyLink>(&link);
    return e && e->kind() == ExpFamilyLink::Kind::Logistic;
}

// Everything about an experiment that does not change across replicates.
struct Setup
{
    DesignMatrix X;
    Vector beta;
    LinkModel fit_link;
    std::optional<SmoothedLink> smoothed;
    NoiseSpec cert_noise;
    DomainSpec domain;
    BoundCertificate certificate;
    double c_r = 0.0;
};

Setup prepare(const ExperimentConfig& cfg, DesignMatrix X, Index s)
{
    Rng truth_rng(cfg.seed, kTruthStream);
    TruthConfig truth = cfg.truth;
    truth.s = s;
    Vector beta = generate_truth(X.cols(), truth, truth_rng);

    LinkModel fit_link = cfg.link;
    std::optional<SmoothedLink> smoothed;
    NoiseSpec cert_noise = cfg.noise;
    if (is_logistic(cfg.link)) {
        cert_noise = {0.5, 2.0, NoiseKind::LogisticBernoulliResidual};
    } else if (const auto* e = std::get_if<ExpFamilyLink>(&cfg.link);
               e && e->kind() == ExpFamilyLink::Kind::Poisson) {
        throw ValidationError("simulation: poisson responses are not bounded; no tail constants available");
    }
    if (cfg.corruption) {
        const auto& f = std::get<AnalyticLink>(cfg.link);
        if (!cfg.domain.interval.subset_of({-cfg.corruption->R, cfg.corruption->R})) {
            throw ValidationError("simulation: domain interval must lie inside [-R, R]");
        }
        smoothed.emplace(f, *cfg.corruption);
        fit_link = smoothed->link();
        // Generators are bounded by sigma, so the bounded composition applies.
        cert_noise = composed_tail_bounded(cfg.noise.sigma, *cfg.corruption, f);
    }

    DomainSpec domain = cfg.domain;
    const auto stats = coherence_stats(X);
    if (cfg.certificate.proposition == Proposition::Basic && !domain.support_cap) {
        domain.support_cap = max_support_cap(stats, s, X.cols());
    }

    if (!domain_contains(beta, X, domain, 0.0).inside) {
        throw ValidationError("simulation: the true beta lies outside the search domain (X beta must stay in I)");
    }

    CertificateRequest req{
        .proposition = cfg.certificate.proposition,
        .X = X,
        .link = fit_link,
        .interval = cfg.domain.interval,
        .noise = cert_noise,
        .s = std::max<Index>(s, 1),
        .q = cfg.certificate.q,
        .c0 = cfg.certificate.c0,
        .tau = cfg.certificate.tau,
        .support_cap = domain.support_cap,
        .analytic = cfg.certificate.analytic,
    };
    BoundCertificate cert = certify(req);
    if (cert.kappa_r) *cert.kappa_r *= cfg.certificate.kappa_scale;
    const double c_r = cfg.c_r ? *cfg.c_r : cert.c_r;
    return Setup{std::move(X), std::move(beta), std::move(fit_link), std::move(smoothed), cert_noise,
                 std::move(domain), std::move(cert), c_r};
}

ReplicateRecord run_replicate(const ExperimentConfig& cfg, const Setup& setup, int k, std::uint64_t seed,
                              std::optional<double> radius)
{
    Rng rng(subseed(seed, static_cast<std::uint64_t>(k)));
    const Replicate data = generate_response(cfg, setup.X, setup.beta, rng);
    EstimationProblem prob{
        .X = setup.X,
        .y = data.y,
        .link = setup.fit_link,
        .domain = setup.domain,
        .c_r = setup.c_r,
        .kind = cfg.kind,
    };
    FitOptions opts = cfg.fit;
    opts.seed = subseed(seed ^ 0xf17, static_cast<std::uint64_t>(k));
    const FitResult fitted = fit(prob, opts);

    ReplicateRecord rec;
    rec.index = k;
    rec.error = (fitted.beta_hat - setup.beta).norm();
    rec.radius = radius.value_or(0.0);
    // Rounding allowance so exact recovery counts against a zero radius.
    const double slack = 1e-12 * (1.0 + setup.beta.norm());
    rec.within = radius && rec.error <= *radius + slack;
    rec.objective_hat = fitted.objective_value;
    rec.objective_truth = objective(prob, setup.beta);
    rec.objective_vs_truth = rec.objective_hat <= rec.objective_truth;
    const auto ctx = InequalityContext::for_problem(prob, setup.beta, data.eps);
    rec.ineq_holds = check_basic_inequality(ctx, prob, fitted.beta_hat).holds;
    rec.support_size = support_size(fitted.beta_hat);
    rec.converged = fitted.converged;
    rec.residual = fitted.optimality_residual;
    return rec;
}

} // namespace

void ExperimentConfig::validate() const
{
    if (design.n < 1 || design.p < 1) throw ValidationError("config: n and p must be >= 1");
    if (truth.s < 0 || truth.s > design.p) throw ValidationError("config: need 0 <= s <= p");
    if (replicates < 1) throw ValidationError("config: replicates must be >= 1");
    if (!(truth.magnitude >= 0.0)) throw ValidationError("config: magnitude must be >= 0");
    if (kind == ProblemKind::Mle && !std::holds_alternative<ExpFamilyLink>(link)) {
        throw ValidationError("config: mle requires an exponential-family link");
    }
    if (kind == ProblemKind::Lse && !std::holds_alternative<AnalyticLink>(link)) {
        throw ValidationError("config: lse requires an analytic link");
    }
    if (corruption && kind != ProblemKind::Lse) throw ValidationError("config: corruption requires lse");
    if (corruption) corruption->validate();
    if (!(noise.sigma >= 0.0)) throw ValidationError("config: sigma must be >= 0");
}

DesignMatrix generate_design(const DesignConfig& cfg, std::uint64_t seed)
{
    if (cfg.kind == "file") {
        Matrix M = io::read_matrix(cfg.path);
        if (cfg.normalize) {
            for (Index j = 0; j < M.cols(); ++j) {
                const double norm = M.col(j).norm();
                if (norm > 0.0) M.col(j) *= std::sqrt(static_cast<double>(M.rows())) / norm;
            }
        }
        return DesignMatrix(std::move(M));
    }
    if (cfg.n < 1 || cfg.p < 1) throw ValidationError("design: n and p must be >= 1");
    Rng rng(seed, kDesignStream);
    Matrix M(cfg.n, cfg.p);
    if (cfg.kind == "rademacher") {
        for (Index i = 0; i < cfg.n; ++i)
            for (Index j = 0; j < cfg.p; ++j) M(i, j) = rng.sign();
    } else if (cfg.kind == "gaussian" || cfg.kind == "orthogonal") {
        for (Index i = 0; i < cfg.n; ++i)
            for (Index j = 0; j < cfg.p; ++j) M(i, j) = rng.normal();
        if (cfg.kind == "orthogonal") {
            if (cfg.p > cfg.n) throw ValidationError("design: orthogonal columns need p <= n");
            const Eigen::MatrixXd dense = M;
            Eigen::HouseholderQR<Eigen::MatrixXd> qr(dense);
            M = qr.householderQ() * Eigen::MatrixXd::Identity(cfg.n, cfg.p);
        }
    } else {
        throw ValidationError("design: unknown kind '" + cfg.kind + "'");
    }
    if (cfg.normalize) {
        const double target = std::sqrt(static_cast<double>(cfg.n));
        for (Index j = 0; j < cfg.p; ++j) M.col(j) *= target / M.col(j).norm();
    }
    return DesignMatrix(std::move(M));
}

Vector generate_truth(Index p, const TruthConfig& cfg, Rng& rng)
{
    if (cfg.s < 0 || cfg.s > p) throw ValidationError("truth: need 0 <= s <= p");
    std::vector<Index> idx(p);
    std::iota(idx.begin(), idx.end(), 0);
    // Partial Fisher-Yates: the first s entries are a uniform s-subset.
    for (Index k = 0; k < cfg.s; ++k) {
        const Index pick = k + static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - k)));
        std::swap(idx[k], idx[pick]);
    }
    Vector beta = Vector::Zero(p);
    for (Index k = 0; k < cfg.s; ++k) {
        double sign = 1.0;
        if (cfg.signs == "random") sign = rng.sign();
        else if (cfg.signs == "alternating") sign = k % 2 ? -1.0 : 1.0;
        else if (cfg.signs != "positive") throw ValidationError("truth: unknown sign pattern '" + cfg.signs + "'");
        beta(idx[k]) = sign * cfg.magnitude;
    }
    return beta;
}

Vector generate_noise(const NoiseSpec& spec, Index n, Rng& rng)
{
    Vector eps(n);
    const double sigma = spec.sigma;
    for (Index i = 0; i < n; ++i) {
        switch (spec.kind) {
        case NoiseKind::Rademacher: eps(i) = sigma * rng.sign(); break;
        case NoiseKind::Uniform: eps(i) = rng.uniform(-sigma, sigma); break;
        case NoiseKind::TruncatedGaussian: {
            double x;
            do {
                x = 0.5 * sigma * rng.normal();
            } while (std::abs(x) > sigma);
            eps(i) = x;
            break;
        }
        case NoiseKind::LogisticBernoulliResidual:
            throw ValidationError("noise: logistic residuals depend on X beta; use generate_response");
        }
    }
    return eps;
}

Replicate generate_response(const ExperimentConfig& cfg, const DesignMatrix& X, const Vector& beta, Rng& rng)
{
    const Vector z = X.apply(beta);
    const Index n = z.size();
    Replicate out;
    out.y.resize(n);
    out.eps.resize(n);
    if (const auto* e = std::get_if<ExpFamilyLink>(&cfg.link)) {
        if (e->kind() == ExpFamilyLink::Kind::Logistic) {
            for (Index i = 0; i < n; ++i) {
                const double prob = e->mean(z(i));
                out.y(i) = rng.uniform() < prob ? 1.0 : 0.0;
                out.eps(i) = out.y(i) - prob;
            }
            return out;
        }
        if (e->kind() != ExpFamilyLink::Kind::Gaussian) {
            throw ValidationError("simulation: only logistic and gaussian exp-family responses are generated");
        }
        out.eps = generate_noise(cfg.noise, n, rng);
        out.y = z + out.eps;
        return out;
    }
    const auto& f = std::get<AnalyticLink>(cfg.link);
    const Vector eps = generate_noise(cfg.noise, n, rng);
    if (cfg.corruption) {
        // y = f(X'beta + xi) + eps; relative to g the noise is y - g(X'beta).
        const SmoothedLink g(f, *cfg.corruption);
        for (Index i = 0; i < n; ++i) {
            const double xi = cfg.corruption->xi.sample(rng);
            out.y(i) = f.value(z(i) + xi) + eps(i);
            out.eps(i) = out.y(i) - g(z(i));
        }
        return out;
    }
    for (Index i = 0; i < n; ++i) out.y(i) = f.value(z(i)) + eps(i);
    out.eps = eps;
    return out;
}

double binomial_cdf(int k, int trials, double prob)
{
    if (k < 0) return 0.0;
    if (k >= trials) return 1.0;
    if (prob <= 0.0) return 1.0;
    if (prob >= 1.0) return 0.0;
    double acc = 0.0;
    for (int i = 0; i <= k; ++i) {
        const double logp = std::lgamma(trials + 1.0) - std::lgamma(i + 1.0) - std::lgamma(trials - i + 1.0) +
                            i * std::log(prob) + (trials - i) * std::log1p(-prob);
        acc += std::exp(logp);
    }
    return std::min(1.0, acc);
}

std::pair<double, double> wilson_interval(int successes, int trials, double z)
{
    if (trials <= 0) return {0.0, 1.0};
    const double n = trials;
    const double phat = successes / n;
    const double denom = 1.0 + z * z / n;
    const double centre = (phat + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(phat * (1.0 - phat) / n + z * z / (4.0 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

CoverageSummary summarize(const std::vector<ReplicateRecord>& records, double target)
{
    CoverageSummary s;
    s.replicates = static_cast<int>(records.size());
    for (const auto& r : records) {
        s.covered += r.within;
        if (r.objective_vs_truth && !r.ineq_holds) ++s.ineq_violations;
    }
    s.rate = s.replicates ? static_cast<double>(s.covered) / s.replicates : 0.0;
    s.target = target;
    std::tie(s.ci_low, s.ci_high) = wilson_interval(s.covered, s.replicates);
    // H0: coverage >= target. Small p-values mean fewer successes than the
    // target allows.
    s.p_value = binomial_cdf(s.covered, s.replicates, std::clamp(target, 0.0, 1.0));
    s.passes = s.p_value >= 0.01;
    return s;
}

CoverageReport run_coverage(const ExperimentConfig& cfg)
{
    cfg.validate();
    Setup setup = prepare(cfg, generate_design(cfg.design, cfg.seed), cfg.truth.s);
    const auto& cert = setup.certificate;
    if (!cert.kappa_r) {
        std::string msg = "certificate infeasible";
        for (const auto& d : cert.diagnostics) msg += "; " + d;
        throw InfeasibleCertificate(msg);
    }
    const double radius = *cert.kappa_r * std::sqrt(static_cast<double>(cfg.truth.s) / setup.X.rows());

    CoverageReport report;
    report.certificate = cert;
    report.coherence = coherence_stats(setup.X);
    report.c_r = setup.c_r;
    report.support_cap = setup.domain.support_cap;
    report.records.resize(cfg.replicates);
    parallel_for(cfg.replicates, cfg.threads, [&](int k) {
        report.records[k] = run_replicate(cfg, setup, k, cfg.seed, radius);
    });
    report.summary = summarize(report.records, cert.confidence());
    return report;
}

ScalingReport run_scaling(const ExperimentConfig& cfg)
{
    cfg.validate();
    if (cfg.n_grid.size() < 4) throw ValidationError("scaling: n_grid needs at least 4 points");
    if (!std::is_sorted(cfg.n_grid.begin(), cfg.n_grid.end()) ||
        std::adjacent_find(cfg.n_grid.begin(), cfg.n_grid.end()) != cfg.n_grid.end()) {
        throw ValidationError("scaling: n_grid must be strictly increasing");
    }
    if (2 * cfg.truth.s > cfg.design.p) throw ValidationError("scaling: 2s must not exceed p");

    ScalingReport report;
    for (const Index n : cfg.n_grid) {
        DesignConfig dc = cfg.design;
        dc.n = n;
        const std::uint64_t seed_n = subseed(cfg.seed, static_cast<std::uint64_t>(n));
        ScalingPoint point;
        point.n = n;
        for (const Index s : {cfg.truth.s, 2 * cfg.truth.s}) {
            Setup setup = prepare(cfg, generate_design(dc, seed_n), s);
            std::vector<double> errors(cfg.replicates);
            parallel_for(cfg.replicates, cfg.threads, [&](int k) {
                errors[k] = run_replicate(cfg, setup, k, seed_n, std::nullopt).error;
            });
            if (s == cfg.truth.s) {
                point.median_error = median(errors);
                point.c_r = setup.c_r;
            } else {
                point.median_error_2s = median(errors);
            }
        }
        report.points.push_back(point);
    }

    // Medians at solver resolution carry no rate information.
    constexpr double floor = 1e-6;
    const bool flat = std::all_of(report.points.begin(), report.points.end(), [](const ScalingPoint& pt) {
        return pt.median_error <= floor && pt.median_error_2s <= floor;
    });
    if (flat) {
        report.slope = 0.0;
        report.sparsity_ratio = 1.0;
        return report;
    }
    // Least squares slope on the log-log scale.
    double mx = 0.0, my = 0.0, log_ratio = 0.0;
    const double m = static_cast<double>(report.points.size());
    for (const auto& pt : report.points) {
        mx += std::log(static_cast<double>(pt.n)) / m;
        my += std::log(pt.median_error) / m;
        log_ratio += std::log(pt.median_error_2s / pt.median_error) / m;
    }
    double sxy = 0.0, sxx = 0.0;
    for (const auto& pt : report.points) {
        const double dx = std::log(static_cast<double>(pt.n)) - mx;
        sxy += dx * (std::log(pt.median_error) - my);
        sxx += dx * dx;
    }
    report.slope = sxy / sxx;
    report.sparsity_ratio = std::exp(log_ratio);
    return report;
}

std::string coverage_csv(const CoverageReport& report)
{
    std::ostringstream out;
    out << "replicate,error,radius,within,ineq_holds,objective_vs_truth,objective_hat,objective_truth,"
           "support_size,converged,residual\n";
    for (const auto& r : report.records) {
        out << r.index << ',' << io::format_double(r.error) << ',' << io::format_double(r.radius) << ','
            << r.within << ',' << r.ineq_holds << ',' << r.objective_vs_truth << ','
            << io::format_double(r.objective_hat) << ',' << io::format_double(r.objective_truth) << ','
            << r.support_size << ',' << r.converged << ',' << io::format_double(r.residual) << '\n';
    }
    return out.str();
}

} // namespace sparsenl
