#include <sparsenl/certificates.hpp>
#include <sparsenl/error.hpp>
#include <sparsenl/io.hpp>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace sparsenl {

std::string to_string(NoiseKind kind)
{
    switch (kind) {
    case NoiseKind::Rademacher: return "rademacher";
    case NoiseKind::Uniform: return "uniform";
    case NoiseKind::TruncatedGaussian: return "truncated-gaussian";
    case NoiseKind::LogisticBernoulliResidual: return "logistic-bernoulli-residual";
    }
    return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& name)
{
    if (name == "rademacher") return NoiseKind::Rademacher;
    if (name == "uniform") return NoiseKind::Uniform;
    if (name == "truncated-gaussian") return NoiseKind::TruncatedGaussian;
    if (name == "logistic-bernoulli-residual") return NoiseKind::LogisticBernoulliResidual;
    throw ValidationError("unknown noise kind '" + name + "'");
}

std::string to_string(Proposition prop)
{
    return prop == Proposition::Basic ? "basic" : "basic2";
}

std::optional<double> BoundCertificate::radius() const
{
    if (!kappa_r) return std::nullopt;
    return *kappa_r * std::sqrt(static_cast<double>(s) / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// c1

double c1_expfamily(const NoiseSpec& noise, const DesignMatrix& X, double q)
{
    if (!(q > 0.0 && q < 1.0)) throw ValidationError("q must lie in (0, 1)");
    if (noise.sigma < 0.0) throw ValidationError("sigma must be nonnegative");
    const double ratio = static_cast<double>(X.cols()) / q;
    if (!(ratio > 1.0)) throw ValidationError("ln(p/q) <= 0");
    const double n = static_cast<double>(X.rows());
    return noise.sigma * std::sqrt(std::log(ratio) / (2.0 * n)) * X.col_l2().maxCoeff();
}

double AnalyticC1Params::lambda_p(Index p) const
{
    return std::log(static_cast<double>(p) * (1.0 + 1.0 / q));
}

double AnalyticC1Params::Q() const
{
    if (!delta_D) {
        throw ValidationError("delta(D) unavailable: compute it with delta_D_upper or set an "
                              "explicit weighted_l1_cap");
    }
    return 4.0 * *delta_D / r_c1 + 1.0;
}

namespace {

// sum_{k > K} k^{3/2} x^{k-1}, bounded by a geometric series from k = K + 1.
double power_tail(int K, double x)
{
    if (x <= 0.0) return 0.0;
    const double ratio = std::pow((K + 2.0) / (K + 1.0), 1.5) * x;
    if (ratio >= 1.0) return kInf;
    return std::pow(K + 1.0, 1.5) * std::pow(x, K) / (1.0 - ratio);
}

// Candidate Cauchy radii strictly between `inner` and `outer`.
std::vector<double> cauchy_radii(double inner, double outer)
{
    std::vector<double> out;
    if (std::isfinite(outer)) {
        for (double t : {0.1, 0.25, 0.4, 0.5, 0.6, 0.75, 0.85, 0.9, 0.95, 0.99}) {
            out.push_back(inner + t * (outer - inner));
        }
    } else {
        for (double t : {1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 32.0}) out.push_back(inner * t);
    }
    return out;
}

// sup over x in I of the modulus bound on |z - x| <= rho.
double uniform_modulus(const AnalyticLink& link, const Interval& I, double rho)
{
    constexpr int pieces = 16;
    const int n = I.length() > 0.0 ? pieces : 1;
    const double half = 0.5 * I.length() / n;
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        worst = std::max(worst, link.modulus_bound(I.lo + (2 * i + 1) * half, rho + half));
    }
    return worst;
}

void check_noise(const NoiseSpec& noise)
{
    if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma)) {
        throw ValidationError("sigma must be finite and nonnegative");
    }
}

} // namespace

SeriesValue c1_analytic_bounded(const AnalyticLink& link, const DesignMatrix& X,
                                const AnalyticC1Params& params, const NoiseSpec& noise)
{
    check_noise(noise);
    if (!(params.theta > 0.0 && params.theta < 1.0)) throw ValidationError("theta must lie in (0, 1)");
    if (!(params.r_c > 0.0)) throw ValidationError("r_c must be positive");
    if (!(params.q > 0.0 && params.q < 1.0)) throw ValidationError("q must lie in (0, 1)");
    const double R = params.theta * params.r_c;
    const double radius = link.radius_about_zero();
    if (R >= radius) {
        throw ValidationError("series diverges: theta * r_c >= radius of convergence of " + link.name());
    }
    const int K_max = link.max_order();
    const auto a = link.taylor(0.0, K_max);
    const double B = X.col_linf().maxCoeff(); // n^{-1/(2k)} |V|_{2k} <= |V|_inf
    const auto deg = link.degree();
    const auto radii = cauchy_radii(R, radius);

    SeriesValue out;
    for (int k = 1; k <= K_max; ++k) {
        const double coef = k * std::abs(a[k]); // |f^{(k)}(0)| / (k-1)!
        if (coef != 0.0) {
            out.partial += std::sqrt(static_cast<double>(k)) * coef * std::pow(R, k - 1) *
                           X.scaled_max_l2k(k);
        }
        out.terms = k;
        double tail = 0.0;
        if (!deg || k < *deg) {
            tail = kInf;
            for (double rho : radii) {
                const double M = link.modulus_bound(0.0, rho);
                tail = std::min(tail, M * B / rho * power_tail(k, R / rho));
            }
        }
        out.tail = tail;
        if (tail <= kSeriesRelTol * out.partial || tail == 0.0) break;
    }
    if (!(out.tail <= kSeriesRelTol * out.partial || out.tail == 0.0)) {
        throw ValidationError("c1 series tail not certified within K_max = " + std::to_string(K_max));
    }
    const double scale = noise.sigma * std::sqrt(2.0 * params.lambda_p(X.cols()));
    out.partial *= scale;
    out.tail *= scale;
    out.value = out.partial + out.tail;
    return out;
}

SeriesValue c1_analytic_general(const AnalyticLink& link, const DesignMatrix& X,
                                const AnalyticC1Params& params, const NoiseSpec& noise,
                                const Interval& I)
{
    check_noise(noise);
    if (!(params.q > 0.0 && params.q < 1.0)) throw ValidationError("q must lie in (0, 1)");
    if (!(params.r_c1 > 0.0 && params.r_c1 < params.r_c)) throw ValidationError("r_c1 must lie in (0, r_c)");
    if (!I.bounded()) throw ValidationError("general c1 needs a finite interval");
    if (params.r_c > link.uniform_radius(I)) {
        throw ValidationError("r_c exceeds the analyticity radius of " + link.name() + " about I");
    }
    const double p = static_cast<double>(X.cols());
    const double Q = params.Q();
    const double lambda = params.lambda_p(X.cols());
    const double A = 2.0 * p * std::log(p * Q);
    const double r1 = params.r_c1;
    const int K_max = link.max_order();
    const double B = X.col_linf().maxCoeff();
    const auto deg = link.degree();
    const auto radii = cauchy_radii(r1, params.r_c);

    // Modulus bounds do not depend on k; evaluate them once.
    std::vector<double> moduli;
    moduli.reserve(radii.size());
    for (double rho : radii) moduli.push_back(uniform_modulus(link, I, rho));

    SeriesValue out;
    for (int k = 1; k <= K_max; ++k) {
        const double dk = link.impl().dk_bound(k, I);
        if (dk != 0.0) {
            out.partial += k * std::sqrt(A + k * lambda) * dk * std::pow(r1, k - 1) * X.scaled_max_l2k(k);
        }
        out.terms = k;
        double tail = 0.0;
        if (!deg || k < *deg) {
            // k sqrt(A + k lambda) <= k^{3/2} sqrt(A + lambda) for k >= 1.
            tail = kInf;
            for (std::size_t i = 0; i < radii.size(); ++i) {
                const double rho = radii[i];
                tail = std::min(tail, std::sqrt(A + lambda) * moduli[i] * B / rho * power_tail(k, r1 / rho));
            }
        }
        out.tail = tail;
        if (tail <= kSeriesRelTol * out.partial || tail == 0.0) break;
    }
    if (!(out.tail <= kSeriesRelTol * out.partial || out.tail == 0.0)) {
        throw ValidationError("c1 series tail not certified within K_max = " + std::to_string(K_max));
    }
    const double scale = std::sqrt(2.0) * noise.sigma;
    out.partial *= scale;
    out.tail *= scale;
    out.value = out.partial + out.tail;
    return out;
}

// ---------------------------------------------------------------------------
// c2, c3

double c3_expfamily(const ExpFamilyLink& link, const Interval& I)
{
    if (link.kind() == ExpFamilyLink::Kind::Poisson && !I.bounded()) {
        throw ValidationError("poisson certificates require a finite interval");
    }
    const auto inf = inf_lambda2(link, I);
    if (!(inf.value > 0.0)) {
        throw DomainError("curvature constant c3 is zero: inf Lambda'' vanishes on this domain");
    }
    return 0.5 * inf.value;
}

double c3_analytic(const AnalyticLink& link, const Interval& I)
{
    const auto d = slope_lower_bound(link, I);
    if (!(d.value > 0.0)) {
        throw DomainError("curvature constant c3 is zero: " + link.name() + " is not strictly "
                          "monotone on this domain");
    }
    return d.value * d.value;
}

double c3_constant(const LinkModel& link, const Interval& I)
{
    if (const auto* e = std::get_if<ExpFamilyLink>(&link)) return c3_expfamily(*e, I);
    return c3_analytic(std::get<AnalyticLink>(link), I);
}

double restricted_gamma(const CoherenceStats& stats, Index m)
{
    if (m < 1) throw ValidationError("support size m must be >= 1");
    return stats.a - static_cast<double>(m - 1) * stats.b * stats.mu;
}

std::optional<double> c2_from_coherence(double c3, const CoherenceStats& stats, Index m)
{
    const double gamma = restricted_gamma(stats, m);
    if (!(gamma > 0.0)) return std::nullopt;
    return c3 * gamma;
}

// ---------------------------------------------------------------------------
// certificates

BoundCertificate certify_prop_basic(double c1, double c2, Index n, Index s, double c0, double q)
{
    if (!(c1 >= 0.0) || !(c2 > 0.0)) throw ValidationError("certify_prop_basic: need c1 >= 0, c2 > 0");
    if (n < 1 || s < 0) throw ValidationError("certify_prop_basic: bad n or s");
    BoundCertificate cert;
    cert.proposition = Proposition::Basic;
    cert.c0 = c0;
    cert.q = q;
    cert.c1 = c1;
    cert.c2 = c2;
    cert.n = n;
    cert.s = s;
    cert.c_r = 2.0 * c1 * std::sqrt(static_cast<double>(n));
    cert.kappa_r = 4.0 * c1 / c2;
    cert.feasibility.basic_feasible = true;
    cert.provenance["c_r"] = "2 c1 sqrt(n)";
    cert.provenance["kappa_r"] = "4 c1 / c2";
    return cert;
}

bool tau_condition_holds(const CoherenceStats& stats, Index s, double tau)
{
    return stats.a + stats.b * stats.mu > 2.0 * stats.b * (3.0 + 4.0 * tau) * s * stats.mu;
}

BoundCertificate certify_prop_basic2(double c1, double c3, const CoherenceStats& stats, Index s,
                                     double tau, Index n, double c0, double q)
{
    if (!(c1 >= 0.0) || !(c3 > 0.0)) throw ValidationError("certify_prop_basic2: need c1 >= 0, c3 > 0");
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ValidationError("tau must be positive and finite");
    if (n < 1 || s < 0) throw ValidationError("certify_prop_basic2: bad n or s");
    BoundCertificate cert;
    cert.proposition = Proposition::Basic2;
    cert.c0 = c0;
    cert.q = q;
    cert.c1 = c1;
    cert.c3 = c3;
    cert.tau = tau;
    cert.n = n;
    cert.s = s;
    cert.coherence = stats;
    cert.c_r = 2.0 * (1.0 + 1.0 / tau) * c1 * std::sqrt(static_cast<double>(n));
    cert.provenance["c_r"] = "2 (1 + 1/tau) c1 sqrt(n)";

    const double lhs = stats.a + stats.b * stats.mu;
    cert.feasibility.basic_feasible = lhs > 6.0 * stats.b * s * stats.mu;
    cert.feasibility.tau_condition = tau_condition_holds(stats, s, tau);
    if (!cert.feasibility.basic_feasible) {
        std::ostringstream msg;
        msg << "coherence condition fails: a + b mu = " << io::format_double(lhs)
            << " <= 6 b s mu = " << io::format_double(6.0 * stats.b * s * stats.mu);
        cert.diagnostics.push_back(msg.str());
    }
    if (!cert.feasibility.tau_condition) {
        std::ostringstream msg;
        msg << "tau condition fails: a + b mu = " << io::format_double(lhs)
            << " <= 2 b (3 + 4 tau) s mu = "
            << io::format_double(2.0 * stats.b * (3.0 + 4.0 * tau) * s * stats.mu)
            << "; retry with a smaller tau or s";
        if (auto t = max_feasible_tau(stats, s)) {
            msg << " (largest feasible tau: " << io::format_double(*t) << ")";
        }
        cert.diagnostics.push_back(msg.str());
        return cert;
    }
    const double shape = 3.0 * (2.0 + 1.0 / tau) * std::sqrt(2.0 + (1.0 + 2.0 * tau) * (1.0 + 2.0 * tau));
    cert.kappa_r = shape / lhs * (c1 / c3);
    cert.provenance["kappa_r"] = "3 (2 + 1/tau) sqrt(2 + (1 + 2 tau)^2) / (a + b mu) * c1 / c3";
    return cert;
}

std::optional<double> max_feasible_tau(const CoherenceStats& stats, Index s)
{
    const double lhs = stats.a + stats.b * stats.mu;
    if (stats.mu == 0.0 || s == 0) {
        if (lhs > 0.0) return kInf;
        return std::nullopt;
    }
    const double numerator = lhs - 6.0 * stats.b * s * stats.mu;
    if (!(numerator > 0.0)) return std::nullopt;
    return numerator / (8.0 * stats.b * s * stats.mu);
}

std::optional<double> default_tau(const CoherenceStats& stats, Index s)
{
    const auto t = max_feasible_tau(stats, s);
    if (!t) return std::nullopt;
    return std::min(1.0, 0.5 * *t);
}

std::optional<Index> max_support_cap(const CoherenceStats& stats, Index s, Index p)
{
    std::optional<Index> best;
    for (Index h = 1; h <= p; ++h) {
        if (restricted_gamma(stats, h + s) > 0.0) best = h;
        else break;
    }
    return best;
}

BoundCertificate certify(const CertificateRequest& req)
{
    const auto& X = req.X;
    const auto stats = coherence_stats(X);
    double c0 = req.c0;
    double c1 = 0.0;
    std::string c1_source;
    std::string lambda_source;

    if (const auto* e = std::get_if<ExpFamilyLink>(&req.link)) {
        if (e->kind() == ExpFamilyLink::Kind::Poisson && !req.interval.bounded()) {
            throw ValidationError("poisson certificates require a finite interval");
        }
        c1 = c1_expfamily(req.noise, X, req.q);
        c0 = req.noise.c_eps;
        c1_source = "exp-family: sigma sqrt(ln(p/q) / (2n)) max_j |V_j|_2";
        lambda_source = "ln(p/q)";
    } else {
        const auto& f = std::get<AnalyticLink>(req.link);
        AnalyticC1Params params = req.analytic;
        params.q = req.q;
        SeriesValue series;
        if (params.variant == AnalyticC1Params::Variant::BoundedDisc) {
            series = c1_analytic_bounded(f, X, params, req.noise);
            c1_source = "analytic bounded-disc series";
        } else {
            series = c1_analytic_general(f, X, params, req.noise, req.interval);
            c1_source = "analytic general series (Q = " + io::format_double(params.Q()) + ")";
        }
        c1 = series.value;
        c1_source += ", " + std::to_string(series.terms) + " terms, tail " + io::format_double(series.tail);
        lambda_source = "ln[p (1 + 1/q)]";
    }

    const double c3 = c3_constant(req.link, req.interval);
    const Index n = X.rows();
    BoundCertificate cert;
    if (req.proposition == Proposition::Basic) {
        const auto h = req.support_cap ? req.support_cap : max_support_cap(stats, req.s, X.cols());
        std::optional<double> c2;
        if (h) c2 = c2_from_coherence(c3, stats, *h + req.s);
        if (!c2) {
            cert.proposition = Proposition::Basic;
            cert.c0 = c0;
            cert.q = req.q;
            cert.c1 = c1;
            cert.n = n;
            cert.s = req.s;
            cert.c_r = 2.0 * c1 * std::sqrt(static_cast<double>(n));
            cert.coherence = stats;
            std::ostringstream msg;
            msg << "restricted curvature gamma(m) = a - (m - 1) b mu is not positive (mu = "
                << io::format_double(stats.mu) << ", s = " << req.s << ")";
            cert.diagnostics.push_back(msg.str());
            return cert;
        }
        cert = certify_prop_basic(c1, *c2, n, req.s, c0, req.q);
        cert.coherence = stats;
        cert.c3 = std::nullopt;
        cert.provenance["c2"] = "c3 (a - (m - 1) b mu), m = h + s = " + std::to_string(*h + req.s);
        cert.provenance["support_cap"] = std::to_string(*h);
    } else {
        std::optional<double> tau = req.tau;
        if (!tau) tau = default_tau(stats, req.s);
        if (!tau) {
            // No tau works; report the failure at tau = 1.
            cert = certify_prop_basic2(c1, c3, stats, req.s, 1.0, n, c0, req.q);
        } else {
            cert = certify_prop_basic2(c1, c3, stats, req.s, *tau, n, c0, req.q);
        }
        cert.provenance["tau"] = req.tau ? "user" : "min(1, max_feasible_tau / 2)";
        cert.provenance["c3"] = std::holds_alternative<ExpFamilyLink>(req.link)
                                    ? "(1/2) inf_I Lambda''"
                                    : "d(f, I)^2";
    }
    cert.provenance["c1"] = c1_source;
    cert.provenance["lambda"] = lambda_source;
    cert.provenance["c0"] = std::holds_alternative<ExpFamilyLink>(req.link) ? "c_eps" : "user";
    return cert;
}

// ---------------------------------------------------------------------------
// tail condition check

TailCheckReport tail_check(const NoiseSpec& declared, const Matrix& samples, const Matrix& directions,
                           const std::vector<double>& t_grid)
{
    if (samples.cols() != directions.rows()) throw ValidationError("tail_check: dimension mismatch");
    if (samples.rows() < 1) throw ValidationError("tail_check: no samples");
    TailCheckReport report;
    report.draws = samples.rows();
    const double N = static_cast<double>(samples.rows());
    const Matrix proj = samples * directions; // draws x m
    for (Index d = 0; d < directions.cols(); ++d) {
        const double norm = directions.col(d).norm();
        for (double t : t_grid) {
            const double threshold = t * norm;
            const double count = static_cast<double>((proj.col(d).array().abs() > threshold).count());
            TailCheckRow row;
            row.t = t;
            row.direction = d;
            row.empirical = count / N;
            row.bound = declared.c_eps * std::exp(-t * t / (2.0 * declared.sigma * declared.sigma));
            row.std_error = std::sqrt(row.empirical * (1.0 - row.empirical) / N);
            row.flagged = row.empirical > row.bound + 3.0 * row.std_error;
            report.violation = report.violation || row.flagged;
            report.rows.push_back(row);
        }
    }
    return report;
}

} // namespace sparsenl
