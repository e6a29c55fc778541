#include <sparsenl/serialize.hpp>
#include <sparsenl/error.hpp>
#include <sparsenl/io.hpp>
#include <fstream>
#include <initializer_list>
#include <set>

namespace sparsenl::serialize {

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!j.is_object()) throw ValidationError(where + ": expected a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : j.items()) {
        if (!ok.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
    }
}

double number(const json& j, const std::string& where)
{
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf" || s == "+inf") return kInf;
        if (s == "-inf") return -kInf;
    }
    throw ValidationError(where + ": expected a number");
}

template <class T>
T get_or(const json& j, const char* key, T fallback)
{
    if (!j.contains(key) || j.at(key).is_null()) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ValidationError(std::string("'") + key + "' has the wrong type");
    }
}

std::optional<double> opt_number(const json& j, const char* key)
{
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return number(j.at(key), key);
}

json opt(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

json finite_or_string(double x)
{
    if (std::isfinite(x)) return x;
    return std::isnan(x) ? json("nan") : json(x > 0 ? "inf" : "-inf");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

Vector vector_from(const json& j, const std::filesystem::path& base, const std::string& where)
{
    if (j.is_string()) return io::read_vector(resolve(base, j.get<std::string>()));
    if (j.is_array()) {
        Vector v(static_cast<Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = number(j[i], where);
        return v;
    }
    throw ValidationError(where + ": expected a path or an array");
}

Matrix matrix_from(const json& j, const std::filesystem::path& base)
{
    if (j.is_string()) return io::read_matrix(resolve(base, j.get<std::string>()));
    if (j.is_array()) {
        const Index n = static_cast<Index>(j.size());
        if (n == 0 || !j[0].is_array()) throw ValidationError("matrix: expected an array of rows");
        const Index p = static_cast<Index>(j[0].size());
        Matrix M(n, p);
        for (Index i = 0; i < n; ++i) {
            if (static_cast<Index>(j[i].size()) != p) throw ValidationError("matrix: ragged rows");
            for (Index k = 0; k < p; ++k) M(i, k) = number(j[i][k], "matrix");
        }
        return M;
    }
    throw ValidationError("matrix: expected a path or an array of rows");
}

FitOptions fit_options_from_json(const json& j)
{
    check_keys(j, {"tol", "max_iter", "starts", "seed", "warm_start", "feasibility_tol"}, "fit");
    FitOptions o;
    o.tol = opt_number(j, "tol");
    o.max_iter = get_or<int>(j, "max_iter", o.max_iter);
    o.starts = get_or<int>(j, "starts", o.starts);
    o.seed = get_or<std::uint64_t>(j, "seed", o.seed);
    o.feasibility_tol = get_or<double>(j, "feasibility_tol", o.feasibility_tol);
    if (j.contains("warm_start")) o.warm_start = vector_from(j.at("warm_start"), {}, "warm_start");
    if (o.max_iter < 1 || o.starts < 1) throw ValidationError("fit: max_iter and starts must be >= 1");
    return o;
}

} // namespace

json read_json_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw IoError("invalid JSON in " + path.string() + ": " + e.what());
    }
}

Interval interval_from_json(const json& j)
{
    if (!j.is_array() || j.size() != 2) throw ValidationError("interval: expected [lo, hi]");
    Interval I{number(j[0], "interval"), number(j[1], "interval")};
    if (!(I.lo <= I.hi)) throw ValidationError("interval: lo must not exceed hi");
    return I;
}

json to_json(const Interval& I) { return json::array({finite_or_string(I.lo), finite_or_string(I.hi)}); }

LinkSpec link_from_json(const json& j)
{
    if (j.is_string()) return link_from_json(json{{"kind", j}});
    check_keys(j, {"kind", "coeffs", "slope", "intercept", "scale", "interval", "radius", "max_order"}, "link");
    const auto kind = get_or<std::string>(j, "kind", "");
    LinkSpec spec;
    spec.radius = opt_number(j, "radius");
    const int max_order = get_or<int>(j, "max_order", AnalyticLink::kDefaultMaxOrder);
    if (kind == "logistic") spec.link = ExpFamilyLink::logistic();
    else if (kind == "gaussian") spec.link = ExpFamilyLink::gaussian();
    else if (kind == "poisson") {
        spec.link = ExpFamilyLink::poisson(j.contains("interval") ? interval_from_json(j.at("interval")) : Interval{});
    } else if (kind == "identity") spec.link = AnalyticLink::identity();
    else if (kind == "affine") {
        spec.link = AnalyticLink::affine(get_or<double>(j, "slope", 1.0), get_or<double>(j, "intercept", 0.0));
    } else if (kind == "exp") spec.link = AnalyticLink::exp();
    else if (kind == "poly") {
        if (!j.contains("coeffs")) throw ValidationError("link: poly needs 'coeffs'");
        spec.link = AnalyticLink::polynomial(get_or<std::vector<double>>(j, "coeffs", {}));
    } else if (kind == "sigmoid") spec.link = AnalyticLink::sigmoid(get_or<double>(j, "scale", 1.0));
    else throw ValidationError("link: unknown kind '" + kind + "'");
    if (auto* f = std::get_if<AnalyticLink>(&spec.link)) *f = f->with_max_order(max_order);
    return spec;
}

DomainSpec domain_from_json(const json& j)
{
    check_keys(j, {"interval", "weighted_l1_cap", "support_cap"}, "domain");
    DomainSpec D;
    if (j.contains("interval")) D.interval = interval_from_json(j.at("interval"));
    D.weighted_l1_cap = opt_number(j, "weighted_l1_cap");
    if (j.contains("support_cap") && !j.at("support_cap").is_null()) {
        D.support_cap = j.at("support_cap").get<Index>();
    }
    return D;
}

json to_json(const DomainSpec& D)
{
    return {{"interval", to_json(D.interval)},
            {"weighted_l1_cap", opt(D.weighted_l1_cap)},
            {"support_cap", D.support_cap ? json(*D.support_cap) : json(nullptr)}};
}

json to_json(const DomainReport& report)
{
    json v = json::array();
    for (const auto& viol : report.violations) {
        const char* kind = viol.kind == DomainViolation::Kind::Row             ? "row"
                           : viol.kind == DomainViolation::Kind::WeightedL1Cap ? "weighted_l1_cap"
                                                                               : "support_cap";
        json e = {{"kind", kind}, {"margin", viol.margin}};
        if (viol.kind == DomainViolation::Kind::Row) e["row"] = viol.row;
        v.push_back(std::move(e));
    }
    return {{"inside", report.inside}, {"violations", std::move(v)}};
}

NoiseSpec noise_from_json(const json& j)
{
    check_keys(j, {"kind", "sigma", "c_eps"}, "noise");
    NoiseSpec n;
    n.kind = noise_kind_from_string(get_or<std::string>(j, "kind", "rademacher"));
    n.sigma = get_or<double>(j, "sigma", n.sigma);
    n.c_eps = get_or<double>(j, "c_eps", n.c_eps);
    if (!(n.sigma >= 0.0) || !(n.c_eps > 0.0)) throw ValidationError("noise: need sigma >= 0 and c_eps > 0");
    return n;
}

json to_json(const NoiseSpec& noise)
{
    return {{"kind", to_string(noise.kind)}, {"sigma", noise.sigma}, {"c_eps", noise.c_eps}};
}

CorruptionSpec corruption_from_json(const json& j)
{
    check_keys(j, {"xi", "R", "R0", "sup_f"}, "corruption");
    CorruptionSpec c;
    if (!j.contains("xi")) throw ValidationError("corruption: missing 'xi'");
    const auto& xi = j.at("xi");
    check_keys(xi, {"kind", "r"}, "corruption.xi");
    c.xi.kind = xi_kind_from_string(get_or<std::string>(xi, "kind", "uniform"));
    c.xi.r = get_or<double>(xi, "r", c.xi.r);
    c.R = get_or<double>(j, "R", c.R);
    c.R0 = get_or<double>(j, "R0", c.R0);
    c.sup_f = opt_number(j, "sup_f");
    c.validate();
    return c;
}

json to_json(const CorruptionSpec& spec)
{
    return {{"xi", {{"kind", to_string(spec.xi.kind)}, {"r", spec.xi.r}}},
            {"R", spec.R},
            {"R0", spec.R0},
            {"sup_f", opt(spec.sup_f)}};
}

AnalyticC1Params analytic_from_json(const json& j, const std::optional<double>& link_radius)
{
    AnalyticC1Params a;
    if (link_radius) {
        a.r_c = *link_radius;
        a.r_c1 = 0.5 * *link_radius;
    }
    if (j.is_null()) return a;
    check_keys(j, {"variant", "theta", "r_c", "r_c1", "delta_D"}, "analytic");
    const auto variant = get_or<std::string>(j, "variant", "bounded-disc");
    if (variant == "bounded-disc") a.variant = AnalyticC1Params::Variant::BoundedDisc;
    else if (variant == "general") a.variant = AnalyticC1Params::Variant::General;
    else throw ValidationError("analytic: unknown variant '" + variant + "'");
    a.theta = get_or<double>(j, "theta", a.theta);
    a.r_c = get_or<double>(j, "r_c", a.r_c);
    a.r_c1 = get_or<double>(j, "r_c1", a.r_c1);
    a.delta_D = opt_number(j, "delta_D");
    return a;
}

Proposition proposition_from_json(const json& j)
{
    const auto s = j.get<std::string>();
    if (s == "basic") return Proposition::Basic;
    if (s == "basic2") return Proposition::Basic2;
    throw ValidationError("unknown proposition '" + s + "' (expected basic or basic2)");
}

json to_json(const CoherenceStats& stats) { return {{"mu", stats.mu}, {"a", stats.a}, {"b", stats.b}}; }

json to_json(const BoundCertificate& cert)
{
    json j;
    j["proposition"] = to_string(cert.proposition);
    j["c0"] = cert.c0;
    j["q"] = cert.q;
    j["c1"] = cert.c1;
    j["c2"] = opt(cert.c2);
    j["c3"] = opt(cert.c3);
    j["tau"] = opt(cert.tau);
    j["c_r"] = cert.c_r;
    j["kappa_r"] = opt(cert.kappa_r);
    j["radius"] = opt(cert.radius());
    j["s"] = cert.s;
    j["n"] = cert.n;
    j["confidence"] = cert.confidence();
    j["feasibility"] = {{"tau_condition", cert.feasibility.tau_condition}, {"basic", cert.feasibility.basic_feasible}};
    j["coherence"] = cert.coherence ? to_json(*cert.coherence) : json(nullptr);
    j["provenance"] = cert.provenance;
    j["diagnostics"] = cert.diagnostics;
    return j;
}

json to_json(const FitResult& r)
{
    json beta = json::array();
    for (Index j = 0; j < r.beta_hat.size(); ++j) {
        if (r.beta_hat(j) != 0.0) beta.push_back(json::array({j, r.beta_hat(j)}));
    }
    return {{"beta_hat", std::move(beta)},
            {"p", r.beta_hat.size()},
            {"objective", r.objective_value},
            {"objective_trace", r.objective_trace},
            {"residual_trace", r.residual_trace},
            {"optimality_residual", r.optimality_residual},
            {"domain", to_json(r.domain_report)},
            {"iterations", r.iterations},
            {"converged", r.converged},
            {"convex", r.convex},
            {"support_cap_heuristic", r.support_cap_heuristic},
            {"start_index", r.start_index}};
}

json to_json(const CoverageReport& report)
{
    json records = json::array();
    for (const auto& r : report.records) {
        records.push_back({{"replicate", r.index},
                           {"error", r.error},
                           {"radius", r.radius},
                           {"within", r.within},
                           {"ineq_holds", r.ineq_holds},
                           {"objective_vs_truth", r.objective_vs_truth},
                           {"objective_hat", r.objective_hat},
                           {"objective_truth", r.objective_truth},
                           {"support_size", r.support_size},
                           {"converged", r.converged},
                           {"residual", r.residual}});
    }
    const auto& s = report.summary;
    return {{"certificate", to_json(report.certificate)},
            {"coherence", to_json(report.coherence)},
            {"c_r", report.c_r},
            {"support_cap", report.support_cap ? json(*report.support_cap) : json(nullptr)},
            {"summary",
             {{"replicates", s.replicates},
              {"covered", s.covered},
              {"rate", s.rate},
              {"target", s.target},
              {"ci_low", s.ci_low},
              {"ci_high", s.ci_high},
              {"p_value", s.p_value},
              {"passes", s.passes},
              {"ineq_violations", s.ineq_violations}}},
            {"records", std::move(records)},
            {"note", "experiment sizes are configuration choices"}};
}

json to_json(const ScalingReport& report)
{
    json pts = json::array();
    for (const auto& p : report.points) {
        pts.push_back({{"n", p.n},
                       {"median_error", p.median_error},
                       {"median_error_2s", p.median_error_2s},
                       {"c_r", p.c_r}});
    }
    return {{"points", std::move(pts)}, {"slope", report.slope}, {"sparsity_ratio", report.sparsity_ratio}};
}

json smoothing_diagnostics(const SmoothedLink& g, const Interval& I)
{
    json grid = json::array();
    double max_gap = 0.0;
    if (I.bounded()) {
        constexpr int points = 9;
        for (int k = 0; k < points; ++k) {
            const double z = I.lo + (I.hi - I.lo) * k / (points - 1);
            const double q = g(z);
            const double s = g.series_value(z);
            max_gap = std::max(max_gap, std::abs(q - s));
            grid.push_back({{"z", z}, {"quadrature", q}, {"series", s}});
        }
    }
    json coeffs = json::array();
    const auto& c = g.series();
    for (std::size_t k = 0; k < std::min<std::size_t>(c.size(), 9); ++k) coeffs.push_back(c[k]);
    return {{"link", g.link().name()},
            {"method", g.method()},
            {"slope_bound", g.slope_bound()},
            {"sup_f", g.sup_f()},
            {"corruption", to_json(g.spec())},
            {"series_head", std::move(coeffs)},
            {"grid", std::move(grid)},
            {"max_series_gap", max_gap}};
}

BoundCertificate certify_from_json(const json& j, const std::filesystem::path& base)
{
    check_keys(j,
               {"proposition", "c1", "c2", "c3", "coherence", "s", "n", "tau", "q", "c0", "matrix", "link",
                "interval", "noise", "support_cap", "analytic"},
               "certify");
    const auto prop = proposition_from_json(j.value("proposition", json("basic2")));
    const double q = get_or<double>(j, "q", 0.05);
    const Index s = get_or<Index>(j, "s", 1);
    if (j.contains("c1")) {
        // Plug-in constants.
        const double c1 = number(j.at("c1"), "c1");
        const double c0 = get_or<double>(j, "c0", 2.0);
        if (!j.contains("n")) throw ValidationError("certify: plug-in constants need 'n'");
        const Index n = j.at("n").get<Index>();
        if (prop == Proposition::Basic) {
            if (!j.contains("c2")) throw ValidationError("certify: basic needs 'c2'");
            return certify_prop_basic(c1, number(j.at("c2"), "c2"), n, s, c0, q);
        }
        if (!j.contains("c3") || !j.contains("coherence")) {
            throw ValidationError("certify: basic2 needs 'c3' and 'coherence'");
        }
        const auto& cj = j.at("coherence");
        check_keys(cj, {"mu", "a", "b"}, "coherence");
        CoherenceStats stats{number(cj.at("mu"), "mu"), number(cj.at("a"), "a"), number(cj.at("b"), "b")};
        std::optional<double> tau = opt_number(j, "tau");
        if (!tau) tau = default_tau(stats, s);
        return certify_prop_basic2(c1, number(j.at("c3"), "c3"), stats, s, tau.value_or(1.0), n, c0, q);
    }
    if (!j.contains("matrix") || !j.contains("link")) {
        throw ValidationError("certify: need either plug-in constants ('c1', ...) or 'matrix' and 'link'");
    }
    const LinkSpec link = link_from_json(j.at("link"));
    CertificateRequest req{
        .proposition = prop,
        .X = DesignMatrix(matrix_from(j.at("matrix"), base)),
        .link = link.link,
        .interval = j.contains("interval") ? interval_from_json(j.at("interval")) : Interval{},
        .noise = j.contains("noise") ? noise_from_json(j.at("noise")) : NoiseSpec{},
        .s = s,
        .q = q,
        .c0 = get_or<double>(j, "c0", 2.0),
        .tau = opt_number(j, "tau"),
        .support_cap = j.contains("support_cap") ? std::optional<Index>(j.at("support_cap").get<Index>())
                                                 : std::nullopt,
        .analytic = analytic_from_json(j.value("analytic", json(nullptr)), link.radius),
    };
    return certify(req);
}

ProblemSpec problem_from_json(const json& j, const std::filesystem::path& base)
{
    check_keys(j, {"matrix", "y", "link", "kind", "domain", "c_r", "certificate", "fit", "corruption", "noise"},
               "problem");
    if (!j.contains("matrix") || !j.contains("y")) throw ValidationError("problem: needs 'matrix' and 'y'");
    DesignMatrix X(matrix_from(j.at("matrix"), base));
    Vector y = vector_from(j.at("y"), base, "y");
    const LinkSpec link = link_from_json(j.value("link", json("identity")));
    ProblemKind kind = std::holds_alternative<ExpFamilyLink>(link.link) ? ProblemKind::Mle : ProblemKind::Lse;
    if (j.contains("kind")) {
        const auto k = j.at("kind").get<std::string>();
        if (k == "mle") kind = ProblemKind::Mle;
        else if (k == "lse") kind = ProblemKind::Lse;
        else throw ValidationError("problem: kind must be mle or lse");
    }
    DomainSpec domain = j.contains("domain") ? domain_from_json(j.at("domain")) : DomainSpec{};
    NoiseSpec noise = j.contains("noise") ? noise_from_json(j.at("noise")) : NoiseSpec{};
    LinkModel fit_link = link.link;
    if (j.contains("corruption")) {
        const auto spec = corruption_from_json(j.at("corruption"));
        auto induced = induce_problem(std::get<AnalyticLink>(link.link), spec, X, y, domain, 0.0, noise);
        fit_link = induced.problem.link;
        noise = induced.noise;
    }

    ProblemSpec out{
        .problem = EstimationProblem{.X = X, .y = std::move(y), .link = fit_link, .domain = domain, .kind = kind},
        .options = j.contains("fit") ? fit_options_from_json(j.at("fit")) : FitOptions{},
        .certificate = std::nullopt,
    };
    if (j.contains("c_r")) {
        out.problem.c_r = number(j.at("c_r"), "c_r");
    } else if (j.contains("certificate")) {
        const auto& cj = j.at("certificate");
        check_keys(cj, {"proposition", "s", "q", "c0", "tau", "support_cap", "analytic"}, "problem.certificate");
        CertificateRequest req{
            .proposition = proposition_from_json(cj.value("proposition", json("basic2"))),
            .X = X,
            .link = fit_link,
            .interval = domain.interval,
            .noise = noise,
            .s = get_or<Index>(cj, "s", 1),
            .q = get_or<double>(cj, "q", 0.05),
            .c0 = get_or<double>(cj, "c0", 2.0),
            .tau = opt_number(cj, "tau"),
            .support_cap = cj.contains("support_cap") ? std::optional<Index>(cj.at("support_cap").get<Index>())
                                                      : domain.support_cap,
            .analytic = analytic_from_json(cj.value("analytic", json(nullptr)), link.radius),
        };
        out.certificate = certify(req);
        out.problem.c_r = out.certificate->c_r;
        if (req.proposition == Proposition::Basic && !out.problem.domain.support_cap) {
            if (auto it = out.certificate->provenance.find("support_cap"); it != out.certificate->provenance.end()) {
                out.problem.domain.support_cap = std::stoll(it->second);
            }
        }
    } else {
        throw ValidationError("problem: needs 'c_r' or 'certificate'");
    }
    out.problem.validate();
    return out;
}

ExperimentConfig experiment_from_json(const json& j, const std::filesystem::path& base)
{
    check_keys(j,
               {"design", "beta", "truth", "model", "link", "noise", "corruption", "domain", "certificate", "c_r",
                "replicates", "seed", "fit", "n_grid", "threads"},
               "config");
    ExperimentConfig cfg;
    if (j.contains("design")) {
        const auto& d = j.at("design");
        check_keys(d, {"kind", "n", "p", "path", "normalize"}, "design");
        cfg.design.kind = get_or<std::string>(d, "kind", cfg.design.kind);
        cfg.design.n = get_or<Index>(d, "n", cfg.design.n);
        cfg.design.p = get_or<Index>(d, "p", cfg.design.p);
        if (d.contains("path")) cfg.design.path = resolve(base, d.at("path").get<std::string>()).string();
        cfg.design.normalize = get_or<bool>(d, "normalize", cfg.design.normalize);
        if (cfg.design.kind == "file") {
            const Matrix M = io::read_matrix(cfg.design.path);
            cfg.design.n = M.rows();
            cfg.design.p = M.cols();
        }
    }
    const char* truth_key = j.contains("beta") ? "beta" : "truth";
    if (j.contains(truth_key)) {
        const auto& t = j.at(truth_key);
        check_keys(t, {"s", "magnitude", "signs"}, truth_key);
        cfg.truth.s = get_or<Index>(t, "s", cfg.truth.s);
        cfg.truth.magnitude = get_or<double>(t, "magnitude", cfg.truth.magnitude);
        cfg.truth.signs = get_or<std::string>(t, "signs", cfg.truth.signs);
    }
    LinkSpec link;
    if (j.contains("link")) link = link_from_json(j.at("link"));
    cfg.link = link.link;
    cfg.kind = std::holds_alternative<ExpFamilyLink>(cfg.link) ? ProblemKind::Mle : ProblemKind::Lse;
    if (j.contains("model")) {
        const auto m = j.at("model").get<std::string>();
        if (m == "mle") cfg.kind = ProblemKind::Mle;
        else if (m == "lse") cfg.kind = ProblemKind::Lse;
        else throw ValidationError("config: model must be mle or lse");
    }
    if (j.contains("noise")) cfg.noise = noise_from_json(j.at("noise"));
    if (j.contains("corruption")) cfg.corruption = corruption_from_json(j.at("corruption"));
    if (j.contains("domain")) cfg.domain = domain_from_json(j.at("domain"));
    cfg.certificate.analytic = analytic_from_json(nullptr, link.radius);
    if (j.contains("certificate")) {
        const auto& c = j.at("certificate");
        check_keys(c, {"proposition", "q", "c0", "tau", "analytic", "kappa_scale"}, "certificate");
        if (c.contains("proposition")) cfg.certificate.proposition = proposition_from_json(c.at("proposition"));
        cfg.certificate.q = get_or<double>(c, "q", cfg.certificate.q);
        cfg.certificate.c0 = get_or<double>(c, "c0", cfg.certificate.c0);
        cfg.certificate.tau = opt_number(c, "tau");
        cfg.certificate.kappa_scale = get_or<double>(c, "kappa_scale", 1.0);
        cfg.certificate.analytic = analytic_from_json(c.value("analytic", json(nullptr)), link.radius);
    }
    cfg.c_r = opt_number(j, "c_r");
    cfg.replicates = get_or<int>(j, "replicates", cfg.replicates);
    cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.threads = get_or<int>(j, "threads", cfg.threads);
    if (j.contains("fit")) cfg.fit = fit_options_from_json(j.at("fit"));
    cfg.n_grid = get_or<std::vector<Index>>(j, "n_grid", {});
    cfg.validate();
    return cfg;
}

} // namespace sparsenl::serialize
