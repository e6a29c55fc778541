#include <sparsenl/cli.hpp>
#include <sparsenl/error.hpp>
#include <sparsenl/io.hpp>
#include <sparsenl/serialize.hpp>
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

namespace sparsenl {

namespace {

using serialize::json;

struct GlobalOptions
{
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string format = "json";
    std::optional<int> threads;
};

void emit(const GlobalOptions& g, const std::string& text)
{
    if (g.out.empty()) {
        std::cout << text;
        std::cout.flush();
        return;
    }
    std::ofstream f(g.out, std::ios::binary);
    if (!f) throw IoError("cannot write " + g.out);
    f << text;
    if (!f) throw IoError("failed writing " + g.out);
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path);
    f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::filesystem::path parent_of(const std::string& path)
{
    auto p = std::filesystem::path(path).parent_path();
    return p.empty() ? std::filesystem::path(".") : p;
}

int cmd_coherence(const GlobalOptions& g, const std::string& path)
{
    const DesignMatrix X(io::read_matrix(path));
    const auto stats = coherence_stats(X);
    if (g.format == "csv") {
        emit(g, "mu,a,b\n" + io::format_double(stats.mu) + "," + io::format_double(stats.a) + "," +
                    io::format_double(stats.b) + "\n");
    } else {
        emit(g, dump(serialize::to_json(stats)));
    }
    return 0;
}

int cmd_certify(const GlobalOptions& g, const std::string& path)
{
    const auto j = serialize::read_json_file(path);
    const auto cert = serialize::certify_from_json(j, parent_of(path));
    if (g.format == "csv") {
        std::ostringstream out;
        out << "key,value\n";
        for (const auto& [key, value] : serialize::to_json(cert).items()) {
            if (value.is_number()) out << key << ',' << io::format_double(value.get<double>()) << '\n';
        }
        emit(g, out.str());
    } else {
        emit(g, dump(serialize::to_json(cert)));
    }
    if (!cert.kappa_r) {
        std::cerr << "certificate infeasible\n";
        for (const auto& d : cert.diagnostics) std::cerr << "  " << d << '\n';
        return 1;
    }
    return 0;
}

int cmd_fit(const GlobalOptions& g, const std::string& path)
{
    const auto j = serialize::read_json_file(path);
    auto spec = serialize::problem_from_json(j, parent_of(path));
    if (g.seed) spec.options.seed = *g.seed;
    const FitResult result = fit(spec.problem, spec.options);
    if (g.format == "csv") {
        std::ostringstream out;
        out << "index,value\n";
        for (Index k = 0; k < result.beta_hat.size(); ++k) {
            if (result.beta_hat(k) != 0.0) out << k << ',' << io::format_double(result.beta_hat(k)) << '\n';
        }
        emit(g, out.str());
    } else {
        json out = serialize::to_json(result);
        out["c_r"] = spec.problem.c_r;
        if (spec.certificate) out["certificate"] = serialize::to_json(*spec.certificate);
        emit(g, dump(out));
    }
    return 0;
}

ExperimentConfig load_experiment(const GlobalOptions& g, const std::string& path)
{
    const auto j = serialize::read_json_file(path);
    ExperimentConfig cfg = serialize::experiment_from_json(j, parent_of(path));
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    return cfg;
}

int cmd_simulate(const GlobalOptions& g, const std::string& path, const std::string& csv_path)
{
    const auto cfg = load_experiment(g, path);
    const CoverageReport report = run_coverage(cfg);
    const std::string csv = coverage_csv(report);
    if (!csv_path.empty()) write_file(csv_path, csv);
    emit(g, g.format == "csv" ? csv : dump(serialize::to_json(report)));
    return 0;
}

int cmd_scaling(const GlobalOptions& g, const std::string& path)
{
    const auto cfg = load_experiment(g, path);
    const ScalingReport report = run_scaling(cfg);
    if (g.format == "csv") {
        std::ostringstream out;
        out << "n,median_error,median_error_2s,c_r\n";
        for (const auto& p : report.points) {
            out << p.n << ',' << io::format_double(p.median_error) << ',' << io::format_double(p.median_error_2s)
                << ',' << io::format_double(p.c_r) << '\n';
        }
        emit(g, out.str());
    } else {
        emit(g, dump(serialize::to_json(report)));
    }
    return 0;
}

int cmd_smooth(const GlobalOptions& g, const std::string& path)
{
    const auto j = serialize::read_json_file(path);
    if (!j.is_object() || !j.contains("link") || !j.contains("corruption")) {
        throw ValidationError("smooth: config needs 'link' and 'corruption'");
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "link" && key != "corruption" && key != "interval") {
            throw ValidationError("smooth: unknown key '" + key + "'");
        }
    }
    const auto link = serialize::link_from_json(j.at("link"));
    const auto* f = std::get_if<AnalyticLink>(&link.link);
    if (!f) throw ValidationError("smooth: link must be analytic");
    const auto spec = serialize::corruption_from_json(j.at("corruption"));
    const Interval I = j.contains("interval") ? serialize::interval_from_json(j.at("interval"))
                                              : Interval{-spec.R, spec.R};
    const SmoothedLink g_link(*f, spec);
    const json diag = serialize::smoothing_diagnostics(g_link, I);
    if (g.format == "csv") {
        std::ostringstream out;
        out << "z,quadrature,series\n";
        for (const auto& row : diag.at("grid")) {
            out << io::format_double(row.at("z").get<double>()) << ','
                << io::format_double(row.at("quadrature").get<double>()) << ','
                << io::format_double(row.at("series").get<double>()) << '\n';
        }
        emit(g, out.str());
    } else {
        emit(g, dump(diag));
    }
    return 0;
}

} // namespace

int run_cli(int argc, char** argv)
{
    CLI::App app{"Sparse nonlinear regression: certificates, fitting and coverage experiments", "sparsenl"};
    app.require_subcommand(1);
    GlobalOptions g;
    std::uint64_t seed = 0;
    int threads = 0;
    auto* seed_opt = app.add_option("--seed", seed, "Override the configuration seed");
    app.add_option("--out", g.out, "Write output to this file instead of stdout");
    app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    auto* threads_opt = app.add_option("--threads", threads, "Worker threads (0: all cores)");

    std::string input;
    std::string csv_path;
    auto* coherence = app.add_subcommand("coherence", "Coherence statistics (mu, a, b) of a design matrix");
    coherence->add_option("matrix", input, "CSV or binary matrix")->required();
    auto* certify = app.add_subcommand("certify", "Bound certificate from a JSON configuration");
    certify->add_option("config", input, "Certificate configuration")->required();
    auto* fit_cmd = app.add_subcommand("fit", "Fit an l1-regularized problem described in JSON");
    fit_cmd->add_option("problem", input, "Problem specification")->required();
    auto* simulate = app.add_subcommand("simulate", "Monte Carlo coverage experiment");
    simulate->add_option("config", input, "Experiment configuration")->required();
    simulate->add_option("--csv", csv_path, "Also write the per-replicate CSV here");
    auto* scaling = app.add_subcommand("scaling", "Error scaling experiment over a grid of n");
    scaling->add_option("config", input, "Experiment configuration with n_grid")->required();
    auto* smooth = app.add_subcommand("smooth", "Diagnostics for a link smoothed by bounded inner noise");
    smooth->add_option("config", input, "JSON with link, corruption and optional interval")->required();
    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    if (*seed_opt) g.seed = seed;
    if (*threads_opt) g.threads = threads;

    try {
        if (*coherence) return cmd_coherence(g, input);
        if (*certify) return cmd_certify(g, input);
        if (*fit_cmd) return cmd_fit(g, input);
        if (*simulate) return cmd_simulate(g, input, csv_path);
        if (*scaling) return cmd_scaling(g, input);
        if (*smooth) return cmd_smooth(g, input);
    } catch (const InfeasibleCertificate& e) {
        std::cerr << "infeasible: " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const serialize::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    std::cerr << app.help();
    return 2;
}

} // namespace sparsenl
