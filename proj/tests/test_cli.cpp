#include <doctest.h>
#include <json.hpp>
#include <sys/wait.h>
#include <unistd.h>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome
{
    int code = -1;
    std::string out;
};

const std::string& cli_path()
{
    static const std::string path = [] {
        const char* env = std::getenv("SPARSENL_CLI");
        return std::string(env ? env : "sparsenl_cli");
    }();
    return path;
}

Outcome run(const std::string& args)
{
    const std::string cmd = cli_path() + " " + args + " 2>/dev/null";
    Outcome o;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::array<char, 4096> buf{};
    std::size_t got;
    while ((got = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) o.out.append(buf.data(), got);
    const int status = ::pclose(pipe);
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return o;
}

struct TempDir
{
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("sparsenl_cli_" + std::to_string(::getpid())))
    {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    std::string write(const std::string& name, const std::string& text) const
    {
        std::ofstream(path / name) << text;
        return (path / name).string();
    }
    std::string read(const std::string& name) const
    {
        std::ifstream f(path / name);
        return {std::istreambuf_iterator<char>(f), {}};
    }
};

} // namespace

TEST_CASE("coherence")
{
    TempDir dir;
    const auto m = dir.write("id.csv", "1,0\n0,1\n");
    const auto r = run("coherence " + m);
    CHECK(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j == json{{"mu", 0.0}, {"a", 0.5}, {"b", 0.5}});

    const auto csv = run("--format csv coherence " + m);
    CHECK(csv.code == 0);
    CHECK(csv.out == "mu,a,b\n0,0.5,0.5\n");

    CHECK(run("coherence " + (dir.path / "missing.csv").string()).code == 2);
}

TEST_CASE("usage errors")
{
    CHECK(run("frobnicate").code == 2);
    CHECK(run("").code == 2);
    CHECK(run("--format xml coherence x").code == 2);
}

TEST_CASE("certify")
{
    TempDir dir;
    const auto fail = dir.write("fail.json", R"({"proposition": "basic2", "c1": 1, "c3": 1, "n": 100, "s": 3,
        "tau": 1, "coherence": {"mu": 0.2, "a": 1, "b": 1}})");
    const auto r = run("certify " + fail);
    CHECK(r.code == 1);
    const auto j = json::parse(r.out);
    CHECK(j.at("feasibility").at("tau_condition") == false);
    CHECK(j.at("kappa_r").is_null());
    CHECK_FALSE(j.at("diagnostics").empty());

    const auto ok = dir.write("ok.json", R"({"proposition": "basic", "c1": 0.5, "c2": 2, "n": 100, "s": 4})");
    const auto g = run("certify " + ok);
    CHECK(g.code == 0);
    const auto k = json::parse(g.out);
    CHECK(k.at("c_r") == 10.0);
    CHECK(k.at("kappa_r") == 1.0);
    CHECK(k.at("radius").get<double>() == doctest::Approx(0.2));

    const auto data = dir.write("data.json", R"({"proposition": "basic2", "matrix": [[1,0],[0,1],[1,1],[1,-1]],
        "link": "identity", "interval": [-1, 1], "noise": {"kind": "uniform", "sigma": 0.5}, "s": 1})");
    CHECK(run("certify " + data).code == 0);

    CHECK(run("certify " + dir.write("bad.json", R"({"c1": 1, "n": 10, "bogus": 3})")).code == 2);
    CHECK(run("certify " + dir.write("junk.json", "{not json")).code == 2);
}

TEST_CASE("fit")
{
    TempDir dir;
    const auto prob = dir.write("prob.json", R"({"matrix": [[1,0],[0,1]], "y": [3, 0.5], "link": "identity",
        "kind": "lse", "c_r": 2})");
    const auto r = run("fit " + prob);
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    const auto beta = j.at("beta_hat");
    REQUIRE(beta.size() == 1);
    CHECK(beta[0][0] == 0);
    CHECK(beta[0][1].get<double>() == doctest::Approx(2.0));

    const auto csv = run("--format csv fit " + prob);
    CHECK(csv.out.rfind("index,value\n0,", 0) == 0);

    const auto logistic = dir.write("logit.json", R"({"matrix": [[1,0.5],[0.2,-1],[1,1],[-0.3,0.4]],
        "y": [1, 0, 1, 0], "link": "logistic", "kind": "mle", "c_r": 0.5, "domain": {"interval": [-2, 2]}})");
    CHECK(run("fit " + logistic).code == 0);

    CHECK(run("fit " + dir.write("dims.json", R"({"matrix": [[1,0],[0,1]], "y": [1], "link": "identity",
        "c_r": 1})")).code == 2);
}

TEST_CASE("simulate is reproducible")
{
    TempDir dir;
    const auto cfg = dir.write("sim.json", R"({
        "design": {"kind": "orthogonal", "n": 40, "p": 8},
        "truth": {"s": 2, "magnitude": 0.3},
        "model": "lse", "link": "identity",
        "noise": {"kind": "uniform", "sigma": 0.5},
        "domain": {"interval": [-3, 3]},
        "certificate": {"proposition": "basic2"},
        "replicates": 5})");
    const auto a = run("--seed 7 simulate " + cfg + " --csv " + (dir.path / "a.csv").string());
    const auto b = run("--seed 7 --threads 2 simulate " + cfg + " --csv " + (dir.path / "b.csv").string());
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    CHECK(dir.read("a.csv") == dir.read("b.csv"));
    CHECK_FALSE(dir.read("a.csv").empty());
    CHECK(a.out == b.out);
    const auto j = json::parse(a.out);
    CHECK(j.at("records").size() == 5);

    const auto c = run("--seed 8 simulate " + cfg + " --csv " + (dir.path / "c.csv").string());
    CHECK(dir.read("a.csv") != dir.read("c.csv"));

    const auto out = run("--seed 7 --out " + (dir.path / "report.json").string() + " simulate " + cfg);
    CHECK(out.code == 0);
    CHECK(out.out.empty());
    CHECK(dir.read("report.json") == a.out);

    const auto infeasible = dir.write("inf.json", R"({
        "design": {"kind": "gaussian", "n": 20, "p": 15},
        "truth": {"s": 8, "magnitude": 0.1},
        "link": "identity", "noise": {"kind": "uniform", "sigma": 0.5},
        "domain": {"interval": [-3, 3]}, "replicates": 2})");
    CHECK(run("simulate " + infeasible).code == 1);
}

TEST_CASE("scaling and smooth")
{
    TempDir dir;
    const auto cfg = dir.write("scale.json", R"({
        "design": {"kind": "gaussian", "n": 50, "p": 10},
        "truth": {"s": 1, "magnitude": 0.5},
        "link": "identity", "noise": {"kind": "uniform", "sigma": 0.3},
        "domain": {"interval": [-5, 5]}, "replicates": 3, "n_grid": [50, 100, 150, 200]})");
    const auto r = run("scaling " + cfg);
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out).at("points").size() == 4);

    const auto sm = dir.write("smooth.json", R"({"link": {"kind": "poly", "coeffs": [0, 0, 1]},
        "corruption": {"xi": {"kind": "uniform", "r": 0.3}, "R": 1, "R0": 2}})");
    const auto s = run("smooth " + sm);
    REQUIRE(s.code == 0);
    const auto j = json::parse(s.out);
    CHECK(j.at("series_head")[0].get<double>() == doctest::Approx(0.03));
    CHECK(j.at("method") == "quadrature");
}
