// sge: convergence studies, verification checks and single solves.
// Exit codes: 0 success, 1 failed check, 2 solver breakdown, 3 bad configuration.

#include "sge/sge.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace sge;

namespace {

constexpr int kExitCheckFailed = 1;
constexpr int kExitBreakdown = 2;
constexpr int kExitBadConfig = 3;

struct BadConfig : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// `key = value` lines, `#` starts a comment.
std::map<std::string, std::string> read_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is) throw BadConfig("cannot open config file " + path);
    std::map<std::string, std::string> out;
    int lineno = 0;
    for (std::string line; std::getline(is, line);) {
        ++lineno;
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw BadConfig(path + ":" + std::to_string(lineno) + ": expected key = value");
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text)
{
    std::vector<T> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        std::istringstream is(item);
        T v{};
        if (item.empty() || !(is >> v) || !is.eof()) throw BadConfig("bad value '" + item + "' for " + key);
        out.push_back(v);
    }
    if (out.empty()) throw BadConfig("empty list for " + key);
    return out;
}

template <class T>
T parse_scalar(const std::string& key, const std::string& text)
{
    const auto v = parse_list<T>(key, text);
    if (v.size() != 1) throw BadConfig(key + " takes a single value");
    return v.front();
}

SaddleMethod parse_method(const std::string& s)
{
    if (s == "auto") return SaddleMethod::automatic;
    if (s == "ldlt") return SaddleMethod::block_ldlt;
    if (s == "schur") return SaddleMethod::schur_cg;
    throw BadConfig("unknown solver '" + s + "' (expected auto, ldlt or schur)");
}

struct ConvergenceArgs {
    StudyConfig cfg;
    std::string config_file;
    std::string solver = "auto";
    CLI::Option* example = nullptr;
    CLI::Option* lambda = nullptr;
    CLI::Option* iota = nullptr;
    CLI::Option* n = nullptr;
    CLI::Option* mu = nullptr;
    CLI::Option* tol = nullptr;
    CLI::Option* threads = nullptr;
};

// Fills everything not given on the command line from the example defaults
// and the optional config file.
StudyConfig resolve(const ConvergenceArgs& a)
{
    std::map<std::string, std::string> file;
    if (!a.config_file.empty()) file = read_config(a.config_file);
    for (const auto& [key, value] : file) {
        static const std::vector<std::string> known{"example", "lambda", "iota", "n", "mu", "tol", "threads", "solver"};
        if (std::find(known.begin(), known.end(), key) == known.end()) throw BadConfig("unknown config key '" + key + "'");
    }
    std::string example = a.cfg.example;
    if (a.example->count() == 0 && file.count("example")) example = file.at("example");
    if (example != "example1" && example != "example2") {
        throw BadConfig("example must be example1 or example2, got '" + example + "'");
    }
    StudyConfig c = StudyConfig::defaults(example);
    c.out = a.cfg.out;
    c.large = a.cfg.large;
    const auto pick = [&](CLI::Option* opt, const char* key, auto& field, const auto& from_cli, auto parse) {
        if (opt->count() > 0) {
            field = from_cli;
        } else if (file.count(key)) {
            field = parse(key, file.at(key));
        }
    };
    pick(a.lambda, "lambda", c.lambdas, a.cfg.lambdas, parse_list<double>);
    pick(a.iota, "iota", c.iotas, a.cfg.iotas, parse_list<double>);
    pick(a.n, "n", c.ns, a.cfg.ns, parse_list<int>);
    pick(a.mu, "mu", c.mu, a.cfg.mu, parse_scalar<double>);
    pick(a.tol, "tol", c.tol, a.cfg.tol, parse_scalar<double>);
    pick(a.threads, "threads", c.threads, a.cfg.threads, parse_scalar<int>);
    std::string solver = a.solver;
    if (solver == "auto" && file.count("solver")) solver = file.at("solver");
    c.method = parse_method(solver);
    if (c.large) {
        for (int extra : {128, 256}) {
            if (std::find(c.ns.begin(), c.ns.end(), extra) == c.ns.end()) c.ns.push_back(extra);
        }
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw BadConfig(e.what());
    }
    return c;
}

int run_convergence_command(const ConvergenceArgs& args)
{
    const StudyConfig c = resolve(args);
    const std::vector<ConvergenceRow> rows = run_convergence(c, &std::cerr);
    if (c.out.empty()) {
        write_convergence_csv(std::cout, rows);
    } else {
        std::ofstream os(c.out);
        if (!os) throw BadConfig("cannot write " + c.out);
        write_convergence_csv(os, rows);
        write_rate_summary(std::cout, rows);
    }
    const bool broke = std::any_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return r.status != "ok"; });
    return broke ? kExitBreakdown : 0;
}

struct VerifyArgs {
    std::vector<int> ns{2, 4, 8};
    std::string out;
    bool skip_infsup = false;
    bool flip_normal = false;
    std::size_t triangles = 100;
    std::uint64_t seed = 20240607;
};

int run_verify_command(const VerifyArgs& a)
{
    for (int n : a.ns) {
        if (n < 2) throw BadConfig("verify needs n >= 2 (an interior edge)");
    }
    VerificationReport report;
    std::vector<Triangle> tris = random_shape_regular_triangles(a.triangles, a.seed);
    tris.push_back(reference_triangle());
    report.append(check_unisolvence(tris, VerifyThresholds{}.unisolvence_condition));

    std::vector<NormalFlip> flips;
    if (a.flip_normal) flips.push_back({3, 0});
    for (int n : a.ns) {
        report.append(check_weak_continuity(build_uniform_unit_square(n), flips, VerifyThresholds{}.weak_continuity,
                                            "weak_continuity[n=" + std::to_string(n) + "]"));
    }

    if (!a.skip_infsup) {
        // one interior pressure DoF plus the mean constraint leaves nothing to test at n = 2
        std::vector<int> ns;
        std::copy_if(a.ns.begin(), a.ns.end(), std::back_inserter(ns), [](int n) { return n >= 3; });
        if (ns.empty()) throw BadConfig("inf-sup estimate needs some n >= 3 (or --skip-infsup)");
        report.append(infsup_report(infsup_sweep(ns, {1.0, 1e-2, 1e-4, 1e-6})));
        const Mesh coarse = build_uniform_unit_square(ns.front());
        for (double iota : {1.0, 1e-2, 1e-6}) {
            const double alpha = estimate_coercivity(coarse, {1.0, 1.0, iota});
            std::ostringstream name;
            name << "coercivity[n=" << ns.front() << ",iota=" << iota << "]";
            report.add({name.str(), alpha, 0.0, alpha > 0.0, "min eig of A against 2 mu G_V"});
        }
    }

    report.write_text(std::cout);
    if (!a.out.empty()) {
        std::ofstream os(a.out);
        if (!os) throw BadConfig("cannot write " + a.out);
        report.write_csv(os);
    }
    return report.all_pass() ? 0 : kExitCheckFailed;
}

struct SolveArgs {
    SolveRequest req;
    std::string solver = "auto";
    std::string out;
};

int run_solve_command(SolveArgs a)
{
    if (a.req.example != "example1" && a.req.example != "example2") {
        throw BadConfig("example must be example1 or example2");
    }
    if (a.req.n < 2) throw BadConfig("n must be >= 2");
    a.req.method = parse_method(a.solver);
    const SolveReport rep = [&] {
        try {
            return run_solve(a.req);
        } catch (const std::invalid_argument& e) {
            throw BadConfig(e.what());
        }
    }();
    std::cerr << a.req.example << " lambda=" << a.req.lambda << " iota=" << a.req.iota << " n=" << a.req.n
              << " dofs_u=" << rep.dofs_u << " dofs_p=" << rep.dofs_p << " E_u=" << rep.norms.relative_u_table()
              << " residual=" << rep.solution.residual << '\n';
    if (a.out.empty()) {
        write_vertex_csv(std::cout, rep.samples);
    } else {
        std::ofstream os(a.out);
        if (!os) throw BadConfig("cannot write " + a.out);
        write_vertex_csv(os, rep.samples);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Mixed finite element solver for strain gradient elasticity"};
    app.require_subcommand(1);

    ConvergenceArgs conv;
    auto* c = app.add_subcommand("convergence", "convergence study on uniform meshes of the unit square");
    conv.example = c->add_option("--example", conv.cfg.example, "example1 or example2");
    conv.lambda = c->add_option("--lambda", conv.cfg.lambdas, "comma separated lambda values")->delimiter(',');
    conv.iota = c->add_option("--iota", conv.cfg.iotas, "comma separated iota values")->delimiter(',');
    conv.n = c->add_option("--n", conv.cfg.ns, "comma separated subdivisions")->delimiter(',');
    conv.mu = c->add_option("--mu", conv.cfg.mu, "shear modulus");
    conv.tol = c->add_option("--tol", conv.cfg.tol, "relative residual tolerance");
    conv.threads = c->add_option("--threads", conv.cfg.threads, "assembly threads");
    c->add_option("--out", conv.cfg.out, "CSV output path (stdout if empty)");
    c->add_flag("--large", conv.cfg.large, "append n = 128, 256");
    c->add_option("--config", conv.config_file, "key = value file; command line options take precedence");
    c->add_option("--solver", conv.solver, "auto, ldlt or schur");

    VerifyArgs ver;
    auto* v = app.add_subcommand("verify", "unisolvence, weak continuity, inf-sup and coercivity checks");
    v->add_option("--n", ver.ns, "comma separated subdivisions")->delimiter(',');
    v->add_option("--out", ver.out, "CSV report path");
    v->add_option("--triangles", ver.triangles, "random triangles for the unisolvence check");
    v->add_option("--seed", ver.seed, "seed for the random triangles");
    v->add_flag("--skip-infsup", ver.skip_infsup, "skip the inf-sup and coercivity estimates");
    v->add_flag("--debug-flip-normal", ver.flip_normal, "reverse one edge normal to exercise the failure path");

    SolveArgs sol;
    auto* s = app.add_subcommand("solve", "single solve with vertex output");
    s->add_option("--example", sol.req.example, "example1 or example2");
    s->add_option("--lambda", sol.req.lambda, "lambda");
    s->add_option("--iota", sol.req.iota, "iota");
    s->add_option("--n", sol.req.n, "subdivisions");
    s->add_option("--mu", sol.req.mu, "shear modulus");
    s->add_option("--tol", sol.req.tol, "relative residual tolerance");
    s->add_option("--threads", sol.req.threads, "assembly threads");
    s->add_option("--solver", sol.solver, "auto, ldlt or schur");
    s->add_option("--out", sol.out, "vertex CSV path (stdout if empty)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitBadConfig;
    }

    try {
        if (c->parsed()) return run_convergence_command(conv);
        if (v->parsed()) return run_verify_command(ver);
        return run_solve_command(sol);
    } catch (const BadConfig& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitBadConfig;
    } catch (const SolverBreakdown& e) {
        std::cerr << "solver breakdown: " << e.what() << " (residual " << e.residual() << ")\n";
        return kExitBreakdown;
    }
}
