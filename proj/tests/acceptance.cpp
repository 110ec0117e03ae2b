// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 only if
// every required criterion passes. `--large` adds the n = 128, 256 runs.

#include "oracles.hpp"
#include "sge/sge.hpp"

#include <CLI11.hpp>

#include <sys/resource.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace sge;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double peak_rss_gb()
{
    rusage u{};
    getrusage(RUSAGE_SELF, &u);
    return static_cast<double>(u.ru_maxrss) / (1024.0 * 1024.0);
}

// Published value or range [lo, hi].
struct Target {
    double lo;
    double hi;
};

// Relative distance from v to the published range (0 inside it).
double deviation(double v, Target t)
{
    if (v < t.lo) return (t.lo - v) / t.lo;
    if (v > t.hi) return (v - t.hi) / t.hi;
    return 0.0;
}

struct Gate {
    int failures = 0;

    void report(const std::string& id, bool pass, const std::string& text)
    {
        std::printf("[%s] %s %s\n", pass ? "PASS" : "FAIL", id.c_str(), text.c_str());
        std::fflush(stdout);
        if (!pass) ++failures;
    }
};

std::string fmt(const char* f, double a)
{
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::vector<ConvergenceRow> study(const std::string& example, std::vector<double> iotas, std::vector<int> ns)
{
    StudyConfig c = StudyConfig::defaults(example);
    c.iotas = std::move(iotas);
    c.ns = std::move(ns);
    return run_convergence(c);
}

void print_rows(const std::vector<ConvergenceRow>& rows)
{
    for (const auto& r : rows) {
        std::printf("       %s lambda=%.0e iota=%.0e n=%d E=%.5e rate=%s %s\n", r.example.c_str(), r.lambda, r.iota,
                    r.n, r.e_u, std::isnan(r.rate) ? "-" : fmt("%.3f", r.rate).c_str(), r.status.c_str());
    }
}

// Worst deviation from the targets (indexed like `ns`) over every row with the given iota.
double worst_deviation(const std::vector<ConvergenceRow>& rows, double iota, const std::vector<int>& ns,
                       const std::vector<Target>& targets)
{
    double worst = 0.0;
    for (const auto& r : rows) {
        if (r.iota != iota) continue;
        const auto it = std::find(ns.begin(), ns.end(), r.n);
        const auto k = static_cast<std::size_t>(it - ns.begin());
        worst = std::max(worst, r.status == "ok" ? deviation(r.e_u, targets[k]) : INFINITY);
    }
    return worst;
}

// Last-pair rates of every lambda for the given iota.
std::vector<double> last_rates(const std::vector<ConvergenceRow>& rows, double iota, int n_last)
{
    std::vector<double> out;
    for (const auto& r : rows) {
        if (r.iota == iota && r.n == n_last) out.push_back(r.rate);
    }
    return out;
}

bool all_within(const std::vector<double>& v, double lo, double hi)
{
    return !v.empty() && std::all_of(v.begin(), v.end(), [&](double x) { return x >= lo && x <= hi; });
}

std::string range_text(const std::vector<double>& v)
{
    if (v.empty()) return "none";
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return fmt("%.3f", *lo) + ".." + fmt("%.3f", *hi);
}

const std::vector<int> kTableNs{16, 32, 64};

void criterion_1_to_3(Gate& gate)
{
    const auto t0 = Clock::now();
    const std::vector<ConvergenceRow> fine = study("example1", {1e-8}, kTableNs);
    const double runtime = seconds_since(t0);
    print_rows(fine);
    const double dev = worst_deviation(fine, 1e-8, kTableNs, {{2.008e-3, 2.009e-3}, {5.477e-4, 5.477e-4}, {1.407e-4, 1.407e-4}});
    gate.report("C1", dev <= 0.02 && runtime < 120.0,
                "Table 1, example1 iota=1e-8, all lambda: max rel dev " + fmt("%.3f%%", 100.0 * dev)
                    + " (tol 2%), runtime " + fmt("%.1f s", runtime) + " (target < 120 s)");

    const std::vector<ConvergenceRow> coarse = study("example1", {1e0, 1e-1}, kTableNs);
    print_rows(coarse);
    const double dev1 = worst_deviation(coarse, 1e0, kTableNs, {{5.375e-4, 5.375e-4}, {2.776e-4, 2.776e-4}, {1.399e-4, 1.399e-4}});
    const double dev01 = worst_deviation(coarse, 1e-1, kTableNs, {{4.561e-3, 4.562e-3}, {2.334e-3, 2.334e-3}, {1.173e-3, 1.173e-3}});
    // 1.96 at n = 64 vs 32 is the published intermediate rate; 2.00 +- 0.10 contains it
    const std::vector<double> r_fine = last_rates(fine, 1e-8, 64);
    std::vector<double> r_coarse = last_rates(coarse, 1e0, 64);
    const std::vector<double> r01 = last_rates(coarse, 1e-1, 64);
    r_coarse.insert(r_coarse.end(), r01.begin(), r01.end());
    const bool ok2 = dev1 <= 0.02 && dev01 <= 0.02 && all_within(r_fine, 1.90, 2.10) && all_within(r_coarse, 0.90, 1.10);
    gate.report("C2", ok2,
                "Table 1 iota regimes: max rel dev iota=1 " + fmt("%.3f%%", 100.0 * dev1) + ", iota=0.1 "
                    + fmt("%.3f%%", 100.0 * dev01) + " (tol 2%); last-pair rates iota=1e-8 " + range_text(r_fine)
                    + " (2.00+-0.10), iota=1,0.1 " + range_text(r_coarse) + " (1.00+-0.10)");

    std::vector<ConvergenceRow> all = fine;
    all.insert(all.end(), coarse.begin(), coarse.end());
    std::map<std::pair<double, int>, std::vector<double>> by_cell;
    for (const auto& r : all) by_cell[{r.iota, r.n}].push_back(r.e_u);
    double spread = 0.0;
    for (const auto& [key, es] : by_cell) {
        const auto [lo, hi] = std::minmax_element(es.begin(), es.end());
        spread = std::max(spread, (*hi - *lo) / *lo);
    }
    gate.report("C3", spread < 0.005,
                "lambda-robustness: max spread of E over lambda in {1,1e4,1e8} per (iota,n) "
                    + fmt("%.4f%%", 100.0 * spread) + " (tol 0.5%)");
}

void criterion_4(Gate& gate, bool large)
{
    const std::vector<ConvergenceRow> rows = study("example2", {1e-6, 1e-8}, kTableNs);
    print_rows(rows);
    const std::vector<Target> targets{{2.052e-2, 2.053e-2}, {1.445e-2, 1.446e-2}, {1.020e-2, 1.020e-2}};
    const double dev = std::max(worst_deviation(rows, 1e-6, kTableNs, targets), worst_deviation(rows, 1e-8, kTableNs, targets));
    bool trend = true;
    std::vector<double> last;
    for (std::size_t i = 2; i < rows.size(); i += 3) {
        trend = trend && rows[i - 1].rate >= rows[i].rate;
        last.push_back(rows[i].rate);
    }
    trend = trend && all_within(last, 0.45, 0.55);
    gate.report("C4", dev <= 0.02 && trend,
                "Table 2, example2 iota in {1e-6,1e-8}, all lambda: max rel dev " + fmt("%.3f%%", 100.0 * dev)
                    + " (tol 2%); rates decreasing, last-pair " + range_text(last) + " (toward 0.50)");

    if (!large) {
        std::printf("[SKIP] C4-large n in {128,256} not requested (run with --large)\n");
        return;
    }
    const std::vector<int> ns{128, 256};
    const auto t0 = Clock::now();
    const std::vector<ConvergenceRow> big = study("example2", {1e-6, 1e-8}, ns);
    const double runtime = seconds_since(t0);
    print_rows(big);
    const std::vector<Target> big_targets{{7.206e-3, 7.207e-3}, {5.093e-3, 5.094e-3}};
    const double bdev = std::max(worst_deviation(big, 1e-6, ns, big_targets), worst_deviation(big, 1e-8, ns, big_targets));
    std::vector<double> rates;
    for (const auto& r : big) {
        if (r.n == 256) rates.push_back(r.rate);
    }
    const double rss = peak_rss_gb();
    gate.report("C4-large", bdev <= 0.02 && all_within(rates, 0.45, 0.55) && runtime < 1800.0 && rss < 16.0,
                "Table 2 n in {128,256}: max rel dev " + fmt("%.3f%%", 100.0 * bdev) + " (tol 2%), last-pair rates "
                    + range_text(rates) + " (0.50+-0.05), runtime " + fmt("%.0f s", runtime) + " (< 1800 s), peak RSS "
                    + fmt("%.2f GB", rss) + " (< 16 GB)");
}

std::vector<Point2> interior_points(int count)
{
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    std::vector<Point2> pts;
    for (int i = 0; i < count; ++i) pts.push_back({dist(gen), dist(gen)});
    return pts;
}

void criterion_5(Gate& gate)
{
    const auto t0 = Clock::now();
    VerificationReport report;

    report.append(check_unisolvence(random_shape_regular_triangles(100, 20240607),
                                    VerifyThresholds{}.unisolvence_condition, "unisolvence.random100"));
    for (int n : {2, 4, 8}) {
        report.append(check_weak_continuity(build_uniform_unit_square(n), {}, 1e-10,
                                            "weak_continuity[n=" + std::to_string(n) + "]"));
    }
    report.append(infsup_report(infsup_sweep({4, 8}, {1.0, 1e-2, 1e-4, 1e-6})));

    // manufactured-field identities
    double div_worst = 0.0;
    double bc_worst = 0.0;
    for (const AnalyticField& field : {example1_field(), example2_field()}) {
        for (const Point2 x : interior_points(200)) div_worst = std::max(div_worst, std::abs(divergence(partials(field, x))));
        for (int i = 0; i <= 40; ++i) {
            const double t = i / 40.0;
            for (const Point2 x : {Point2{t, 0.0}, Point2{t, 1.0}, Point2{0.0, t}, Point2{1.0, t}}) {
                const FieldSample s = sample_field(field, x);
                double v = s.value.cwiseAbs().maxCoeff();
                if (field.name == "example1") v = std::max(v, s.grad.cwiseAbs().maxCoeff());
                bc_worst = std::max(bc_worst, v);
            }
        }
    }
    report.add({"fields.divergence", div_worst, 1e-12, div_worst < 1e-12, "both fields, 400 points"});
    report.add({"fields.boundary", bc_worst, 1e-12, bc_worst < 1e-12, "u = 0; grad u = 0 for example1"});

    // jets against finite differences of the closed forms
    double sge_rel = 0.0;
    double ela_rel = 0.0;
    double ela_fd_rel = 0.0;
    const ProblemParams sge_prm{1.0, 0.0, 0.3};
    const ProblemParams ela_prm{1.0, 0.0, 0.0};
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> dist(0.05, 0.95);
    for (int i = 0; i < 20; ++i) {
        const Point2 x{dist(gen), dist(gen)};
        const Eigen::Vector2d a = sge_force(partials(example1_field(), x), sge_prm);
        const Eigen::Vector2d b = sge_force(oracle::fd_partials(oracle::example1, x, 1e-2), sge_prm);
        sge_rel = std::max(sge_rel, (a - b).norm() / std::max(1.0, a.norm()));
        const Eigen::Vector2d c = elasticity_force(partials(example2_field(), x), ela_prm);
        const Eigen::Vector2d d = oracle::example2_elasticity_force(x);
        ela_rel = std::max(ela_rel, (c - d).norm() / std::max(1.0, d.norm()));
        const Eigen::Vector2d e = elasticity_force(oracle::fd_partials(oracle::example2, x, 0.1), ela_prm);
        ela_fd_rel = std::max(ela_fd_rel, (c - e).norm() / std::max(1.0, c.norm()));
    }
    report.add({"force.sge_vs_fd", sge_rel, 1e-4, sge_rel < 1e-4, "example1, iota=0.3, Richardson differences"});
    report.add({"force.elasticity_vs_symbolic", ela_rel, 1e-12, ela_rel < 1e-12, "example2, hand-derived -Lap u"});
    report.add({"force.elasticity_vs_fd", ela_fd_rel, 1e-12, ela_fd_rel < 1e-12, "example2, differences exact on quartics"});

    // saddle solve against a dense oracle, energy identity
    double solve_rel = 0.0;
    double energy_rel = 0.0;
    for (int n : {2, 3}) {
        const Discretization disc(n, 1e-2, 1.0);
        const VectorField f = example_force(example2_field(), ProblemParams{1.0, 0.0, 1e-2});
        const SaddleSystem sys = disc.system(1.0, disc.load(f));
        const oracle::DenseSaddle o = oracle::dense_saddle(sys);
        const SaddleSolution s = solve_saddle(sys, 1e-12);
        solve_rel = std::max(solve_rel, (s.u - o.u).norm() / o.u.norm());
        const double lhs = s.u.dot(sys.A * s.u) + s.p.dot(sys.C * s.p);
        energy_rel = std::max(energy_rel, std::abs(lhs - sys.rhs_u.dot(s.u)) / std::abs(lhs));
    }
    report.add({"saddle.dense_oracle", solve_rel, 1e-10, solve_rel < 1e-10, "example2, iota=1e-2, n=2,3"});
    {
        const Discretization disc(8, 1e-1, 1.0);
        const VectorField f = example_force(example1_field(), ProblemParams{1.0, 0.0, 1e-1});
        const SaddleSystem sys = disc.system(1e4, disc.load(f));
        const SaddleSolution s = solve_saddle(sys, 1e-10);
        const double lhs = s.u.dot(sys.A * s.u) + s.p.dot(sys.C * s.p);
        energy_rel = std::max(energy_rel, std::abs(lhs - sys.rhs_u.dot(s.u)) / std::abs(lhs));
    }
    report.add({"saddle.energy_identity", energy_rel, 1e-8, energy_rel < 1e-8, "a(u,u) + c(p,p) = (f,u)"});

    const double runtime = seconds_since(t0);
    report.add({"suite.runtime_s", runtime, 60.0, runtime < 60.0, ""});
    std::ostringstream text;
    report.write_text(text);
    std::istringstream lines(text.str());
    for (std::string line; std::getline(lines, line);) std::printf("       %s\n", line.c_str());
    std::size_t failed = 0;
    for (const auto& c : report.checks) failed += c.pass ? 0 : 1;
    gate.report("C5", report.all_pass(),
                "property suite: " + std::to_string(report.checks.size() - failed) + "/"
                    + std::to_string(report.checks.size()) + " checks pass, " + fmt("%.1f s", runtime) + " (< 60 s)");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance gate for the strain gradient elasticity solver"};
    bool large = false;
    app.add_flag("--large", large, "also run example2 at n = 128, 256");
    CLI11_PARSE(app, argc, argv);

    Gate gate;
    try {
        criterion_5(gate);
        criterion_1_to_3(gate);
        criterion_4(gate, large);
    } catch (const std::exception& e) {
        std::printf("[FAIL] aborted: %s\n", e.what());
        return 1;
    }
    std::printf("[N/A ] C6 regularity constants and hidden constants of the error estimates are not measurable "
                "(excluded)\n");
    std::printf("%s: %d failing criteria\n", gate.failures == 0 ? "ACCEPTED" : "REJECTED", gate.failures);
    return gate.failures == 0 ? 0 : 1;
}
