#pragma once

/**
 * @file study.hpp
 * @brief Assemble-solve-measure pipeline and the convergence study driver.
 */

#include "sge/assembly.hpp"
#include "sge/linalg.hpp"
#include "sge/manufactured.hpp"
#include "sge/mesh.hpp"
#include "sge/space.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace sge {

/// Everything that depends on the mesh and iota but not on lambda.
class Discretization {
public:
    Discretization(int n, double iota, double mu, int threads = 1)
        : n_(n), iota_(iota), mu_(mu), threads_(threads), mesh_(build_uniform_unit_square(n)),
          vmap_(build_vdofmap(mesh_)), qmap_(build_qdofmap(mesh_)), cache_(mesh_, threads)
    {
        const ProblemParams p{mu, 1.0, iota};
        p.validate();
        a_ = assemble_a(mesh_, cache_, vmap_, p, threads);
        b_ = assemble_b(mesh_, cache_, vmap_, qmap_, iota, threads);
        gram_q_ = assemble_pressure_gram(mesh_, qmap_, iota);
        m_ = mean_constraint(mesh_, qmap_);
    }

    [[nodiscard]] int n() const { return n_; }
    [[nodiscard]] double iota() const { return iota_; }
    [[nodiscard]] double mu() const { return mu_; }
    [[nodiscard]] const Mesh& mesh() const { return mesh_; }
    [[nodiscard]] const VDofMap& vmap() const { return vmap_; }
    [[nodiscard]] const QDofMap& qmap() const { return qmap_; }
    [[nodiscard]] const BasisCache& cache() const { return cache_; }
    [[nodiscard]] const SparseMatrix& A() const { return a_; }
    [[nodiscard]] const SparseMatrix& B() const { return b_; }

    [[nodiscard]] Eigen::VectorXd load(const VectorField& f) const { return assemble_load(mesh_, cache_, vmap_, f); }

    [[nodiscard]] SaddleSystem system(double lambda, const Eigen::VectorXd& rhs) const
    {
        if (!(lambda > 0.0)) throw std::invalid_argument("Discretization: lambda must be positive");
        SaddleSystem sys;
        sys.A = a_;
        sys.B = b_;
        sys.C = (1.0 / lambda) * gram_q_;
        sys.m = m_;
        sys.rhs_u = rhs;
        sys.pressure_gram = gram_q_;
        return sys;
    }

private:
    int n_;
    double iota_;
    double mu_;
    int threads_;
    Mesh mesh_;
    VDofMap vmap_;
    QDofMap qmap_;
    BasisCache cache_;
    SparseMatrix a_;
    SparseMatrix b_;
    SparseMatrix gram_q_;
    Eigen::VectorXd m_;
};

/// Right-hand side for a named example. For divergence-free fields the lambda
/// terms vanish identically and are dropped so that round-off in div u is not
/// amplified by large lambda.
inline VectorField example_force(const AnalyticField& field, ProblemParams params)
{
    if (field.divergence_free) params.lambda = 0.0;
    return study_force(field, params);
}

struct StudyConfig {
    std::string example = "example1";
    std::vector<double> lambdas{1e0, 1e4, 1e8};
    std::vector<double> iotas{1e0, 1e-1, 1e-8};
    std::vector<int> ns{16, 32, 64};
    double mu = 1.0;
    double tol = 1e-10;
    std::string out;
    int threads = 1;
    bool large = false;
    SaddleMethod method = SaddleMethod::automatic;

    void validate() const
    {
        if (example != "example1" && example != "example2") {
            throw std::invalid_argument("StudyConfig: example must be example1 or example2");
        }
        if (lambdas.empty() || iotas.empty() || ns.empty()) {
            throw std::invalid_argument("StudyConfig: lambda, iota and n lists must be nonempty");
        }
        for (int n : ns) {
            if (n < 2) throw std::invalid_argument("StudyConfig: n values must be >= 2");
        }
        for (double l : lambdas) {
            if (!(l > 0.0)) throw std::invalid_argument("StudyConfig: lambda values must be positive");
        }
        for (double i : iotas) {
            if (!(i >= 0.0 && i <= 1.0)) throw std::invalid_argument("StudyConfig: iota values must lie in [0, 1]");
        }
        if (!(mu > 0.0)) throw std::invalid_argument("StudyConfig: mu must be positive");
        if (!(tol > 1e-14 && tol < 1e-6)) throw std::invalid_argument("StudyConfig: tol must lie in (1e-14, 1e-6)");
        if (threads < 1) throw std::invalid_argument("StudyConfig: threads must be >= 1");
    }

    /// Default grid for an example (the iota list differs between examples).
    static StudyConfig defaults(const std::string& example)
    {
        StudyConfig c;
        c.example = example;
        if (example == "example2") c.iotas = {1e-4, 1e-6, 1e-8};
        return c;
    }
};

struct ConvergenceRow {
    std::string example;
    double lambda = 0.0;
    double iota = 0.0;
    int n = 0;
    double h = 0.0;
    int dofs_u = 0;
    int dofs_p = 0;
    double e_u = std::numeric_limits<double>::quiet_NaN();
    double e_p = std::numeric_limits<double>::quiet_NaN();
    double rate = std::numeric_limits<double>::quiet_NaN();  // vs the previous n of the same (lambda, iota)
    std::string status = "ok";
};

struct SolveOutcome {
    ErrorNorms norms;
    SaddleSolution solution;
};

/// Assemble-solve-measure for one lambda on a prepared discretization.
inline SolveOutcome solve_and_measure(const Discretization& disc, const AnalyticField& field, double lambda,
                                      double tol, const VectorField& f, const Eigen::VectorXd& rhs,
                                      SaddleMethod method = SaddleMethod::automatic)
{
    const SaddleSystem sys = disc.system(lambda, rhs);
    SolveOutcome out;
    out.solution = SaddleSolver(sys, method).solve(sys.rhs_u, tol);
    const ProblemParams params{disc.mu(), field.divergence_free ? 0.0 : lambda, disc.iota()};
    out.norms = error_norms(disc.mesh(), disc.cache(), disc.vmap(), disc.qmap(), out.solution.u, out.solution.p,
                            field, params, f);
    return out;
}

inline double convergence_rate(double e_coarse, double e_fine, int n_coarse, int n_fine)
{
    return std::log(e_coarse / e_fine) / std::log(static_cast<double>(n_fine) / n_coarse);
}

/// Rows ordered by lambda, then iota, then n (as listed in the config).
inline std::vector<ConvergenceRow> run_convergence(const StudyConfig& config, std::ostream* progress = nullptr)
{
    config.validate();
    const AnalyticField field = field_by_name(config.example);
    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, ConvergenceRow> results;

    for (std::size_t ii = 0; ii < config.iotas.size(); ++ii) {
        for (std::size_t in = 0; in < config.ns.size(); ++in) {
            const double iota = config.iotas[ii];
            const int n = config.ns[in];
            const Discretization disc(n, iota, config.mu, config.threads);
            const VectorField f = example_force(field, ProblemParams{config.mu, 0.0, iota});
            const Eigen::VectorXd rhs = disc.load(f);
            for (std::size_t il = 0; il < config.lambdas.size(); ++il) {
                ConvergenceRow row;
                row.example = config.example;
                row.lambda = config.lambdas[il];
                row.iota = iota;
                row.n = n;
                row.h = disc.mesh().h();
                row.dofs_u = disc.vmap().n_free;
                row.dofs_p = disc.qmap().n_free;
                try {
                    const SolveOutcome r = solve_and_measure(disc, field, row.lambda, config.tol, f, rhs, config.method);
                    row.e_u = r.norms.relative_u_table();
                    row.e_p = r.norms.relative_p();
                } catch (const SolverBreakdown&) {
                    row.status = "breakdown";
                }
                if (progress) {
                    *progress << config.example << " lambda=" << row.lambda << " iota=" << row.iota << " n=" << n
                              << " E=" << row.e_u << " [" << row.status << "]" << std::endl;
                }
                results[{il, ii, in}] = row;
            }
        }
    }

    std::vector<ConvergenceRow> rows;
    for (std::size_t il = 0; il < config.lambdas.size(); ++il) {
        for (std::size_t ii = 0; ii < config.iotas.size(); ++ii) {
            for (std::size_t in = 0; in < config.ns.size(); ++in) {
                ConvergenceRow row = results.at({il, ii, in});
                if (in > 0) {
                    const ConvergenceRow& prev = results.at({il, ii, in - 1});
                    if (row.status == "ok" && prev.status == "ok") {
                        row.rate = convergence_rate(prev.e_u, row.e_u, prev.n, row.n);
                    }
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

namespace detail {

inline std::string sci(double v)
{
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.5e", v);
    return buf;
}

inline std::string fixed(double v, int digits)
{
    if (std::isnan(v)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

} // namespace detail

inline constexpr const char* kConvergenceHeader = "example,lambda,iota,n,h,dofs_u,dofs_p,E_u,E_p,rate,status";

inline void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows)
{
    os << kConvergenceHeader << '\n';
    for (const auto& r : rows) {
        os << r.example << ',' << detail::sci(r.lambda) << ',' << detail::sci(r.iota) << ',' << r.n << ','
           << detail::sci(r.h) << ',' << r.dofs_u << ',' << r.dofs_p << ',' << detail::sci(r.e_u) << ','
           << detail::sci(r.e_p) << ',' << detail::fixed(r.rate, 4) << ',' << r.status << '\n';
    }
}

/// Table-style summary: one line per (lambda, iota) with E per h and the last-pair rate.
inline void write_rate_summary(std::ostream& os, const std::vector<ConvergenceRow>& rows)
{
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i;
        while (j < rows.size() && rows[j].lambda == rows[i].lambda && rows[j].iota == rows[i].iota) ++j;
        char head[64];
        std::snprintf(head, sizeof head, "lambda=%.0e iota=%.0e |", rows[i].lambda, rows[i].iota);
        os << head;
        for (std::size_t k = i; k < j; ++k) {
            char cell[48];
            std::snprintf(cell, sizeof cell, " h=1/%d: %.3e", rows[k].n, rows[k].e_u);
            os << cell;
        }
        os << " | rate " << (j - i > 1 ? detail::fixed(rows[j - 1].rate, 2) : std::string("-")) << '\n';
        i = j;
    }
}

/// Vertex samples (x, y, u1, u2, p) of a computed solution.
struct VertexSample {
    Point2 x;
    double u1 = 0.0;
    double u2 = 0.0;
    double p = 0.0;
};

inline std::vector<VertexSample> vertex_samples(const Mesh& mesh, const VDofMap& vmap, const QDofMap& qmap,
                                                const Eigen::VectorXd& u, const Eigen::VectorXd& p)
{
    std::vector<VertexSample> out(mesh.num_vertices());
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) out[v].x = mesh.vertex(v);
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const auto& tri = mesh.triangle(k);
        const auto& l2g = vmap.cell(k);
        for (int i = 0; i < 3; ++i) {
            auto& s = out[static_cast<std::size_t>(tri[i])];
            const int g0 = l2g[local_dof(i, 0)];
            const int g1 = l2g[local_dof(i, 1)];
            s.u1 = g0 == kEliminated ? 0.0 : u(g0);
            s.u2 = g1 == kEliminated ? 0.0 : u(g1);
        }
    }
    for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
        const int g = qmap.vertex_to_global[v];
        out[v].p = g == kEliminated ? 0.0 : p(g);
    }
    return out;
}

inline void write_vertex_csv(std::ostream& os, const std::vector<VertexSample>& samples)
{
    os << "x,y,u1,u2,p\n";
    char buf[160];
    for (const auto& s : samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.x.x, s.x.y, s.u1, s.u2, s.p);
        os << buf;
    }
}

struct SolveRequest {
    std::string example = "example2";
    double lambda = 1.0;
    double iota = 1e-6;
    int n = 16;
    double mu = 1.0;
    double tol = 1e-10;
    int threads = 1;
    SaddleMethod method = SaddleMethod::automatic;
};

struct SolveReport {
    std::vector<VertexSample> samples;
    ErrorNorms norms;
    SaddleSolution solution;
    int dofs_u = 0;
    int dofs_p = 0;
};

inline SolveReport run_solve(const SolveRequest& req)
{
    const AnalyticField field = field_by_name(req.example);
    const Discretization disc(req.n, req.iota, req.mu, req.threads);
    const VectorField f = example_force(field, ProblemParams{req.mu, 0.0, req.iota});
    const Eigen::VectorXd rhs = disc.load(f);
    const SolveOutcome r = solve_and_measure(disc, field, req.lambda, req.tol, f, rhs, req.method);
    SolveReport rep;
    rep.norms = r.norms;
    rep.solution = r.solution;
    rep.samples = vertex_samples(disc.mesh(), disc.vmap(), disc.qmap(), r.solution.u, r.solution.p);
    rep.dofs_u = disc.vmap().n_free;
    rep.dofs_p = disc.qmap().n_free;
    return rep;
}

} // namespace sge
