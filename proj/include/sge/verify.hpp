#pragma once

/**
 * @file verify.hpp
 * @brief Executable structural checks: unisolvence of the element DoFs, weak
 *        continuity of V_h across interior edges and the discrete inf-sup
 *        constant of (V_h, Q_h) in the weighted norms.
 */

#include "sge/assembly.hpp"
#include "sge/element.hpp"
#include "sge/linalg.hpp"
#include "sge/mesh.hpp"
#include "sge/space.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace sge {

struct CheckResult {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::string note;
};

struct VerificationReport {
    std::vector<CheckResult> checks;

    void add(CheckResult c) { checks.push_back(std::move(c)); }
    void append(const VerificationReport& other)
    {
        checks.insert(checks.end(), other.checks.begin(), other.checks.end());
    }

    [[nodiscard]] bool all_pass() const
    {
        return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
    }

    void write_text(std::ostream& os) const
    {
        for (const auto& c : checks) {
            os << (c.pass ? "[PASS] " : "[FAIL] ") << std::left << std::setw(40) << c.name << " value="
               << std::scientific << std::setprecision(6) << c.value << " threshold=" << c.threshold;
            if (!c.note.empty()) os << "  (" << c.note << ")";
            os << '\n';
        }
        os << std::defaultfloat;
    }

    /// CSV with header `check,value,threshold,pass`.
    void write_csv(std::ostream& os) const
    {
        os << "check,value,threshold,pass\n";
        for (const auto& c : checks) {
            os << c.name << ',' << std::scientific << std::setprecision(6) << c.value << ',' << c.threshold << ','
               << (c.pass ? "true" : "false") << '\n';
        }
        os << std::defaultfloat;
    }
};

// --- unisolvence -----------------------------------------------------------

using Triangle = std::array<Point2, 3>;

/// Longest edge over shortest altitude; 2/sqrt(3) for the equilateral triangle.
inline double aspect_ratio(const Triangle& t)
{
    double longest = 0.0;
    for (int i = 0; i < 3; ++i) longest = std::max(longest, norm(t[(i + 1) % 3] - t[i]));
    const double area = 0.5 * std::abs(cross(t[1] - t[0], t[2] - t[0]));
    if (area == 0.0) return std::numeric_limits<double>::infinity();
    const double shortest_altitude = 2.0 * area / longest;
    return longest / shortest_altitude;
}

/// Random counterclockwise triangles with aspect_ratio <= max_aspect, scaled to diameter ~1.
inline std::vector<Triangle> random_shape_regular_triangles(std::size_t count, std::uint64_t seed,
                                                            double max_aspect = 5.0)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> scale(0.01, 10.0);
    std::vector<Triangle> out;
    out.reserve(count);
    while (out.size() < count) {
        Triangle t{Point2{coord(rng), coord(rng)}, Point2{coord(rng), coord(rng)}, Point2{coord(rng), coord(rng)}};
        if (cross(t[1] - t[0], t[2] - t[0]) < 0.0) std::swap(t[1], t[2]);
        if (!(aspect_ratio(t) <= max_aspect)) continue;
        const double s = scale(rng);
        for (auto& p : t) p = s * p;
        out.push_back(t);
    }
    return out;
}

/// Reference triangle (0,0), (1,0), (0,1).
inline Triangle reference_triangle() { return {Point2{0.0, 0.0}, Point2{1.0, 0.0}, Point2{0.0, 1.0}}; }

/**
 * Scaled DoF matrix condition number per triangle; a triangle fails when it
 * is degenerate or its condition number exceeds `bound`.
 */
inline VerificationReport check_unisolvence(const std::vector<Triangle>& triangles, double bound,
                                            const std::string& label = "unisolvence")
{
    VerificationReport report;
    double worst = 0.0;
    std::size_t singular = 0;
    for (const auto& t : triangles) {
        double cond = std::numeric_limits<double>::infinity();
        try {
            cond = dof_condition_number(make_frame(t[0], t[1], t[2]));
        } catch (const std::domain_error&) {
            // degenerate triangle: leave cond infinite
        }
        if (!(cond <= std::min(bound, kDofConditionLimit))) ++singular;
        worst = std::max(worst, cond);
    }
    std::ostringstream note;
    note << triangles.size() << " triangles, " << singular << " singular";
    report.add({label + ".max_condition", worst, bound, singular == 0, note.str()});
    return report;
}

// --- weak continuity -------------------------------------------------------

struct WeakContinuityResult {
    double max_jump_integral = 0.0;  // max |int_e [grad phi] ds| / (|e| * edge gradient scale)
    double max_trace_jump = 0.0;     // max pointwise |[phi]| at edge Gauss points / edge value scale
    std::size_t edges = 0;
    std::size_t pairs = 0;
};

inline WeakContinuityResult measure_weak_continuity(const Mesh& mesh, const BasisCache& cache, const VDofMap& vmap)
{
    WeakContinuityResult out;
    const LineRule line = line_rule_for_degree(5);
    for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
        const auto& tris = mesh.triangles_of_edge(e);
        if (tris.size() != 2) continue;
        ++out.edges;
        const auto k1 = static_cast<std::size_t>(tris[0]);
        const auto k2 = static_cast<std::size_t>(tris[1]);
        const Point2 a = mesh.vertex(static_cast<std::size_t>(mesh.edge(e)[0]));
        const Point2 b = mesh.vertex(static_cast<std::size_t>(mesh.edge(e)[1]));

        std::vector<ShapeValues> s1;
        std::vector<ShapeValues> s2;
        std::vector<Point2> pts;
        for (double t : line.points) {
            const Point2 x = (1.0 - t) * a + t * b;
            pts.push_back(x);
            s1.push_back(cache[k1].eval(x, 1));
            s2.push_back(cache[k2].eval(x, 1));
        }

        // Union of global DoFs supported on either side.
        std::vector<int> globals;
        for (int g : vmap.cell(k1)) if (g != kEliminated) globals.push_back(g);
        for (int g : vmap.cell(k2)) if (g != kEliminated) globals.push_back(g);
        std::sort(globals.begin(), globals.end());
        globals.erase(std::unique(globals.begin(), globals.end()), globals.end());

        const auto local_of = [&](std::size_t k, int g) {
            const auto& l2g = vmap.cell(k);
            for (int i = 0; i < kLocalDofs; ++i) {
                if (l2g[i] == g) return i;
            }
            return -1;
        };

        // Jumps are measured against the largest value and gradient of any
        // basis function on this edge; a per-function scale would turn
        // round-off on functions vanishing along the edge into O(1) ratios.
        double grad_scale = 0.0;
        double value_scale = 0.0;
        double worst_jump = 0.0;
        double worst_trace = 0.0;
        for (int g : globals) {
            ++out.pairs;
            const int i1 = local_of(k1, g);
            const int i2 = local_of(k2, g);
            Eigen::Matrix2d jump = Eigen::Matrix2d::Zero();
            for (std::size_t q = 0; q < line.size(); ++q) {
                const Eigen::Matrix2d g1 = i1 >= 0 ? s1[q].grad[i1] : Eigen::Matrix2d::Zero();
                const Eigen::Matrix2d g2 = i2 >= 0 ? s2[q].grad[i2] : Eigen::Matrix2d::Zero();
                const Eigen::Vector2d v1 = i1 >= 0 ? s1[q].value[i1] : Eigen::Vector2d::Zero();
                const Eigen::Vector2d v2 = i2 >= 0 ? s2[q].value[i2] : Eigen::Vector2d::Zero();
                jump += line.weights[q] * (g1 - g2);
                grad_scale = std::max({grad_scale, g1.norm(), g2.norm()});
                value_scale = std::max({value_scale, v1.norm(), v2.norm()});
                worst_trace = std::max(worst_trace, (v1 - v2).norm());
            }
            // jump already holds the edge mean (weights sum to one).
            worst_jump = std::max(worst_jump, jump.norm());
        }
        if (grad_scale > 0.0) out.max_jump_integral = std::max(out.max_jump_integral, worst_jump / grad_scale);
        if (value_scale > 0.0) out.max_trace_jump = std::max(out.max_trace_jump, worst_trace / value_scale);
    }
    return out;
}

inline VerificationReport check_weak_continuity(const Mesh& mesh, const std::vector<NormalFlip>& flips = {},
                                                double threshold = 1e-10, const std::string& label = "weak_continuity")
{
    if (mesh.num_interior_edges() == 0) {
        throw std::invalid_argument("check_weak_continuity: mesh has no interior edge");
    }
    const BasisCache cache(mesh, 1, flips);
    const VDofMap vmap = build_vdofmap(mesh);
    const WeakContinuityResult r = measure_weak_continuity(mesh, cache, vmap);
    VerificationReport report;
    std::ostringstream note;
    note << r.edges << " interior edges, " << r.pairs << " basis/edge pairs";
    report.add({label + ".gradient_jump_mean", r.max_jump_integral, threshold, r.max_jump_integral < threshold,
                note.str()});
    report.add({label + ".trace_jump", r.max_trace_jump, threshold, r.max_trace_jump < threshold, note.str()});
    return report;
}

// --- inf-sup ---------------------------------------------------------------

/// Orthonormal basis of the complement of span{m}.
inline Eigen::MatrixXd deflation_basis(const Eigen::VectorXd& m)
{
    const Eigen::Index n = m.size();
    const Eigen::MatrixXd mm = m;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(mm);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    return q.rightCols(n - 1);
}

/**
 * beta_h^2 = min over mean-zero q of (B G_V^{-1} B^T q, q) / (G_Q q, q), i.e.
 * the squared discrete inf-sup constant with ||.||_Q taken in its quadratic
 * form (||q||_0^2 + iota^2 |q|_1^2)^{1/2}.
 */
inline double estimate_infsup(const Mesh& mesh, double iota)
{
    const VDofMap vmap = build_vdofmap(mesh);
    const QDofMap qmap = build_qdofmap(mesh);
    if (qmap.n_free < 2) {
        throw std::invalid_argument("estimate_infsup: mean-zero pressure space is trivial on this mesh");
    }
    const BasisCache cache(mesh);
    const NormGrams grams = assemble_norm_grams(mesh, cache, vmap, qmap, iota);
    const Eigen::MatrixXd gv = Eigen::MatrixXd(grams.v);
    const Eigen::MatrixXd gq = Eigen::MatrixXd(grams.q);
    const Eigen::MatrixXd b = Eigen::MatrixXd(assemble_b(mesh, cache, vmap, qmap, iota));
    check_dense_size(gv, "estimate_infsup");

    const Eigen::LLT<Eigen::MatrixXd> llt(gv);
    if (llt.info() != Eigen::Success) throw std::domain_error("estimate_infsup: G_V is not positive definite");
    const Eigen::MatrixXd gv_inv_bt = llt.solve(b.transpose());
    const Eigen::MatrixXd s = b * gv_inv_bt;

    const Eigen::MatrixXd z = deflation_basis(mean_constraint(mesh, qmap));
    const Eigen::MatrixXd sz = z.transpose() * s * z;
    const Eigen::MatrixXd gz = z.transpose() * gq * z;
    const double theta = min_generalized_eig(0.5 * (sz + sz.transpose()), 0.5 * (gz + gz.transpose()));
    return std::sqrt(std::max(theta, 0.0));
}

/// Smallest eigenvalue of (A, 2 mu G_V): the discrete coercivity constant.
inline double estimate_coercivity(const Mesh& mesh, const ProblemParams& params)
{
    const VDofMap vmap = build_vdofmap(mesh);
    const QDofMap qmap = build_qdofmap(mesh);
    const BasisCache cache(mesh);
    const NormGrams grams = assemble_norm_grams(mesh, cache, vmap, qmap, params.iota);
    const Eigen::MatrixXd a = Eigen::MatrixXd(assemble_a(mesh, cache, vmap, params));
    const Eigen::MatrixXd g = 2.0 * params.mu * Eigen::MatrixXd(grams.v);
    return min_generalized_eig(a, g);
}

struct InfSupSweep {
    std::vector<int> n;
    std::vector<double> iota;
    std::vector<std::vector<double>> beta;  // beta[in][ii]
};

inline InfSupSweep infsup_sweep(const std::vector<int>& ns, const std::vector<double>& iotas)
{
    InfSupSweep sweep{ns, iotas, {}};
    for (int n : ns) {
        const Mesh mesh = build_uniform_unit_square(n);
        std::vector<double> row;
        for (double iota : iotas) row.push_back(estimate_infsup(mesh, iota));
        sweep.beta.push_back(std::move(row));
    }
    return sweep;
}

/// Regression bounds for the verification suite.
struct VerifyThresholds {
    double unisolvence_condition = 1e6;  // observed worst ~2e4 at aspect ratio <= 5
    double weak_continuity = 1e-10;
    double infsup_iota_spread = 4.0;
    double infsup_mesh_ratio_low = 0.5;
    double infsup_mesh_ratio_high = 2.0;
};

inline VerificationReport infsup_report(const InfSupSweep& sweep, const VerifyThresholds& th = {})
{
    VerificationReport report;
    for (std::size_t in = 0; in < sweep.n.size(); ++in) {
        for (std::size_t ii = 0; ii < sweep.iota.size(); ++ii) {
            std::ostringstream name;
            name << "infsup.beta[n=" << sweep.n[in] << ",iota=" << std::scientific << std::setprecision(0)
                 << sweep.iota[ii] << "]";
            const double beta = sweep.beta[in][ii];
            report.add({name.str(), beta, 0.0, beta > 0.0, "squared-norm form of ||.||_Q"});
        }
        const auto& row = sweep.beta[in];
        const double hi = *std::max_element(row.begin(), row.end());
        const double lo = *std::min_element(row.begin(), row.end());
        const double spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
        std::ostringstream name;
        name << "infsup.iota_spread[n=" << sweep.n[in] << "]";
        report.add({name.str(), spread, th.infsup_iota_spread, spread <= th.infsup_iota_spread, "max/min over iota"});
    }
    for (std::size_t in = 1; in < sweep.n.size(); ++in) {
        for (std::size_t ii = 0; ii < sweep.iota.size(); ++ii) {
            const double ratio = sweep.beta[in][ii] / sweep.beta[in - 1][ii];
            std::ostringstream name;
            name << "infsup.mesh_ratio[n=" << sweep.n[in] << "/" << sweep.n[in - 1] << ",iota=" << std::scientific
                 << std::setprecision(0) << sweep.iota[ii] << "]";
            const bool ok = ratio >= th.infsup_mesh_ratio_low && ratio <= th.infsup_mesh_ratio_high;
            report.add({name.str(), ratio, th.infsup_mesh_ratio_high, ok, "beta(n)/beta(n_prev) in [0.5, 2]"});
        }
    }
    return report;
}

} // namespace sge
