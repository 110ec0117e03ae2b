#pragma once

/**
 * @file assembly.hpp
 * @brief Global sparse assembly of
 *
 *   a_h(u, v) = 2 mu ((eps(u), eps(v)) + iota^2 (grad_h eps(u), grad_h eps(v)))
 *   b_h(v, q) = (div v, q) + iota^2 (grad_h div v, grad q)
 *   c(p, q)   = ((p, q) + iota^2 (grad p, grad q)) / lambda
 *
 * the load vector (f, v) and the Gram matrices of the discrete norms.
 * Element kernels may be computed on several threads; scattering is always
 * done in element order so results do not depend on the thread count.
 */

#include "sge/element.hpp"
#include "sge/mesh.hpp"
#include "sge/quadrature.hpp"
#include "sge/space.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace sge {

/// CSR storage (row offsets, column indices, values).
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;
using Triplets = std::vector<Eigen::Triplet<double, int>>;

struct ProblemParams {
    double mu = 1.0;
    double lambda = 1.0;
    double iota = 0.0;

    void validate() const
    {
        if (!(mu > 0.0)) throw std::invalid_argument("ProblemParams: mu must be positive");
        if (!(lambda >= 0.0)) throw std::invalid_argument("ProblemParams: lambda must be non-negative");
        if (!(iota >= 0.0 && iota <= 1.0)) throw std::invalid_argument("ProblemParams: iota must lie in [0, 1]");
    }
};

/// Quadrature degrees; see README for the polynomial degrees they cover.
struct QuadratureDegrees {
    static constexpr int stiffness = 10;  // (eps, eps) has degree 10, (grad eps, grad eps) degree 8
    static constexpr int coupling = 6;    // (div v, q) has degree 6
    static constexpr int pressure = 2;
    static constexpr int load = 12;
    static constexpr int error = 12;
};

/// (triangle, local edge) whose normal is reversed when building the basis.
/// Only used to inject orientation faults in verification runs.
struct NormalFlip {
    int triangle = 0;
    int local_edge = 0;
};

/// Parallel loop over [0, n) in contiguous chunks.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn)
{
    const auto workers = static_cast<std::size_t>(std::max(1, threads));
    if (workers == 1 || n < 2 * workers) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
}

/// Nodal bases of all triangles.
class BasisCache {
public:
    BasisCache() = default;

    explicit BasisCache(const Mesh& mesh, int threads = 1, const std::vector<NormalFlip>& flips = {})
        : bases_(mesh.num_triangles())
    {
        parallel_for(mesh.num_triangles(), threads, [&](std::size_t k) {
            AffineFrame f = frame(mesh, k);
            for (const auto& flip : flips) {
                if (static_cast<std::size_t>(flip.triangle) == k) {
                    auto& n = f.edge_normal[static_cast<std::size_t>(flip.local_edge)];
                    n = -1.0 * n;
                }
            }
            bases_[k] = LocalBasis(f);
        });
    }

    [[nodiscard]] const LocalBasis& operator[](std::size_t k) const { return bases_[k]; }
    [[nodiscard]] std::size_t size() const { return bases_.size(); }

private:
    std::vector<LocalBasis> bases_;
};

// --- element kernels --------------------------------------------------------

/// Strain tensor eps_ij = (d_i v_j + d_j v_i) / 2 of a shape function.
inline Eigen::Matrix2d strain(const Eigen::Matrix2d& grad)
{
    return 0.5 * (grad + grad.transpose());
}

/// d_k eps_ij for k = 0, 1.
inline std::array<Eigen::Matrix2d, 2> strain_gradient(const std::array<Eigen::Matrix2d, 2>& hess)
{
    std::array<Eigen::Matrix2d, 2> out;
    for (int k = 0; k < 2; ++k) {
        Eigen::Matrix2d g;
        // g(i, j) = d_k d_i v_j  -> hess[j](k, i)
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) g(i, j) = hess[j](k, i);
        }
        out[k] = 0.5 * (g + g.transpose());
    }
    return out;
}

inline double divergence(const Eigen::Matrix2d& grad) { return grad(0, 0) + grad(1, 1); }

inline Eigen::Vector2d divergence_gradient(const std::array<Eigen::Matrix2d, 2>& hess)
{
    return {hess[0](0, 0) + hess[1](0, 1), hess[0](1, 0) + hess[1](1, 1)};
}

struct StrainKernels {
    Matrix20d strain = Matrix20d::Zero();           // (eps(phi_i), eps(phi_j))_K
    Matrix20d strain_gradient = Matrix20d::Zero();  // (grad eps(phi_i), grad eps(phi_j))_K
};

inline StrainKernels strain_kernels(const LocalBasis& basis, const QuadratureRule& rule)
{
    StrainKernels out;
    const double area = basis.frame().area;
    std::array<Eigen::Matrix2d, kLocalDofs> eps;
    std::array<std::array<Eigen::Matrix2d, 2>, kLocalDofs> deps;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const ShapeValues sv = basis.eval_bary(rule.points[q], 2);
        const double w = rule.weights[q] * area;
        for (int i = 0; i < kLocalDofs; ++i) {
            eps[i] = strain(sv.grad[i]);
            deps[i] = strain_gradient(sv.hess[i]);
        }
        for (int i = 0; i < kLocalDofs; ++i) {
            for (int j = i; j < kLocalDofs; ++j) {
                out.strain(i, j) += w * (eps[i].array() * eps[j].array()).sum();
                out.strain_gradient(i, j) += w * ((deps[i][0].array() * deps[j][0].array()).sum()
                                                  + (deps[i][1].array() * deps[j][1].array()).sum());
            }
        }
    }
    for (int i = 0; i < kLocalDofs; ++i) {
        for (int j = 0; j < i; ++j) {
            out.strain(i, j) = out.strain(j, i);
            out.strain_gradient(i, j) = out.strain_gradient(j, i);
        }
    }
    return out;
}

inline Matrix20d combine_stiffness(const StrainKernels& k, double mu, double iota)
{
    return 2.0 * mu * (k.strain + (iota * iota) * k.strain_gradient);
}

struct CouplingKernels {
    Eigen::Matrix<double, 3, kLocalDofs> divergence = Eigen::Matrix<double, 3, kLocalDofs>::Zero();  // (div phi, psi)
    Eigen::Matrix<double, 3, kLocalDofs> gradient = Eigen::Matrix<double, 3, kLocalDofs>::Zero();    // (grad div phi, grad psi)
};

inline CouplingKernels coupling_kernels(const LocalBasis& basis, const QuadratureRule& rule)
{
    CouplingKernels out;
    const AffineFrame& f = basis.frame();
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const ShapeValues sv = basis.eval_bary(rule.points[q], 2);
        const PressureBasis pb = eval_pressure_basis(f, rule.points[q]);
        const double w = rule.weights[q] * f.area;
        for (int j = 0; j < kLocalDofs; ++j) {
            const double div = divergence(sv.grad[j]);
            const Eigen::Vector2d gdiv = divergence_gradient(sv.hess[j]);
            for (int t = 0; t < 3; ++t) {
                out.divergence(t, j) += w * div * pb.value[t];
                out.gradient(t, j) += w * gdiv.dot(pb.grad[t]);
            }
        }
    }
    return out;
}

struct PressureKernels {
    Eigen::Matrix3d mass = Eigen::Matrix3d::Zero();
    Eigen::Matrix3d stiffness = Eigen::Matrix3d::Zero();
};

inline PressureKernels pressure_kernels(const AffineFrame& f)
{
    PressureKernels out;
    for (int s = 0; s < 3; ++s) {
        for (int t = 0; t < 3; ++t) {
            out.mass(s, t) = f.area / 12.0 * (s == t ? 2.0 : 1.0);
            out.stiffness(s, t) = f.area * dot(f.grad_lambda[s], f.grad_lambda[t]);
        }
    }
    return out;
}

struct NormKernels {
    Matrix20d h1 = Matrix20d::Zero();  // (grad phi_i, grad phi_j)_K
    Matrix20d h2 = Matrix20d::Zero();  // (hess phi_i, hess phi_j)_K
};

inline NormKernels norm_kernels(const LocalBasis& basis, const QuadratureRule& rule)
{
    NormKernels out;
    const double area = basis.frame().area;
    for (std::size_t q = 0; q < rule.size(); ++q) {
        const ShapeValues sv = basis.eval_bary(rule.points[q], 2);
        const double w = rule.weights[q] * area;
        for (int i = 0; i < kLocalDofs; ++i) {
            for (int j = i; j < kLocalDofs; ++j) {
                out.h1(i, j) += w * (sv.grad[i].array() * sv.grad[j].array()).sum();
                out.h2(i, j) += w * ((sv.hess[i][0].array() * sv.hess[j][0].array()).sum()
                                     + (sv.hess[i][1].array() * sv.hess[j][1].array()).sum());
            }
        }
    }
    for (int i = 0; i < kLocalDofs; ++i) {
        for (int j = 0; j < i; ++j) {
            out.h1(i, j) = out.h1(j, i);
            out.h2(i, j) = out.h2(j, i);
        }
    }
    return out;
}

// --- scatter ---------------------------------------------------------------

namespace detail {

template <class RowMap, class ColMap, class Local>
void scatter(Triplets& trips, const RowMap& rows, const ColMap& cols, const Local& local)
{
    for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
        if (rows[i] == kEliminated) continue;
        for (int j = 0; j < static_cast<int>(cols.size()); ++j) {
            if (cols[j] == kEliminated) continue;
            trips.emplace_back(rows[i], cols[j], local(i, j));
        }
    }
}

inline SparseMatrix from_triplets(int rows, int cols, const Triplets& trips)
{
    SparseMatrix m(rows, cols);
    m.setFromTriplets(trips.begin(), trips.end());
    m.makeCompressed();
    return m;
}

} // namespace detail

/// Stiffness blocks split by power of iota: A = 2 mu (strain + iota^2 strain_gradient).
struct StiffnessParts {
    SparseMatrix strain;
    SparseMatrix strain_gradient;

    [[nodiscard]] SparseMatrix combine(double mu, double iota) const
    {
        SparseMatrix a = (2.0 * mu) * strain + (2.0 * mu * iota * iota) * strain_gradient;
        a.makeCompressed();
        return a;
    }
};

inline StiffnessParts assemble_stiffness_parts(const Mesh& mesh, const BasisCache& cache, const VDofMap& vmap,
                                               int threads = 1)
{
    const QuadratureRule rule = rule_for_degree(QuadratureDegrees::stiffness);
    std::vector<StrainKernels> kernels(mesh.num_triangles());
    parallel_for(mesh.num_triangles(), threads, [&](std::size_t k) { kernels[k] = strain_kernels(cache[k], rule); });
    Triplets te;
    Triplets th;
    te.reserve(mesh.num_triangles() * kLocalDofs * kLocalDofs);
    th.reserve(mesh.num_triangles() * kLocalDofs * kLocalDofs);
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        detail::scatter(te, vmap.cell(k), vmap.cell(k), kernels[k].strain);
        detail::scatter(th, vmap.cell(k), vmap.cell(k), kernels[k].strain_gradient);
    }
    return {detail::from_triplets(vmap.n_free, vmap.n_free, te),
            detail::from_triplets(vmap.n_free, vmap.n_free, th)};
}

inline SparseMatrix assemble_a(const Mesh& mesh, const BasisCache& cache, const VDofMap& vmap,
                               const ProblemParams& params, int threads = 1)
{
    params.validate();
    const QuadratureRule rule = rule_for_degree(QuadratureDegrees::stiffness);
    std::vector<Matrix20d> kernels(mesh.num_triangles());
    parallel_for(mesh.num_triangles(), threads, [&](std::size_t k) {
        kernels[k] = combine_stiffness(strain_kernels(cache[k], rule), params.mu, params.iota);
    });
    Triplets trips;
    trips.reserve(mesh.num_triangles() * kLocalDofs * kLocalDofs);
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) detail::scatter(trips, vmap.cell(k), vmap.cell(k), kernels[k]);
    return detail::from_triplets(vmap.n_free, vmap.n_free, trips);
}

inline SparseMatrix assemble_b(const Mesh& mesh, const BasisCache& cache, const VDofMap& vmap, const QDofMap& qmap,
                               double iota, int threads = 1)
{
    const QuadratureRule rule = rule_for_degree(QuadratureDegrees::coupling);
    std::vector<Eigen::Matrix<double, 3, kLocalDofs>> kernels(mesh.num_triangles());
    parallel_for(mesh.num_triangles(), threads, [&](std::size_t k) {
        const CouplingKernels ck = coupling_kernels(cache[k], rule);
        kernels[k] = ck.divergence + (iota * iota) * ck.gradient;
    });
    Triplets trips;
    trips.reserve(mesh.num_triangles() * 3 * kLocalDofs);
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) detail::scatter(trips, qmap.cell(k), vmap.cell(k), kernels[k]);
    return detail::from_triplets(qmap.n_free, vmap.n_free, trips);
}

/// Weighted P1 Gram matrix M_p + iota^2 K_p on free pressure DoFs.
inline SparseMatrix assemble_pressure_gram(const Mesh& mesh, const QDofMap& qmap, double iota)
{
    Triplets trips;
    trips.reserve(mesh.num_triangles() * 9);
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const PressureKernels pk = pressure_kernels(frame(mesh, k));
        const Eigen::Matrix3d local = pk.mass + (iota * iota) * pk.stiffness;
        detail::scatter(trips, qmap.cell(k), qmap.cell(k), local);
    }
    return detail::from_triplets(qmap.n_free, qmap.n_free, trips);
}

inline SparseMatrix assemble_c(const Mesh& mesh, const QDofMap& qmap, const ProblemParams& params)
{
    params.validate();
    if (!(params.lambda > 0.0)) throw std::invalid_argument("assemble_c: lambda must be positive");
    SparseMatrix c = (1.0 / params.lambda) * assemble_pressure_gram(mesh, qmap, params.iota);
    c.makeCompressed();
    return c;
}

/// Vector field f(x) -> (f1, f2).
using VectorField = std::function<Eigen::Vector2d(Point2)>;

inline Eigen::VectorXd assemble_load(const Mesh& mesh, const BasisCache& cache, const VDofMap& vmap,
                                     const VectorField& f, int degree = QuadratureDegrees::load)
{
    const QuadratureRule rule = rule_for_degree(degree);
    Eigen::VectorXd load = Eigen::VectorXd::Zero(vmap.n_free);
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const LocalBasis& basis = cache[k];
        const AffineFrame& fr = basis.frame();
        Vector20d local = Vector20d::Zero();
        for (std::size_t q = 0; q < rule.size(); ++q) {
            const Eigen::Vector2d fx = f(fr.point(rule.points[q]));
            const ShapeValues sv = basis.eval_bary(rule.points[q], 0);
            const double w = rule.weights[q] * fr.area;
            for (int j = 0; j < kLocalDofs; ++j) local(j) += w * fx.dot(sv.value[j]);
        }
        const auto& l2g = vmap.cell(k);
        for (int j = 0; j < kLocalDofs; ++j) {
            if (l2g[j] != kEliminated) load(l2g[j]) += local(j);
        }
    }
    return load;
}

struct NormGrams {
    SparseMatrix h1;  // |v|_1^2
    SparseMatrix h2;  // |v|_{2,h}^2
    SparseMatrix v;   // ||v||_{V,h}^2 = |v|_1^2 + iota^2 |v|_{2,h}^2
    SparseMatrix q;   // ||q||_Q^2 = ||q||_0^2 + iota^2 |q|_1^2
};

inline NormGrams assemble_norm_grams(const Mesh& mesh, const BasisCache& cache, const VDofMap& vmap,
                                     const QDofMap& qmap, double iota, int threads = 1)
{
    const QuadratureRule rule = rule_for_degree(QuadratureDegrees::stiffness);
    std::vector<NormKernels> kernels(mesh.num_triangles());
    parallel_for(mesh.num_triangles(), threads, [&](std::size_t k) { kernels[k] = norm_kernels(cache[k], rule); });
    Triplets t1;
    Triplets t2;
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        detail::scatter(t1, vmap.cell(k), vmap.cell(k), kernels[k].h1);
        detail::scatter(t2, vmap.cell(k), vmap.cell(k), kernels[k].h2);
    }
    NormGrams g;
    g.h1 = detail::from_triplets(vmap.n_free, vmap.n_free, t1);
    g.h2 = detail::from_triplets(vmap.n_free, vmap.n_free, t2);
    g.v = g.h1 + (iota * iota) * g.h2;
    g.v.makeCompressed();
    g.q = assemble_pressure_gram(mesh, qmap, iota);
    return g;
}

/// m_q = int_Omega psi_q dx, the zero-mean constraint on Q_h.
inline Eigen::VectorXd mean_constraint(const Mesh& mesh, const QDofMap& qmap)
{
    Eigen::VectorXd m = Eigen::VectorXd::Zero(qmap.n_free);
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const double third = std::abs(mesh.signed_area(k)) / 3.0;
        for (int g : qmap.cell(k)) {
            if (g != kEliminated) m(g) += third;
        }
    }
    return m;
}

/// MatrixMarket coordinate export (general, 1-based).
inline void write_matrix_market(std::ostream& os, const SparseMatrix& m)
{
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
    os.precision(17);
    for (int r = 0; r < m.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(m, r); it; ++it) {
            os << it.row() + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
        }
    }
}

inline void save_matrix_market(const std::string& path, const SparseMatrix& m)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_matrix_market: cannot open " + path);
    write_matrix_market(os, m);
}

} // namespace sge
