#pragma once

/**
 * @file element.hpp
 * @brief The 20-dimensional C0 / H2-nonconforming displacement element
 *
 *   V(K) = P2(K;R^2) + b_K P1(K;R^2) + b_K^2 P0(K;R^2),  b_K = l1 l2 l3,
 *
 * with the degrees of freedom
 *
 *   v(a)                              at the three vertices,
 *   v(m_e)                            at the three edge midpoints,
 *   (1/|e|) int_e d_n v ds            on the three edges (global normal n_e),
 *   (1/|K|) int_K v dx                on the cell,
 *
 * each taken per component. The nodal basis is built on the physical triangle
 * by inverting the DoF matrix of a modal basis made of barycentric monomials.
 * Also provides the P1 pressure basis.
 */

#include "sge/mesh.hpp"
#include "sge/quadrature.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sge {

inline constexpr int kLocalDofs = 20;
inline constexpr int kScalarModes = 10;

using Matrix20d = Eigen::Matrix<double, kLocalDofs, kLocalDofs>;
using Vector20d = Eigen::Matrix<double, kLocalDofs, 1>;

enum class DofKind { vertex_value, edge_midpoint_value, edge_mean_normal_derivative, element_mean };

/// Local DoF `i` lives on slot i / 2 with component i % 2. Slots 0-2 are
/// vertices, 3-5 edge midpoints, 6-8 edge normal-derivative means, 9 the cell.
struct DofDescriptor {
    DofKind kind = DofKind::vertex_value;
    int entity = 0;     // local vertex, local edge, or 0 for the cell
    int component = 0;  // 0 or 1
};

constexpr int local_dof(int slot, int component) { return 2 * slot + component; }

inline std::array<DofDescriptor, kLocalDofs> dof_descriptors()
{
    std::array<DofDescriptor, kLocalDofs> d{};
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < 3; ++i) {
            d[local_dof(i, c)] = {DofKind::vertex_value, i, c};
            d[local_dof(3 + i, c)] = {DofKind::edge_midpoint_value, i, c};
            d[local_dof(6 + i, c)] = {DofKind::edge_mean_normal_derivative, i, c};
        }
        d[local_dof(9, c)] = {DofKind::element_mean, 0, c};
    }
    return d;
}

/// Modal index of scalar mode s in component c.
constexpr int modal_index(int component, int s) { return component * kScalarModes + s; }

/// Scalar modes as barycentric monomials l1^a l2^b l3^c:
/// l1^2, l2^2, l3^2, l2 l3, l1 l3, l1 l2, b, b l1, b l2, b^2.
inline constexpr std::array<std::array<int, 3>, kScalarModes> kModeExponents = {{
    {2, 0, 0}, {0, 2, 0}, {0, 0, 2}, {0, 1, 1}, {1, 0, 1},
    {1, 1, 0}, {1, 1, 1}, {2, 1, 1}, {1, 2, 1}, {2, 2, 2},
}};

struct ModalValues {
    std::array<double, kScalarModes> value{};
    std::array<Eigen::Vector2d, kScalarModes> grad{};
    std::array<Eigen::Matrix2d, kScalarModes> hess{};
};

namespace detail {

inline double ipow(double x, int k)
{
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= x;
    return r;
}

} // namespace detail

/**
 * Value, gradient and Hessian of the ten scalar modes at barycentric point
 * `bary`. Uses d(l^alpha) = sum_s alpha_s l^(alpha - e_s) grad l_s and the
 * analogous second-order rule; grad l_s is constant on K.
 */
inline ModalValues eval_modes(const AffineFrame& f, const std::array<double, 3>& bary, int order = 2)
{
    ModalValues out;
    std::array<Eigen::Vector2d, 3> g;
    for (int s = 0; s < 3; ++s) g[s] = {f.grad_lambda[s].x, f.grad_lambda[s].y};

    for (int m = 0; m < kScalarModes; ++m) {
        const auto& a = kModeExponents[m];
        const auto mono = [&](int d0, int d1, int d2) {
            const int e0 = a[0] - d0;
            const int e1 = a[1] - d1;
            const int e2 = a[2] - d2;
            if (e0 < 0 || e1 < 0 || e2 < 0) return 0.0;
            return detail::ipow(bary[0], e0) * detail::ipow(bary[1], e1) * detail::ipow(bary[2], e2);
        };
        out.value[m] = mono(0, 0, 0);
        if (order < 1) continue;

        Eigen::Vector2d grad = Eigen::Vector2d::Zero();
        for (int s = 0; s < 3; ++s) {
            if (a[s] == 0) continue;
            std::array<int, 3> d{0, 0, 0};
            d[s] = 1;
            grad += a[s] * mono(d[0], d[1], d[2]) * g[s];
        }
        out.grad[m] = grad;
        if (order < 2) continue;

        Eigen::Matrix2d hess = Eigen::Matrix2d::Zero();
        for (int s = 0; s < 3; ++s) {
            for (int t = 0; t < 3; ++t) {
                std::array<int, 3> d{0, 0, 0};
                d[s] += 1;
                d[t] += 1;
                const int coef = (s == t) ? a[s] * (a[s] - 1) : a[s] * a[t];
                if (coef == 0) continue;
                hess += coef * mono(d[0], d[1], d[2]) * g[s] * g[t].transpose();
            }
        }
        out.hess[m] = hess;
    }
    return out;
}

/// Raised when the DoF matrix of an element is numerically singular.
class SingularDofMatrix : public std::runtime_error {
public:
    SingularDofMatrix(const std::string& what, double condition)
        : std::runtime_error(what), condition_(condition)
    {
    }
    [[nodiscard]] double condition() const { return condition_; }

private:
    double condition_;
};

inline constexpr double kDofConditionLimit = 1e10;

/// Scalar DoFs (10) of each scalar mode (10): rows slot, columns mode.
inline Eigen::Matrix<double, kScalarModes, kScalarModes> scalar_dof_matrix(const AffineFrame& f)
{
    Eigen::Matrix<double, kScalarModes, kScalarModes> m;
    for (int i = 0; i < 3; ++i) {
        std::array<double, 3> vb{0.0, 0.0, 0.0};
        vb[i] = 1.0;
        const ModalValues at_vertex = eval_modes(f, vb, 0);
        std::array<double, 3> mb{0.5, 0.5, 0.5};
        mb[i] = 0.0;
        const ModalValues at_mid = eval_modes(f, mb, 0);
        for (int s = 0; s < kScalarModes; ++s) {
            m(i, s) = at_vertex.value[s];
            m(3 + i, s) = at_mid.value[s];
        }
    }

    // Mean normal derivative: integrands are polynomials of degree <= 5 along the edge.
    const LineRule line = line_rule_for_degree(5);
    for (int i = 0; i < 3; ++i) {
        const int p = (i + 1) % 3;
        const int q = (i + 2) % 3;
        const Eigen::Vector2d n{f.edge_normal[i].x, f.edge_normal[i].y};
        for (int s = 0; s < kScalarModes; ++s) m(6 + i, s) = 0.0;
        for (std::size_t k = 0; k < line.size(); ++k) {
            std::array<double, 3> b{0.0, 0.0, 0.0};
            b[p] = 1.0 - line.points[k];
            b[q] = line.points[k];
            const ModalValues mv = eval_modes(f, b, 1);
            for (int s = 0; s < kScalarModes; ++s) m(6 + i, s) += line.weights[k] * mv.grad[s].dot(n);
        }
    }

    // Cell mean: modes have degree <= 6.
    const QuadratureRule rule = rule_for_degree(6);
    for (int s = 0; s < kScalarModes; ++s) m(9, s) = 0.0;
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const ModalValues mv = eval_modes(f, rule.points[k], 0);
        for (int s = 0; s < kScalarModes; ++s) m(9, s) += rule.weights[k] * mv.value[s];
    }
    return m;
}

/// M(i, j) = DoF_i(modal_j). Block diagonal in the displacement component.
inline Matrix20d dof_matrix_unchecked(const AffineFrame& f)
{
    const auto scalar = scalar_dof_matrix(f);
    Matrix20d m = Matrix20d::Zero();
    for (int slot = 0; slot < kScalarModes; ++slot) {
        for (int c = 0; c < 2; ++c) {
            for (int s = 0; s < kScalarModes; ++s) m(local_dof(slot, c), modal_index(c, s)) = scalar(slot, s);
        }
    }
    return m;
}

/// DoF matrix with the normal-derivative rows multiplied by the diameter, so
/// that every row is dimensionless.
inline Matrix20d scaled_dof_matrix(const Matrix20d& m, const AffineFrame& f)
{
    Matrix20d scaled = m;
    for (int i = 0; i < 3; ++i) {
        for (int c = 0; c < 2; ++c) scaled.row(local_dof(6 + i, c)) *= f.diameter;
    }
    return scaled;
}

/// 2-norm condition number of the scaled DoF matrix (dense SVD).
inline double dof_condition_number(const AffineFrame& f)
{
    const Matrix20d scaled = scaled_dof_matrix(dof_matrix_unchecked(f), f);
    Eigen::JacobiSVD<Matrix20d> svd(scaled);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    if (!(smin > 0.0)) return std::numeric_limits<double>::infinity();
    return sv(0) / smin;
}

inline Matrix20d dof_matrix(const AffineFrame& f)
{
    Matrix20d m = dof_matrix_unchecked(f);
    const Matrix20d scaled = scaled_dof_matrix(m, f);
    const Eigen::PartialPivLU<Matrix20d> lu(scaled);
    const double rcond = lu.rcond();
    if (!(rcond * kDofConditionLimit > 1.0)) {
        throw SingularDofMatrix("dof_matrix: DoF matrix is numerically singular",
                                rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity());
    }
    return m;
}

/// Values, gradients and Hessians of the 20 nodal shape functions at a point.
/// grad[j](c, k) = d_k phi_j,c ; hess[j][c](k, l) = d_k d_l phi_j,c.
struct ShapeValues {
    std::array<Eigen::Vector2d, kLocalDofs> value{};
    std::array<Eigen::Matrix2d, kLocalDofs> grad{};
    std::array<std::array<Eigen::Matrix2d, 2>, kLocalDofs> hess{};
};

/// Nodal basis of V(K): column j of `coeff` expands phi_j in the modal basis.
class LocalBasis {
public:
    LocalBasis() = default;

    explicit LocalBasis(const AffineFrame& f) : frame_(f)
    {
        const Matrix20d m = dof_matrix(f);
        coeff_ = m.partialPivLu().inverse();
    }

    [[nodiscard]] const AffineFrame& frame() const { return frame_; }
    [[nodiscard]] const Matrix20d& coeff() const { return coeff_; }

    [[nodiscard]] ShapeValues eval_bary(const std::array<double, 3>& bary, int order = 2) const
    {
        const ModalValues mv = eval_modes(frame_, bary, order);
        ShapeValues out;
        for (int j = 0; j < kLocalDofs; ++j) {
            for (int c = 0; c < 2; ++c) {
                double v = 0.0;
                Eigen::Vector2d g = Eigen::Vector2d::Zero();
                Eigen::Matrix2d h = Eigen::Matrix2d::Zero();
                for (int s = 0; s < kScalarModes; ++s) {
                    const double a = coeff_(modal_index(c, s), j);
                    if (a == 0.0) continue;
                    v += a * mv.value[s];
                    if (order >= 1) g += a * mv.grad[s];
                    if (order >= 2) h += a * mv.hess[s];
                }
                out.value[j](c) = v;
                out.grad[j].row(c) = g.transpose();
                out.hess[j][c] = h;
            }
        }
        return out;
    }

    [[nodiscard]] ShapeValues eval(Point2 x, int order = 2) const
    {
        return eval_bary(frame_.barycentric(x), order);
    }

    /// Shape values at every point of a rule.
    [[nodiscard]] std::vector<ShapeValues> tabulate(const QuadratureRule& rule, int order = 2) const
    {
        std::vector<ShapeValues> table;
        table.reserve(rule.size());
        for (const auto& p : rule.points) table.push_back(eval_bary(p, order));
        return table;
    }

private:
    AffineFrame frame_{};
    Matrix20d coeff_ = Matrix20d::Zero();
};

inline LocalBasis nodal_basis(const AffineFrame& f) { return LocalBasis(f); }

inline ShapeValues eval_basis(const LocalBasis& basis, Point2 x, int order)
{
    return basis.eval(x, order);
}

/// Value and gradient of a vector field at a point: grad(c, k) = d_k v_c.
struct FieldSample {
    Eigen::Vector2d value = Eigen::Vector2d::Zero();
    Eigen::Matrix2d grad = Eigen::Matrix2d::Zero();
};

/**
 * Applies the 20 DoF functionals to a smooth field. `sample(x)` returns the
 * value and gradient at x; integrals use the same rules as the DoF matrix
 * unless larger degrees are requested for non-polynomial data.
 */
template <class Sampler>
Vector20d apply_dofs(const AffineFrame& f, Sampler&& sample, int edge_degree = 5, int cell_degree = 6)
{
    Vector20d dofs = Vector20d::Zero();
    for (int i = 0; i < 3; ++i) {
        const FieldSample at_vertex = sample(f.vertices[i]);
        const FieldSample at_mid = sample(f.edge_midpoint[i]);
        for (int c = 0; c < 2; ++c) {
            dofs(local_dof(i, c)) = at_vertex.value(c);
            dofs(local_dof(3 + i, c)) = at_mid.value(c);
        }
    }
    const LineRule line = line_rule_for_degree(edge_degree);
    for (int i = 0; i < 3; ++i) {
        const Point2 a = f.vertices[(i + 1) % 3];
        const Point2 b = f.vertices[(i + 2) % 3];
        const Eigen::Vector2d n{f.edge_normal[i].x, f.edge_normal[i].y};
        for (std::size_t k = 0; k < line.size(); ++k) {
            const double t = line.points[k];
            const FieldSample s = sample((1.0 - t) * a + t * b);
            const Eigen::Vector2d dn = s.grad * n;
            for (int c = 0; c < 2; ++c) dofs(local_dof(6 + i, c)) += line.weights[k] * dn(c);
        }
    }
    const QuadratureRule rule = rule_for_degree(cell_degree);
    for (std::size_t k = 0; k < rule.size(); ++k) {
        const FieldSample s = sample(f.point(rule.points[k]));
        for (int c = 0; c < 2; ++c) dofs(local_dof(9, c)) += rule.weights[k] * s.value(c);
    }
    return dofs;
}

/// P1 pressure basis on K: psi_t = lambda_t.
struct PressureBasis {
    std::array<double, 3> value{};
    std::array<Eigen::Vector2d, 3> grad{};
};

inline PressureBasis eval_pressure_basis(const AffineFrame& f, const std::array<double, 3>& bary)
{
    PressureBasis out;
    for (int t = 0; t < 3; ++t) {
        out.value[t] = bary[t];
        out.grad[t] = {f.grad_lambda[t].x, f.grad_lambda[t].y};
    }
    return out;
}

} // namespace sge
