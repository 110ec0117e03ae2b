#pragma once

/**
 * @file manufactured.hpp
 * @brief Built-in exact fields, the body forces they induce, interpolation
 *        into V_h and discrete error norms.
 */

#include "sge/assembly.hpp"
#include "sge/element.hpp"
#include "sge/jet.hpp"
#include "sge/mesh.hpp"
#include "sge/space.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sge {

// Closed forms, generic over double and jets.

/// Divergence-free, u = d_n u = 0 on the boundary of the unit square.
template <class T>
std::array<T, 2> example1_displacement(const T& x, const T& y)
{
    using std::cos;
    using std::exp;
    using std::sin;
    constexpr double pi = std::numbers::pi;
    const double e = std::numbers::e;
    const T cx = cos(2.0 * pi * x);
    const T a = exp(cx) - e;
    const T sy = sin(pi * y);
    const T u1 = 3.0 * (a * a) * sin(2.0 * pi * y) * sy;
    const T u2 = 8.0 * (exp(2.0 * cx) - exp(1.0 + cx)) * sin(2.0 * pi * x) * (sy * sy * sy);
    return {u1, u2};
}

/// Divergence-free, vanishes on the boundary with nonzero normal derivative.
template <class T>
std::array<T, 2> example2_displacement(const T& x, const T& y)
{
    const T xs = x * (1.0 - x);
    const T ys = y * (1.0 - y);
    const T u1 = -1.0 * (xs * xs) * ys * (1.0 - 2.0 * y);
    const T u2 = xs * (1.0 - 2.0 * x) * (ys * ys);
    return {u1, u2};
}

/// Displacement field evaluated as degree-4 jets.
struct AnalyticField {
    std::string name;
    bool divergence_free = false;
    std::function<std::array<Jet4, 2>(Point2)> jets;
};

template <class F>
AnalyticField make_field(std::string name, bool divergence_free, F closed_form)
{
    AnalyticField field;
    field.name = std::move(name);
    field.divergence_free = divergence_free;
    field.jets = [closed_form](Point2 p) {
        return closed_form(Jet4::variable_x(p.x), Jet4::variable_y(p.y));
    };
    return field;
}

inline AnalyticField example1_field()
{
    return make_field("example1", true, [](const Jet4& x, const Jet4& y) { return example1_displacement(x, y); });
}

inline AnalyticField example2_field()
{
    return make_field("example2", true, [](const Jet4& x, const Jet4& y) { return example2_displacement(x, y); });
}

inline AnalyticField field_by_name(const std::string& name)
{
    if (name == "example1") return example1_field();
    if (name == "example2") return example2_field();
    throw std::invalid_argument("unknown field '" + name + "' (expected example1 or example2)");
}

inline std::array<Jet4, 2> jet_eval(const AnalyticField& field, Point2 x) { return field.jets(x); }

/// Partial derivatives d[a][b] = d^a_x d^b_y u_c for a + b <= 4.
struct Partials {
    std::array<std::array<std::array<double, 5>, 5>, 2> d{};

    [[nodiscard]] double operator()(int c, int a, int b) const
    {
        return d[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];
    }
};

inline Partials partials(const AnalyticField& field, Point2 x)
{
    const auto jets = field.jets(x);
    Partials p;
    for (int c = 0; c < 2; ++c) {
        for (int a = 0; a <= 4; ++a) {
            for (int b = 0; a + b <= 4; ++b) {
                p.d[static_cast<std::size_t>(c)][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
                    jets[static_cast<std::size_t>(c)].derivative(a, b);
            }
        }
    }
    return p;
}

inline FieldSample sample_field(const AnalyticField& field, Point2 x)
{
    const auto jets = field.jets(x);
    FieldSample s;
    for (int c = 0; c < 2; ++c) {
        const auto& j = jets[static_cast<std::size_t>(c)];
        s.value(c) = j.value();
        s.grad(c, 0) = j.derivative(1, 0);
        s.grad(c, 1) = j.derivative(0, 1);
    }
    return s;
}

inline double divergence(const Partials& p) { return p(0, 1, 0) + p(1, 0, 1); }

/// f = -div((I - iota^2 Lap) sigma(u)) with sigma(u) = 2 mu eps(u) + lambda div(u) I, i.e.
/// f = -(mu Lap u + (mu + lambda) grad div u) + iota^2 (mu Lap^2 u + (mu + lambda) grad Lap div u).
inline Eigen::Vector2d sge_force(const Partials& p, const ProblemParams& prm)
{
    const double mu = prm.mu;
    const double ml = prm.mu + prm.lambda;
    const double i2 = prm.iota * prm.iota;
    Eigen::Vector2d f;
    const std::array<double, 2> grad_div = {p(0, 2, 0) + p(1, 1, 1), p(0, 1, 1) + p(1, 0, 2)};
    const std::array<double, 2> grad_lap_div = {p(0, 4, 0) + p(0, 2, 2) + p(1, 3, 1) + p(1, 1, 3),
                                                p(0, 3, 1) + p(0, 1, 3) + p(1, 2, 2) + p(1, 0, 4)};
    for (int c = 0; c < 2; ++c) {
        const double lap = p(c, 2, 0) + p(c, 0, 2);
        const double bilap = p(c, 4, 0) + 2.0 * p(c, 2, 2) + p(c, 0, 4);
        f(c) = -(mu * lap + ml * grad_div[static_cast<std::size_t>(c)])
               + i2 * (mu * bilap + ml * grad_lap_div[static_cast<std::size_t>(c)]);
    }
    return f;
}

/// f = -mu Lap u - (lambda + mu) grad div u.
inline Eigen::Vector2d elasticity_force(const Partials& p, const ProblemParams& prm)
{
    const double ml = prm.mu + prm.lambda;
    Eigen::Vector2d f;
    f(0) = -prm.mu * (p(0, 2, 0) + p(0, 0, 2)) - ml * (p(0, 2, 0) + p(1, 1, 1));
    f(1) = -prm.mu * (p(1, 2, 0) + p(1, 0, 2)) - ml * (p(0, 1, 1) + p(1, 0, 2));
    return f;
}

inline VectorField body_force_sge(const AnalyticField& field, const ProblemParams& params)
{
    params.validate();
    return [field, params](Point2 x) { return sge_force(partials(field, x), params); };
}

inline VectorField body_force_elasticity(const AnalyticField& field, const ProblemParams& params)
{
    params.validate();
    return [field, params](Point2 x) { return elasticity_force(partials(field, x), params); };
}

/// Right-hand side used by the convergence study for a named example: the
/// SGE force of the exact solution for example1, the elasticity force of u0
/// for example2.
inline VectorField study_force(const AnalyticField& field, const ProblemParams& params)
{
    if (field.name == "example2") return body_force_elasticity(field, params);
    return body_force_sge(field, params);
}

/// Global DoF vector of the canonical interpolant of `field` (boundary DoFs dropped).
inline Eigen::VectorXd interpolate(const Mesh& mesh, const VDofMap& vmap, const AnalyticField& field)
{
    Eigen::VectorXd u = Eigen::VectorXd::Zero(vmap.n_free);
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const AffineFrame f = frame(mesh, k);
        const Vector20d local = apply_dofs(f, [&](Point2 x) { return sample_field(field, x); }, 11, 12);
        const auto& l2g = vmap.cell(k);
        for (int i = 0; i < kLocalDofs; ++i) {
            if (l2g[i] != kEliminated) u(l2g[i]) = local(i);
        }
    }
    return u;
}

struct ErrorNorms {
    double h1 = 0.0;      // |u - u_h|_1
    double h2 = 0.0;      // |u - u_h|_{2,h}
    double v = 0.0;       // ||u - u_h||_{V,h}
    double q = 0.0;       // ||p - p_h||_Q
    double f_l2 = 0.0;    // ||f||_0
    // Same with the mixed second derivative counted once per component,
    // sum (v_xx^2 + v_xy^2 + v_yy^2); this is the convention behind the
    // published convergence tables.
    double h2_table = 0.0;
    double v_table = 0.0;

    [[nodiscard]] double relative_u() const { return v / f_l2; }
    [[nodiscard]] double relative_u_table() const { return v_table / f_l2; }
    [[nodiscard]] double relative_p() const { return q / f_l2; }
};

/**
 * Element-wise quadrature of the displacement error in the broken norm
 * ||.||_{V,h}^2 = |.|_1^2 + iota^2 |.|_{2,h}^2 and of the pressure error
 * against p = lambda div u in ||.||_Q. `p_h` may be empty (pressure error 0
 * against a zero discrete pressure is then reported as ||p||_Q).
 */
inline ErrorNorms error_norms(const Mesh& mesh, const BasisCache& cache, const VDofMap& vmap, const QDofMap& qmap,
                              const Eigen::VectorXd& u_h, const Eigen::VectorXd& p_h, const AnalyticField& exact,
                              const ProblemParams& params, const VectorField& f,
                              int degree = QuadratureDegrees::error)
{
    const QuadratureRule rule = rule_for_degree(degree);
    const double i2 = params.iota * params.iota;
    double h1 = 0.0;
    double h2 = 0.0;
    double h2t = 0.0;
    double q0 = 0.0;
    double q1 = 0.0;
    double ff = 0.0;
    for (std::size_t k = 0; k < mesh.num_triangles(); ++k) {
        const LocalBasis& basis = cache[k];
        const AffineFrame& fr = basis.frame();
        const Vector20d local = gather(vmap, k, u_h);
        const Eigen::Vector3d plocal = p_h.size() > 0 ? gather(qmap, k, p_h) : Eigen::Vector3d::Zero();
        double eh1 = 0.0;
        double eh2 = 0.0;
        double eh2t = 0.0;
        double eq0 = 0.0;
        double eq1 = 0.0;
        double ef = 0.0;
        for (std::size_t qp = 0; qp < rule.size(); ++qp) {
            const Point2 x = fr.point(rule.points[qp]);
            const double w = rule.weights[qp] * fr.area;
            const ShapeValues sv = basis.eval_bary(rule.points[qp], 2);
            Eigen::Matrix2d grad_h = Eigen::Matrix2d::Zero();
            std::array<Eigen::Matrix2d, 2> hess_h{Eigen::Matrix2d::Zero(), Eigen::Matrix2d::Zero()};
            for (int j = 0; j < kLocalDofs; ++j) {
                if (local(j) == 0.0) continue;
                grad_h += local(j) * sv.grad[j];
                hess_h[0] += local(j) * sv.hess[j][0];
                hess_h[1] += local(j) * sv.hess[j][1];
            }
            const Partials p = partials(exact, x);
            Eigen::Matrix2d eg;
            for (int c = 0; c < 2; ++c) {
                eg(c, 0) = p(c, 1, 0) - grad_h(c, 0);
                eg(c, 1) = p(c, 0, 1) - grad_h(c, 1);
                Eigen::Matrix2d eh;
                eh(0, 0) = p(c, 2, 0);
                eh(0, 1) = p(c, 1, 1);
                eh(1, 0) = p(c, 1, 1);
                eh(1, 1) = p(c, 0, 2);
                eh -= hess_h[static_cast<std::size_t>(c)];
                eh2 += w * eh.squaredNorm();
                eh2t += w * (eh(0, 0) * eh(0, 0) + eh(0, 1) * eh(0, 1) + eh(1, 1) * eh(1, 1));
            }
            eh1 += w * eg.squaredNorm();

            const PressureBasis pb = eval_pressure_basis(fr, rule.points[qp]);
            double ph = 0.0;
            Eigen::Vector2d gph = Eigen::Vector2d::Zero();
            for (int t = 0; t < 3; ++t) {
                ph += plocal(t) * pb.value[t];
                gph += plocal(t) * pb.grad[t];
            }
            const double pe = params.lambda * divergence(p) - ph;
            const Eigen::Vector2d gpe{params.lambda * (p(0, 2, 0) + p(1, 1, 1)) - gph(0),
                                      params.lambda * (p(0, 1, 1) + p(1, 0, 2)) - gph(1)};
            eq0 += w * pe * pe;
            eq1 += w * gpe.squaredNorm();
            ef += w * f(x).squaredNorm();
        }
        h1 += eh1;
        h2 += eh2;
        h2t += eh2t;
        q0 += eq0;
        q1 += eq1;
        ff += ef;
    }
    ErrorNorms out;
    out.h1 = std::sqrt(h1);
    out.h2 = std::sqrt(h2);
    out.v = std::sqrt(h1 + i2 * h2);
    out.h2_table = std::sqrt(h2t);
    out.v_table = std::sqrt(h1 + i2 * h2t);
    out.q = std::sqrt(q0 + i2 * q1);
    out.f_l2 = std::sqrt(ff);
    return out;
}

} // namespace sge
