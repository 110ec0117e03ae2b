#pragma once

/**
 * @file linalg.hpp
 * @brief Saddle-point solver for [A B^T; B -C] with a bordered zero-mean
 *        constraint on the pressure, plus small dense helpers used by the
 *        element construction and the verification checks.
 */

#include "sge/assembly.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sge {

/// Raised when a solve fails; carries the best relative residual reached.
class SolverBreakdown : public std::runtime_error {
public:
    SolverBreakdown(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual)
    {
    }
    [[nodiscard]] double residual() const { return residual_; }

private:
    double residual_;
};

class SingularMatrix : public std::runtime_error {
public:
    SingularMatrix(const std::string& what, long rank) : std::runtime_error(what), rank_(rank) {}
    [[nodiscard]] long rank() const { return rank_; }

private:
    long rank_;
};

/**
 * a_h(u, v) + b_h(v, p)          = (f, v)
 * b_h(u, q) - c(p, q) + xi m(q)  = 0
 * m(p)                           = 0
 */
struct SaddleSystem {
    SparseMatrix A;
    SparseMatrix B;
    SparseMatrix C;
    Eigen::VectorXd m;
    Eigen::VectorXd rhs_u;
    /// Optional SPD pressure matrix spectrally close to the Schur complement
    /// (the ||.||_Q Gram); C is used when empty.
    SparseMatrix pressure_gram;

    void check() const
    {
        const auto nu = A.rows();
        const auto np = C.rows();
        if (A.cols() != nu || C.cols() != np || B.rows() != np || B.cols() != nu || m.size() != np
            || rhs_u.size() != nu) {
            throw std::invalid_argument("SaddleSystem: inconsistent block dimensions");
        }
        if (pressure_gram.size() != 0 && (pressure_gram.rows() != np || pressure_gram.cols() != np)) {
            throw std::invalid_argument("SaddleSystem: pressure_gram has the wrong size");
        }
    }
};

enum class SaddleMethod { automatic, block_ldlt, schur_cg };

struct SaddleSolution {
    Eigen::VectorXd u;
    Eigen::VectorXd p;
    double multiplier = 0.0;
    double residual = 0.0;  // relative residual of the bordered system
    int refinements = 0;
    bool used_fallback = false;
    SaddleMethod method = SaddleMethod::block_ldlt;
    int cg_iterations = 0;  // summed over refinement steps (schur_cg only)
};

using ColSparse = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

/// K = [A B^T; B -C] in column-major storage.
inline ColSparse block_matrix(const SaddleSystem& sys)
{
    const int nu = static_cast<int>(sys.A.rows());
    const int np = static_cast<int>(sys.C.rows());
    Triplets trips;
    trips.reserve(static_cast<std::size_t>(sys.A.nonZeros() + 2 * sys.B.nonZeros() + sys.C.nonZeros()));
    for (int r = 0; r < sys.A.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(sys.A, r); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
    }
    for (int r = 0; r < sys.B.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(sys.B, r); it; ++it) {
            trips.emplace_back(nu + it.row(), it.col(), it.value());
            trips.emplace_back(it.col(), nu + it.row(), it.value());
        }
    }
    for (int r = 0; r < sys.C.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(sys.C, r); it; ++it) trips.emplace_back(nu + it.row(), nu + it.col(), -it.value());
    }
    ColSparse k(nu + np, nu + np);
    k.setFromTriplets(trips.begin(), trips.end());
    k.makeCompressed();
    return k;
}

/// Above this many unknowns the automatic choice switches to schur_cg; the
/// block factorization fills in too much beyond n = 64 on the unit square.
inline constexpr Eigen::Index kBlockLdltLimit = 120000;

/**
 * Direct or Schur-complement solver for the bordered saddle system.
 *
 * block_ldlt: K = [A B^T; B -C] is symmetric quasi-definite, so LDL^T with a
 * fill-reducing ordering exists for any symmetric permutation; the zero-mean
 * border is eliminated with one extra solve. Sparse LU is the fallback.
 *
 * schur_cg: Cholesky of A and preconditioned CG on S = C + B A^{-1} B^T
 * restricted to m^T p = 0, preconditioned by the pressure Gram matrix.
 *
 * Both are wrapped in iterative refinement with x and the residual kept in
 * extended precision: the double residual floor eps |K||x| / |b| can sit
 * above 1e-10 when iota or lambda is large.
 *
 * The solver keeps a pointer to `sys`, which must outlive it.
 */
class SaddleSolver {
public:
    explicit SaddleSolver(const SaddleSystem& sys, SaddleMethod method = SaddleMethod::automatic)
        : sys_(&sys), nu_(sys.A.rows()), np_(sys.C.rows())
    {
        sys.check();
        if (method == SaddleMethod::automatic) {
            method = nu_ + np_ > kBlockLdltLimit ? SaddleMethod::schur_cg : SaddleMethod::block_ldlt;
        }
        method_ = method;
        if (method_ == SaddleMethod::block_ldlt) {
            setup_block(sys);
        } else {
            setup_schur(sys);
        }
    }

    [[nodiscard]] bool used_fallback() const { return fallback_; }
    [[nodiscard]] SaddleMethod method() const { return method_; }

    SaddleSolution solve(const Eigen::VectorXd& rhs_u, double tol) const
    {
        if (!(tol > 1e-14 && tol < 1e-6)) {
            throw std::invalid_argument("solve_saddle: tol must lie in (1e-14, 1e-6)");
        }
        if (rhs_u.size() != nu_) throw std::invalid_argument("solve_saddle: rhs has the wrong size");
        SaddleSolution out;
        out.used_fallback = fallback_;
        out.method = method_;
        const double rhs_norm = rhs_u.norm();
        if (rhs_norm == 0.0) {
            out.u = Eigen::VectorXd::Zero(nu_);
            out.p = Eigen::VectorXd::Zero(np_);
            return out;
        }

        using Ext = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
        Ext xu = Ext::Zero(nu_);
        Ext xp = Ext::Zero(np_);
        long double xi = 0.0L;
        Eigen::VectorXd ru = rhs_u;
        Eigen::VectorXd rp = Eigen::VectorXd::Zero(np_);
        double s = 0.0;
        double residual = 1.0;
        constexpr int max_refinements = 6;
        for (int step = 0; step <= max_refinements; ++step) {
            const Correction d = method_ == SaddleMethod::block_ldlt ? block_solve(ru, rp, s)
                                                                     : schur_solve(ru, rp, s, out.cg_iterations);
            xu += d.u.cast<long double>();
            xp += d.p.cast<long double>();
            xi += d.xi;
            // r_u = f - A u - B^T p ; r_p = -(B u - C p + xi m) ; s = -m^T p
            Ext eu = rhs_u.cast<long double>();
            Ext ep = Ext::Zero(np_);
            for (Eigen::Index r = 0; r < sys_->A.outerSize(); ++r) {
                long double acc = 0.0L;
                for (SparseMatrix::InnerIterator it(sys_->A, r); it; ++it) acc += static_cast<long double>(it.value()) * xu(it.col());
                eu(r) -= acc;
            }
            for (Eigen::Index r = 0; r < sys_->B.outerSize(); ++r) {
                long double acc = 0.0L;
                for (SparseMatrix::InnerIterator it(sys_->B, r); it; ++it) {
                    acc += static_cast<long double>(it.value()) * xu(it.col());
                    eu(it.col()) -= static_cast<long double>(it.value()) * xp(r);
                }
                ep(r) -= acc;
            }
            for (Eigen::Index r = 0; r < sys_->C.outerSize(); ++r) {
                long double acc = 0.0L;
                for (SparseMatrix::InnerIterator it(sys_->C, r); it; ++it) acc += static_cast<long double>(it.value()) * xp(it.col());
                ep(r) += acc;
            }
            ep -= xi * sys_->m.cast<long double>();
            long double sx = 0.0L;
            for (Eigen::Index i = 0; i < np_; ++i) sx -= static_cast<long double>(sys_->m(i)) * xp(i);
            ru = eu.cast<double>();
            rp = ep.cast<double>();
            s = static_cast<double>(sx);
            residual = std::sqrt(ru.squaredNorm() + rp.squaredNorm() + s * s) / rhs_norm;
            out.refinements = step;
            if (residual <= tol) break;
        }
        if (!(residual <= tol)) {
            std::ostringstream os;
            os << "solve_saddle: relative residual " << residual << " above tolerance " << tol;
            throw SolverBreakdown(os.str(), residual);
        }
        out.u = xu.cast<double>();
        out.p = xp.cast<double>();
        out.multiplier = static_cast<double>(xi);
        out.residual = residual;
        return out;
    }

private:
    struct Correction {
        Eigen::VectorXd u;
        Eigen::VectorXd p;
        double xi = 0.0;
    };

    void setup_block(const SaddleSystem& sys)
    {
        k_ = block_matrix(sys);
        border_ = Eigen::VectorXd::Zero(nu_ + np_);
        border_.tail(np_) = sys.m;
        ldlt_.compute(k_);
        if (ldlt_.info() != Eigen::Success) activate_fallback();
        if (!fallback_) {
            border_solve_ = ldlt_.solve(border_);
            if (!border_solve_.allFinite()) activate_fallback();
        }
        if (fallback_) border_solve_ = lu_.solve(border_);
        border_gram_ = border_.dot(border_solve_);
        if (!(std::abs(border_gram_) > 0.0) || !std::isfinite(border_gram_)) {
            throw SolverBreakdown("SaddleSolver: degenerate mean constraint", std::numeric_limits<double>::infinity());
        }
    }

    void activate_fallback()
    {
        fallback_ = true;
        lu_.analyzePattern(k_);
        lu_.factorize(k_);
        if (lu_.info() != Eigen::Success) {
            throw SolverBreakdown("SaddleSolver: LDL^T and LU factorizations failed",
                                  std::numeric_limits<double>::infinity());
        }
    }

    [[nodiscard]] Eigen::VectorXd raw_solve(const Eigen::VectorXd& r) const
    {
        return fallback_ ? Eigen::VectorXd(lu_.solve(r)) : Eigen::VectorXd(ldlt_.solve(r));
    }

    /// Solves [K b; b^T 0] (x, xi) = (r, s).
    [[nodiscard]] Correction block_solve(const Eigen::VectorXd& ru, const Eigen::VectorXd& rp, double s) const
    {
        Eigen::VectorXd r(nu_ + np_);
        r << ru, rp;
        Eigen::VectorXd y = raw_solve(r);
        const double xi = (border_.dot(y) - s) / border_gram_;
        y -= xi * border_solve_;
        return {y.head(nu_), y.tail(np_), xi};
    }

    void setup_schur(const SaddleSystem& sys)
    {
        if (!(sys.m.squaredNorm() > 0.0)) {
            throw SolverBreakdown("SaddleSolver: degenerate mean constraint", std::numeric_limits<double>::infinity());
        }
        llt_a_.compute(ColSparse(sys.A));
        if (llt_a_.info() != Eigen::Success) {
            throw SolverBreakdown("SaddleSolver: Cholesky of A failed", std::numeric_limits<double>::infinity());
        }
        llt_q_.compute(ColSparse(sys.pressure_gram.size() != 0 ? sys.pressure_gram : sys.C));
        if (llt_q_.info() != Eigen::Success) {
            throw SolverBreakdown("SaddleSolver: pressure preconditioner is not positive definite",
                                  std::numeric_limits<double>::infinity());
        }
    }

    [[nodiscard]] Eigen::VectorXd project(Eigen::VectorXd v) const
    {
        v -= (sys_->m.dot(v) / sys_->m.squaredNorm()) * sys_->m;
        return v;
    }

    [[nodiscard]] Eigen::VectorXd apply_schur(const Eigen::VectorXd& p) const
    {
        const Eigen::VectorXd w = llt_a_.solve(Eigen::VectorXd(sys_->B.transpose() * p));
        return sys_->C * p + sys_->B * w;
    }

    /// Eliminates u, then projected PCG for S p - xi m = B A^{-1} r_u - r_p, m^T p = s.
    [[nodiscard]] Correction schur_solve(const Eigen::VectorXd& ru, const Eigen::VectorXd& rp, double s,
                                         int& iterations) const
    {
        const Eigen::VectorXd a_inv_ru = llt_a_.solve(ru);
        const Eigen::VectorXd g = sys_->B * a_inv_ru - rp;
        const Eigen::VectorXd p0 = (s / sys_->m.squaredNorm()) * sys_->m;

        Eigen::VectorXd p = p0;
        Eigen::VectorXd r = project(g - apply_schur(p0));
        Eigen::VectorXd z = project(llt_q_.solve(r));
        Eigen::VectorXd d = z;
        double rz = r.dot(z);
        const double rz0 = rz;
        constexpr int max_iterations = 1000;
        constexpr double inner_tol = 1e-26;  // squared relative preconditioned residual
        for (int it = 0; it < max_iterations && rz > inner_tol * rz0 && rz0 > 0.0; ++it) {
            const Eigen::VectorXd sd = project(apply_schur(d));
            const double alpha = rz / d.dot(sd);
            p += alpha * d;
            r -= alpha * sd;
            z = project(llt_q_.solve(r));
            const double rz_next = r.dot(z);
            d = z + (rz_next / rz) * d;
            rz = rz_next;
            ++iterations;
        }
        const Eigen::VectorXd sp = apply_schur(p);
        const double xi = sys_->m.dot(sp - g) / sys_->m.squaredNorm();
        Eigen::VectorXd u = a_inv_ru - llt_a_.solve(Eigen::VectorXd(sys_->B.transpose() * p));
        return {std::move(u), std::move(p), xi};
    }

    const SaddleSystem* sys_;
    Eigen::Index nu_;
    Eigen::Index np_;
    SaddleMethod method_ = SaddleMethod::block_ldlt;

    ColSparse k_;
    Eigen::VectorXd border_;
    Eigen::VectorXd border_solve_;
    double border_gram_ = 0.0;
    bool fallback_ = false;
    Eigen::SimplicialLDLT<ColSparse, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
    Eigen::SparseLU<ColSparse, Eigen::COLAMDOrdering<int>> lu_;

    Eigen::SimplicialLLT<ColSparse, Eigen::Lower, Eigen::AMDOrdering<int>> llt_a_;
    Eigen::SimplicialLLT<ColSparse, Eigen::Lower, Eigen::AMDOrdering<int>> llt_q_;
};

inline SaddleSolution solve_saddle(const SaddleSystem& sys, double tol, SaddleMethod method = SaddleMethod::automatic)
{
    return SaddleSolver(sys, method).solve(sys.rhs_u, tol);
}

// --- dense helpers (verification scale) ------------------------------------

inline constexpr Eigen::Index kDenseLimit = 5000;

inline void check_dense_size(const Eigen::MatrixXd& a, const char* who)
{
    if (a.rows() > kDenseLimit || a.cols() > kDenseLimit) {
        throw std::invalid_argument(std::string(who) + ": dimension above dense verification limit");
    }
}

inline Eigen::VectorXd dense_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
{
    check_dense_size(a, "dense_solve");
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) {
        throw SingularMatrix("dense_solve: matrix is singular", static_cast<long>(lu.rank()));
    }
    return lu.solve(b);
}

/// Singular values in ascending order.
inline Eigen::VectorXd dense_svd(const Eigen::MatrixXd& a)
{
    check_dense_size(a, "dense_svd");
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    Eigen::VectorXd sv = svd.singularValues();
    return sv.reverse().eval();
}

struct SymmetricEigen {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns
};

inline SymmetricEigen dense_sym_eig(const Eigen::MatrixXd& a)
{
    check_dense_size(a, "dense_sym_eig");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) throw std::runtime_error("dense_sym_eig: eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

/// Smallest theta with K x = theta G x, G symmetric positive definite.
inline double min_generalized_eig(const Eigen::MatrixXd& k, const Eigen::MatrixXd& g)
{
    check_dense_size(k, "min_generalized_eig");
    if (k.rows() != g.rows() || k.cols() != g.cols() || k.rows() != k.cols()) {
        throw std::invalid_argument("min_generalized_eig: dimension mismatch");
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() != Eigen::Success) {
        throw std::domain_error("min_generalized_eig: G is not symmetric positive definite");
    }
    // L^{-1} K L^{-T} has the same spectrum as the pencil.
    const Eigen::MatrixXd linv_k = llt.matrixL().solve(k);
    const Eigen::MatrixXd reduced = llt.matrixL().solve(linv_k.transpose()).transpose();
    const Eigen::MatrixXd sym = 0.5 * (reduced + reduced.transpose());
    return dense_sym_eig(sym).values(0);
}

} // namespace sge
