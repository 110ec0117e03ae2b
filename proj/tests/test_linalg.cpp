#include "oracles.hpp"
#include "sge/linalg.hpp"
#include "sge/study.hpp"

#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <random>

using namespace sge;

namespace {

SaddleSystem example2_system(int n, double iota, double lambda)
{
    const Discretization disc(n, iota, 1.0);
    const AnalyticField field = example2_field();
    const VectorField f = example_force(field, ProblemParams{1.0, 0.0, iota});
    return disc.system(lambda, disc.load(f));
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

// example 2 is divergence free, so its discrete pressure is roundoff; a random load excites p
void randomize_load(SaddleSystem& sys, unsigned seed)
{
    std::mt19937 gen(seed);
    std::normal_distribution<double> dist;
    for (auto& v : sys.rhs_u) v = dist(gen);
}

} // namespace

TEST(Saddle, MatchesDenseOracle)
{
    for (int n : {2, 3}) {
        for (double lambda : {1.0, 1e8}) {
            SaddleSystem sys = example2_system(n, 1e-2, lambda);
            randomize_load(sys, 11);
            const oracle::DenseSaddle o = oracle::dense_saddle(sys);
            for (SaddleMethod method : {SaddleMethod::block_ldlt, SaddleMethod::schur_cg}) {
                const SaddleSolution s = solve_saddle(sys, 1e-12, method);
                EXPECT_LT(rel(s.u, o.u), 1e-10) << n << " " << lambda;
                EXPECT_LT(s.residual, 1e-12);
                EXPECT_EQ(s.method, method);
                if (n == 2) {
                    // the single pressure DoF is removed by the mean constraint
                    EXPECT_LT(s.p.norm(), 1e-14 * s.u.norm());
                } else {
                    EXPECT_GT(o.p.norm(), 1e-6 * o.u.norm());
                    EXPECT_LT(rel(s.p, o.p), 1e-9) << n << " " << lambda;
                }
            }
        }
    }
}

TEST(Saddle, EnergyIdentityAndZeroMean)
{
    const SaddleSystem sys = example2_system(4, 0.1, 10.0);
    const SaddleSolution s = solve_saddle(sys, 1e-12);
    const double lhs = s.u.dot(sys.A * s.u) + s.p.dot(sys.C * s.p);
    EXPECT_NEAR(lhs, sys.rhs_u.dot(s.u), 1e-8 * std::abs(lhs));
    EXPECT_LT(std::abs(sys.m.dot(s.p)), 1e-12 * (1.0 + s.p.norm()));
}

TEST(Saddle, MethodsAgree)
{
    SaddleSystem sys = example2_system(6, 1e-4, 1e4);
    randomize_load(sys, 13);
    const SaddleSolution a = solve_saddle(sys, 1e-11, SaddleMethod::block_ldlt);
    const SaddleSolution b = solve_saddle(sys, 1e-11, SaddleMethod::schur_cg);
    EXPECT_LT(rel(b.u, a.u), 1e-9);
    EXPECT_LT(rel(b.p, a.p), 1e-8);
    EXPECT_GT(b.cg_iterations, 0);
}

TEST(Saddle, AutomaticPicksDirectAtSmallScale)
{
    const SaddleSystem sys = example2_system(3, 0.1, 1.0);
    EXPECT_EQ(SaddleSolver(sys).method(), SaddleMethod::block_ldlt);
}

TEST(Saddle, ZeroRightHandSide)
{
    SaddleSystem sys = example2_system(3, 0.1, 1.0);
    sys.rhs_u.setZero();
    const SaddleSolution s = solve_saddle(sys, 1e-10);
    EXPECT_EQ(s.u.norm(), 0.0);
    EXPECT_EQ(s.p.norm(), 0.0);
}

TEST(Saddle, ScaleEquivariance)
{
    SaddleSystem sys = example2_system(3, 0.1, 1.0);
    randomize_load(sys, 12);
    const SaddleSolver solver(sys);
    const SaddleSolution s1 = solver.solve(sys.rhs_u, 1e-12);
    const SaddleSolution s2 = solver.solve(-3.5 * sys.rhs_u, 1e-12);
    EXPECT_LT(rel(s2.u, -3.5 * s1.u), 1e-11);
    EXPECT_LT(rel(s2.p, -3.5 * s1.p), 1e-10);
}

TEST(Saddle, InvalidInputsRejected)
{
    SaddleSystem sys = example2_system(2, 0.1, 1.0);
    EXPECT_THROW(solve_saddle(sys, 1e-15), std::invalid_argument);
    EXPECT_THROW(solve_saddle(sys, 1e-5), std::invalid_argument);
    const SaddleSolver solver(sys);
    EXPECT_THROW(solver.solve(Eigen::VectorXd::Ones(3), 1e-10), std::invalid_argument);
    sys.m = Eigen::VectorXd::Ones(7);
    EXPECT_THROW(solve_saddle(sys, 1e-10), std::invalid_argument);
}

TEST(Saddle, BlockMatrixLayout)
{
    const SaddleSystem sys = example2_system(2, 0.1, 2.0);
    const Eigen::MatrixXd k(block_matrix(sys));
    const auto nu = sys.A.rows();
    EXPECT_EQ(k.rows(), nu + 1);
    EXPECT_LT((k - k.transpose()).norm(), 1e-14 * k.norm());
    EXPECT_NEAR(k(nu, nu), -Eigen::MatrixXd(sys.C)(0, 0), 1e-15);
}

TEST(Dense, SolveAndSingularity)
{
    Eigen::Matrix2d a;
    a << 2.0, 1.0, 1.0, 3.0;
    const Eigen::VectorXd x = dense_solve(a, Eigen::Vector2d(3.0, 5.0));
    EXPECT_NEAR(x(0), 0.8, 1e-15);
    EXPECT_NEAR(x(1), 1.4, 1e-15);
    Eigen::Matrix2d s;
    s << 1.0, 2.0, 2.0, 4.0;
    try {
        dense_solve(s, Eigen::Vector2d(1.0, 1.0));
        FAIL() << "expected SingularMatrix";
    } catch (const SingularMatrix& e) {
        EXPECT_EQ(e.rank(), 1);
    }
    EXPECT_THROW(dense_solve(Eigen::MatrixXd::Identity(kDenseLimit + 1, kDenseLimit + 1),
                             Eigen::VectorXd::Zero(kDenseLimit + 1)),
                 std::invalid_argument);
}

TEST(Dense, SingularValuesAscending)
{
    Eigen::MatrixXd a(3, 2);
    a << 3.0, 0.0, 0.0, 4.0, 0.0, 0.0;
    const Eigen::VectorXd sv = dense_svd(a);
    EXPECT_NEAR(sv(0), 3.0, 1e-14);
    EXPECT_NEAR(sv(1), 4.0, 1e-14);
}

TEST(Dense, SymmetricEigen)
{
    Eigen::Matrix2d a;
    a << 2.0, 1.0, 1.0, 2.0;
    const SymmetricEigen e = dense_sym_eig(a);
    EXPECT_NEAR(e.values(0), 1.0, 1e-14);
    EXPECT_NEAR(e.values(1), 3.0, 1e-14);
    EXPECT_LT((a * e.vectors.col(1) - 3.0 * e.vectors.col(1)).norm(), 1e-14);
}

TEST(Dense, GeneralizedEigen)
{
    const Eigen::Matrix2d k = Eigen::Vector2d(2.0, 6.0).asDiagonal();
    const Eigen::Matrix2d g = Eigen::Vector2d(1.0, 2.0).asDiagonal();
    EXPECT_NEAR(min_generalized_eig(k, g), 2.0, 1e-14);
    Eigen::Matrix2d kk;
    kk << 2.0, 1.0, 1.0, 2.0;
    EXPECT_NEAR(min_generalized_eig(kk, Eigen::Matrix2d::Identity()), 1.0, 1e-14);
    Eigen::Matrix2d indefinite;
    indefinite << 1.0, 0.0, 0.0, -1.0;
    EXPECT_THROW(min_generalized_eig(kk, indefinite), std::domain_error);
    EXPECT_THROW(min_generalized_eig(kk, Eigen::Matrix3d::Identity()), std::invalid_argument);
}
