#include "oracles.hpp"
#include "sge/manufactured.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace sge;
using oracle::fd_partials;

namespace {

std::vector<Point2> random_points(int count, unsigned seed)
{
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(0.05, 0.95);
    std::vector<Point2> pts;
    for (int i = 0; i < count; ++i) pts.push_back({dist(gen), dist(gen)});
    return pts;
}

AnalyticField zero_field()
{
    return make_field("zero", true, [](const Jet4&, const Jet4&) { return std::array<Jet4, 2>{Jet4(0.0), Jet4(0.0)}; });
}

} // namespace

TEST(Fields, DivergenceFree)
{
    for (const AnalyticField& field : {example1_field(), example2_field()}) {
        EXPECT_TRUE(field.divergence_free);
        for (const Point2 x : random_points(50, 3)) {
            const Partials p = partials(field, x);
            EXPECT_NEAR(divergence(p), 0.0, 1e-12) << field.name;
            // grad div and grad Lap div vanish too
            EXPECT_NEAR(p(0, 2, 0) + p(1, 1, 1), 0.0, 1e-10);
            EXPECT_NEAR(p(0, 3, 1) + p(0, 1, 3) + p(1, 2, 2) + p(1, 0, 4), 0.0, 1e-8);
        }
    }
}

TEST(Fields, BoundaryValues)
{
    for (double t : {0.0, 0.13, 0.5, 0.77, 1.0}) {
        for (const Point2 x : {Point2{t, 0.0}, Point2{t, 1.0}, Point2{0.0, t}, Point2{1.0, t}}) {
            const FieldSample e1 = sample_field(example1_field(), x);
            const FieldSample e2 = sample_field(example2_field(), x);
            EXPECT_LT(e1.value.norm(), 1e-12);
            EXPECT_LT(e2.value.norm(), 1e-12);
            // example 1 is clamped: the full gradient vanishes on the boundary
            EXPECT_LT(e1.grad.norm(), 1e-11);
        }
    }
    // example 2 has a nonzero normal derivative on the boundary
    EXPECT_GT(sample_field(example2_field(), {0.3, 0.0}).grad.norm(), 1e-3);
}

TEST(Fields, UnknownNameRejected)
{
    EXPECT_THROW(field_by_name("example3"), std::invalid_argument);
    EXPECT_EQ(field_by_name("example2").name, "example2");
}

TEST(Fields, JetPartialsMatchFiniteDifferences)
{
    for (const Point2 x : random_points(5, 9)) {
        const Partials jet = partials(example2_field(), x);
        const Partials fdp = fd_partials(oracle::example2, x, 0.1);
        for (int c = 0; c < 2; ++c) {
            for (int a = 0; a <= 4; ++a) {
                for (int b = 0; a + b <= 4; ++b) EXPECT_NEAR(jet(c, a, b), fdp(c, a, b), 1e-8) << c << a << b;
            }
        }
    }
}

TEST(Forces, SgeForceMatchesFiniteDifferences)
{
    const ProblemParams prm{1.0, 0.0, 0.3};
    for (const Point2 x : random_points(8, 5)) {
        const Eigen::Vector2d exact = sge_force(partials(example1_field(), x), prm);
        const Eigen::Vector2d approx = sge_force(fd_partials(oracle::example1, x, 1e-2), prm);
        EXPECT_LT((exact - approx).norm(), 1e-4 * std::max(1.0, exact.norm()));
        const Eigen::Vector2d exact2 = sge_force(partials(example2_field(), x), prm);
        const Eigen::Vector2d approx2 = sge_force(fd_partials(oracle::example2, x, 0.05), prm);
        EXPECT_LT((exact2 - approx2).norm(), 1e-4 * std::max(1.0, exact2.norm()));
    }
}

TEST(Forces, ElasticityForceMatchesHandDerivation)
{
    const ProblemParams prm{1.0, 0.0, 0.0};
    for (const Point2 x : random_points(20, 7)) {
        const Eigen::Vector2d f = elasticity_force(partials(example2_field(), x), prm);
        const Eigen::Vector2d ref = oracle::example2_elasticity_force(x);
        EXPECT_LT((f - ref).norm(), 1e-12 * std::max(1.0, ref.norm()));
        const Eigen::Vector2d fd = elasticity_force(fd_partials(oracle::example2, x, 0.1), prm);
        EXPECT_LT((f - fd).norm(), 1e-12 * std::max(1.0, f.norm()));
    }
}

TEST(Forces, QuadraticField)
{
    const AnalyticField u = make_field("quad", false, [](const Jet4& x, const Jet4&) {
        return std::array<Jet4, 2>{x * x, Jet4(0.0)};
    });
    const Point2 x{0.4, 0.6};
    // -mu Lap u - (mu + lambda) grad div u with mu = 1
    const Eigen::Vector2d f0 = body_force_sge(u, {1.0, 0.0, 0.5})(x);
    EXPECT_NEAR(f0(0), -4.0, 1e-13);
    EXPECT_NEAR(f0(1), 0.0, 1e-13);
    const Eigen::Vector2d f1 = body_force_elasticity(u, {1.0, 1.0, 0.0})(x);
    EXPECT_NEAR(f1(0), -6.0, 1e-13);
}

TEST(Forces, DivergenceFreeForcesIgnoreLambda)
{
    for (const Point2 x : random_points(10, 2)) {
        for (const AnalyticField& field : {example1_field(), example2_field()}) {
            const Eigen::Vector2d a = study_force(field, {1.0, 0.0, 0.1})(x);
            const Eigen::Vector2d b = study_force(field, {1.0, 1e8, 0.1})(x);
            EXPECT_LT((a - b).norm(), 1e-6 * std::max(1.0, a.norm()));
        }
    }
}

TEST(Forces, StudyForceSelection)
{
    const Point2 x{0.3, 0.7};
    const ProblemParams prm{1.0, 0.0, 0.5};
    const AnalyticField e2 = example2_field();
    EXPECT_EQ(study_force(e2, prm)(x), elasticity_force(partials(e2, x), prm));
    const AnalyticField e1 = example1_field();
    EXPECT_EQ(study_force(e1, prm)(x), sge_force(partials(e1, x), prm));
}

TEST(ErrorNorms, MatchGramMatricesAgainstZeroField)
{
    const Mesh mesh = build_uniform_unit_square(3);
    const BasisCache cache(mesh);
    const VDofMap vmap = build_vdofmap(mesh);
    const QDofMap qmap = build_qdofmap(mesh);
    const double iota = 0.3;
    const NormGrams g = assemble_norm_grams(mesh, cache, vmap, qmap, iota);
    std::mt19937 gen(4);
    std::normal_distribution<double> dist;
    Eigen::VectorXd u(vmap.n_free);
    Eigen::VectorXd p(qmap.n_free);
    for (auto& v : u) v = dist(gen);
    for (auto& v : p) v = dist(gen);
    const ErrorNorms e = error_norms(mesh, cache, vmap, qmap, u, p, zero_field(), {1.0, 1.0, iota},
                                     [](Point2) { return Eigen::Vector2d(1.0, 0.0); });
    EXPECT_NEAR(e.h1 * e.h1, u.dot(g.h1 * u), 1e-10 * e.h1 * e.h1);
    EXPECT_NEAR(e.h2 * e.h2, u.dot(g.h2 * u), 1e-10 * e.h2 * e.h2);
    EXPECT_NEAR(e.v * e.v, u.dot(g.v * u), 1e-10 * e.v * e.v);
    EXPECT_NEAR(e.q * e.q, p.dot(g.q * p), 1e-12 * e.q * e.q);
    EXPECT_NEAR(e.f_l2, 1.0, 1e-14);
    EXPECT_LE(e.h2_table, e.h2);
    EXPECT_GE(e.h2_table, e.h2 / std::sqrt(2.0));
    EXPECT_NEAR(e.relative_u(), e.v, 1e-14);
}

TEST(ErrorNorms, InterpolationConvergesAtExpectedOrders)
{
    // example 1 is clamped, so eliminating the boundary normal derivatives is consistent;
    // it oscillates, so the asymptotic range starts around n = 16
    const AnalyticField field = example1_field();
    double prev_h1 = 0.0;
    double prev_h2 = 0.0;
    for (int n : {16, 32}) {
        const Mesh mesh = build_uniform_unit_square(n);
        const BasisCache cache(mesh);
        const VDofMap vmap = build_vdofmap(mesh);
        const QDofMap qmap = build_qdofmap(mesh);
        const Eigen::VectorXd u = interpolate(mesh, vmap, field);
        const ErrorNorms e = error_norms(mesh, cache, vmap, qmap, u, Eigen::VectorXd(), field, {1.0, 0.0, 0.0},
                                         [](Point2) { return Eigen::Vector2d(1.0, 0.0); });
        if (n == 32) {
            EXPECT_GT(std::log2(prev_h1 / e.h1), 1.9);
            EXPECT_GT(std::log2(prev_h2 / e.h2), 0.9);
        }
        prev_h1 = e.h1;
        prev_h2 = e.h2;
    }
}
