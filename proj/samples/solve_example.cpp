// Minimal library use: solve example 2 on a 16x16 mesh for a few lambda values
// and print the relative error in the broken V-norm.

#include "sge/sge.hpp"

#include <cstdio>

int main()
{
    using namespace sge;

    const double iota = 1e-6;
    const Discretization disc(16, iota, 1.0);
    const AnalyticField field = example2_field();
    const VectorField f = example_force(field, ProblemParams{1.0, 0.0, iota});
    const Eigen::VectorXd rhs = disc.load(f);

    std::printf("dofs: u=%d p=%d\n", disc.vmap().n_free, disc.qmap().n_free);
    for (double lambda : {1.0, 1e4, 1e8}) {
        const SolveOutcome r = solve_and_measure(disc, field, lambda, 1e-10, f, rhs);
        std::printf("lambda=%.0e  E_u=%.4e  residual=%.1e\n", lambda, r.norms.relative_u_table(), r.solution.residual);
    }
    return 0;
}
