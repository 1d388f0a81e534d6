// Solves sigma_2(eta) = 12 on the unit ball in R^3 and compares with the exact
// hyperboloid cap sqrt(1 + |x|^2) - sqrt(2).
#include "etaq/solver.hpp"

#include <cstdio>

int main() {
    using namespace etaq;
    const QuotientSpec spec{3, 2, 0};
    const DomainSpec dom = DomainSpec::ball(3, 1.0);
    const Grid grid = build_grid(dom, 1.0 / 16);
    const NodalPsi psi = constant_psi(12.0);
    ContinuationConfig cfg;

    const InitialGuess init = default_initial_field(spec, grid, dom, psi, cfg);
    std::printf("unknowns %zu, start rho=%g (subsolution: %s)\n", grid.unknowns(), init.parameter,
                init.subsolution ? "yes" : "no");

    const SolveReport rep = continuation_solve(spec, grid, psi, init.field, cfg);
    const FieldU exact = sample_field(grid, [](const Vec& x) { return hyperboloid_cap(x, 1.0, 1.0); });
    const double err = (rep.field.values - exact.values).cwiseAbs().maxCoeff();

    for (const TraceEntry& e : rep.t_trace)
        std::printf("  t=%.4f newton=%d residual=%.3e\n", e.t, e.newton_iters, e.final_residual);
    std::printf("converged %s, sup error %.3e, min margin %.3f\n", rep.converged ? "yes" : "no", err,
                rep.min_spacelike_margin);
    return rep.converged ? 0 : 1;
}
