// Solves one perforated square at the delta* hole radius and prints every
// bound entry that applies, valid or not.

#include <cstdio>
#include <iostream>

#include "torsionlab/experiments.hpp"

using namespace torsionlab;

int main(int argc, char** argv) {
    const long N = argc > 1 ? std::atol(argv[1]) : 3;
    ExperimentConfig cfg;
    cfg.quiet = true;
    const auto ds = delta_star(2, 4.0 / 3.0, N, 1.0);
    const PerforatedCubeParams p{2, 1.0, N, ds.value};
    const DomainSpec spec(p);
    const double h = select_h(spec, cfg);
    const auto r = solve_domain(spec, cfg, h);
    const auto cell = solve_unit_cell(p, h, cfg);
    const auto rep = check_all(r, spec, PerforatedAux{cell.mu1, cell.mu1_error, cell.torsion_sup, cell.torsion_error});
    std::printf("N = %ld, delta = %.6g, h = %.3g, %zu unknowns\n", N, p.delta, h, r.unknowns);
    std::printf("lambda %.6f, sup v %.8f, product %.6f, cell mu1 %.4f\n\n", r.lambda1, r.sup_norm, r.product,
                cell.mu1);
    write_bound_csv(std::cout, rep);
}
