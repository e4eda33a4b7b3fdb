// Prints lambda, sup v and their product for a few planar shapes, with the
// Richardson error estimate and the universal limits for comparison.

#include <cstdio>

#include "torsionlab/bounds.hpp"
#include "torsionlab/io.hpp"
#include "torsionlab/solvers.hpp"

using namespace torsionlab;

int main() {
    ProductOptions po;
    po.solver.backend = LinearBackend::cholesky;
    po.richardson = true;
    const DomainSpec shapes[] = {
        DomainSpec(Box{{1.0, 1.0}}),
        DomainSpec(Box{{1.0, 5.0}}),
        DomainSpec(Disk{{0.0, 0.0}, 0.5}),
        DomainSpec(Ellipse{{0.0, 0.0}, 1.5, 0.5}),
        DomainSpec(ConvexPolygon{{{0.0, 0.0}, {1.0, 0.0}, {0.5, 0.8660254037844386}}}),
    };
    std::printf("%-28s %12s %12s %10s %9s\n", "shape", "lambda", "sup v", "product", "rel.err");
    for (const auto& d : shapes) {
        const auto r = spectral_product(d, 1.0 / 64, po);
        std::printf("%-28s %12.6f %12.8f %10.6f %9.2e\n", domain_label(d).c_str(), r.lambda1, r.sup_norm,
                    r.product, r.error.product);
    }
    const auto u = universal_product_bounds(2);
    std::printf("planar limits: %.4f <= product <= %.4f, convex slab limit %.6f\n", u.lower, u.upper_coef,
                payne_lower());
}
