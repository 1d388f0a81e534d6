// Principal curvatures and eta-eigenvalues of a tilted spacelike graph.
#include "etaq/geometry.hpp"
#include "etaq/operator.hpp"

#include <cmath>
#include <cstdio>

int main() {
    using namespace etaq;
    auto u = [](const Vec& x) { return 0.3 * x[0] + 0.5 * std::sqrt(1.0 + x.squaredNorm()); };
    for (double s : {0.0, 0.5, 1.0}) {
        Vec x(3);
        x << s, -0.5 * s, 0.25;
        const GraphJet jet = jet_from_function(u, x, 1e-4);
        const CurvatureData cd = curvature_data(jet);
        std::printf("x=(%.2f, %.2f, %.2f) margin=%.3f H=%.4f\n", x[0], x[1], x[2], spacelike_margin(jet),
                    cd.mean_curvature);
        std::printf("  kappa  = %.5f %.5f %.5f\n", cd.kappa[0], cd.kappa[1], cd.kappa[2]);
        std::printf("  lambda = %.5f %.5f %.5f\n", cd.lambda_eta[0], cd.lambda_eta[1], cd.lambda_eta[2]);
        if (in_tilde_gamma(2, cd.kappa)) std::printf("  sigma2/sigma1(eta) = %.5f\n", evaluate({3, 2, 1}, jet));
    }
}
