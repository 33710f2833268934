#include "courier/prob.hpp"

#include <cmath>

namespace courier {

double normal01(Rng& rng) {
    // polar rejection would consume a data-dependent number of draws even on
    // the cached branch, so plain Box-Muller keeps the stream layout simple
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double gamma_sample(Rng& rng, double alpha) {
    if (alpha <= 0.0) throw std::invalid_argument("gamma_sample: alpha must be positive");
    if (alpha < 1.0) {
        double u = uniform01(rng);
        while (u <= 0.0) u = uniform01(rng);
        return gamma_sample(rng, alpha + 1.0) * std::pow(u, 1.0 / alpha);
    }
    double d = alpha - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = normal01(rng);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        double u = uniform01(rng);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

std::vector<double> dirichlet_sample(Rng& rng, double alpha, size_t n) {
    std::vector<double> out(n);
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
        out[i] = gamma_sample(rng, alpha);
        total += out[i];
    }
    if (total <= 0.0) {
        // all-underflow corner with tiny alpha: fall back to a point mass
        out.assign(n, 0.0);
        out[rng() % n] = 1.0;
        return out;
    }
    for (double& x : out) x /= total;
    return out;
}

}  // namespace courier
