#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace skt {

struct QuadratureRule
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss-Legendre rule with `points` nodes mapped to [0, 1]; exact for
/// polynomials of degree 2 * points - 1.
inline QuadratureRule gauss_legendre_01(int points)
{
    if (points < 1) throw std::invalid_argument("gauss_legendre_01: need at least one point");
    QuadratureRule q;
    q.nodes.resize(static_cast<std::size_t>(points));
    q.weights.resize(static_cast<std::size_t>(points));
    const int n = points;
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        q.nodes[static_cast<std::size_t>(n - 1 - i)] = 0.5 * (1.0 + x);
        q.weights[static_cast<std::size_t>(n - 1 - i)] = 0.5 * w;
    }
    return q;
}

} // namespace skt
