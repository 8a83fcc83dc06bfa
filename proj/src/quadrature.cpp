// SPDX-License-Identifier: Apache-2.0
//
// holo-mimo: Fourier plane-wave synthesis of holographic MIMO channels
// Copyright (C) 2026 The holo-mimo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "holomimo/quadrature.hpp"

#include <array>
#include <stdexcept>

namespace holomimo
{

static GaussLegendreRule build_rule(int n)
{
    GaussLegendreRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i)
    {
        // Chebyshev initial guess, then Newton on P_n
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it)
        {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k)
            {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1, p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k)
        {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
            p0 = p1, p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x, rule.weights[i] = w;
        rule.nodes[n - 1 - i] = x, rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1)
        rule.nodes[n / 2] = 0.0;
    return rule;
}

const GaussLegendreRule &gauss_legendre(int n)
{
    static const std::array<GaussLegendreRule, 65> rules = []
    {
        std::array<GaussLegendreRule, 65> r;
        for (int k = 1; k <= 64; ++k)
            r[k] = build_rule(k);
        return r;
    }();
    if (n < 1 || n > 64)
        throw std::invalid_argument("gauss_legendre: order must be in [1, 64]");
    return rules[n];
}

double quadrature_integrate(const AngularRegion &region, const std::function<double(double, double)> &integrand,
                            double rel_tol)
{
    QuadratureOptions opt;
    opt.rel_tol = rel_tol;
    return integrate_region(region, integrand, opt);
}

} // namespace holomimo
