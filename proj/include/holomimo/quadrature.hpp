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

#ifndef HOLOMIMO_QUADRATURE_HPP
#define HOLOMIMO_QUADRATURE_HPP

#include "holomimo/errors.hpp"
#include "holomimo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace holomimo
{

// Gauss-Legendre nodes and weights on [-1, 1]
struct GaussLegendreRule
{
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Cached rule of order n (1 <= n <= 64). Thread-safe.
const GaussLegendreRule &gauss_legendre(int n);

struct QuadratureOptions
{
    double rel_tol = 1e-6;
    double abs_tol = 0.0;
    int order = 10;          // Gauss-Legendre points per interval
    int max_depth = 40;      // bisection levels below the initial interval
    int max_intervals = 20000;
    int initial_pieces = 1;  // equal splits before adaptation starts
};

namespace detail
{
template <typename F>
double gl_apply(const GaussLegendreRule &rule, F &f, double a, double b)
{
    const double h = 0.5 * (b - a), m = 0.5 * (a + b);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        s += rule.weights[i] * f(m + h * rule.nodes[i]);
    return s * h;
}
} // namespace detail

// Globally adaptive Gauss-Legendre on [a, b]. Each interval is compared with
// the sum over its two halves; the interval with the largest discrepancy is
// bisected until the summed discrepancy falls below max(rel_tol |I|, abs_tol).
// The split order is fixed, so results are deterministic.
// Throws QuadratureError when max_depth or max_intervals is reached.
template <typename F>
double integrate_adaptive(F &&f, double a, double b, const QuadratureOptions &opt = {})
{
    if (!(b > a))
        return 0.0;
    const GaussLegendreRule &rule = gauss_legendre(opt.order);

    struct Piece
    {
        double a, b, value, error;
        int depth;
    };
    auto make = [&](double lo, double hi, double coarse, int depth)
    {
        const double mid = 0.5 * (lo + hi);
        const double fine = detail::gl_apply(rule, f, lo, mid) + detail::gl_apply(rule, f, mid, hi);
        return Piece{lo, hi, fine, std::abs(fine - coarse), depth};
    };

    std::vector<Piece> pieces;
    const int n0 = std::max(1, opt.initial_pieces);
    for (int k = 0; k < n0; ++k)
    {
        const double lo = a + (b - a) * k / n0, hi = k + 1 == n0 ? b : a + (b - a) * (k + 1) / n0;
        pieces.push_back(make(lo, hi, detail::gl_apply(rule, f, lo, hi), 0));
    }

    for (;;)
    {
        double total = 0.0, err = 0.0;
        for (const auto &p : pieces)
            total += p.value, err += p.error;
        if (!std::isfinite(total))
            throw QuadratureError("integrand is not finite on the integration interval", total, err);
        if (err <= std::max(opt.rel_tol * std::abs(total), opt.abs_tol))
            return total;

        std::size_t worst = 0;
        for (std::size_t i = 1; i < pieces.size(); ++i)
            if (pieces[i].error > pieces[worst].error)
                worst = i;
        const Piece w = pieces[worst];
        if (w.depth >= opt.max_depth || static_cast<int>(pieces.size()) >= opt.max_intervals)
            throw QuadratureError("adaptive quadrature did not converge (depth " + std::to_string(w.depth) +
                                      ", " + std::to_string(pieces.size()) + " intervals)",
                                  total, err);
        const double mid = 0.5 * (w.a + w.b);
        const double left = detail::gl_apply(rule, f, w.a, mid);
        const double right = detail::gl_apply(rule, f, mid, w.b);
        pieces[worst] = make(w.a, mid, left, w.depth + 1);
        pieces.insert(pieces.begin() + static_cast<std::ptrdiff_t>(worst) + 1, make(mid, w.b, right, w.depth + 1));
    }
}

// Integral over [a, b] after the substitution x = a + (b - a) t^2 (3 - 2t).
// Square-root endpoint singularities, as produced by theta bounds that reach
// the unit circle, become smooth in t.
template <typename F>
double integrate_endpoint_graded(F &&f, double a, double b, const QuadratureOptions &opt = {})
{
    if (!(b > a))
        return 0.0;
    const double w = b - a;
    return integrate_adaptive(
        [&](double t)
        {
            const double jac = 6.0 * t * (1.0 - t) * w;
            return jac > 0.0 ? f(a + w * t * t * (3.0 - 2.0 * t)) * jac : 0.0;
        },
        0.0, 1.0, opt);
}

// Integral of f(theta, phi) sin(theta) over the region, nested: adaptive in
// phi on every smooth piece, adaptive in theta between theta_min(phi) and theta_max(phi).
template <typename F>
double integrate_region(const AngularRegion &region, F &&f, const QuadratureOptions &opt = {})
{
    QuadratureOptions inner = opt;
    inner.rel_tol = opt.rel_tol * 0.1;
    inner.abs_tol = opt.abs_tol * 0.1;

    double total = 0.0;
    for (const auto &sub : region.pieces)
    {
        const auto knots = sub.smooth_pieces();
        for (std::size_t k = 0; k + 1 < knots.size(); ++k)
        {
            auto outer = [&](double phi)
            {
                const double t0 = sub.theta_min(phi), t1 = sub.theta_max(phi);
                if (!(t1 > t0))
                    return 0.0;
                return integrate_adaptive([&](double th) { return f(th, phi) * std::sin(th); }, t0, t1, inner);
            };
            total += integrate_endpoint_graded(outer, knots[k], knots[k + 1], opt);
        }
    }
    return total;
}

// Type-erased entry point of integrate_region.
double quadrature_integrate(const AngularRegion &region, const std::function<double(double, double)> &integrand,
                            double rel_tol = 1e-6);

} // namespace holomimo

#endif
