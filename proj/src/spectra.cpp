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

#include "holomimo/spectra.hpp"
#include "holomimo/errors.hpp"
#include "holomimo/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>

namespace holomimo
{

void VmfMixture::validate() const
{
    if (clusters.empty())
        throw std::invalid_argument("VmfMixture: no clusters");
    double sum = 0.0;
    for (const auto &c : clusters)
    {
        if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
            throw std::invalid_argument("VmfMixture: weights must be nonnegative");
        if (!(c.alpha >= 0.0) || !std::isfinite(c.alpha))
            throw std::invalid_argument("VmfMixture: concentrations must be nonnegative");
        sum += c.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("VmfMixture: weights must sum to 1");
}

double mean_resultant_length(double alpha)
{
    if (alpha < 1e-4)
        return alpha / 3.0 - alpha * alpha * alpha / 45.0;
    return 1.0 / std::tanh(alpha) - 1.0 / alpha;
}

double concentration_from_circular_variance(double nu2, CircularVarianceConvention convention)
{
    if (!(nu2 > 0.0 && nu2 < 1.0))
        throw std::invalid_argument("circular variance must lie in (0, 1)");
    auto nu2_of = [convention](double alpha)
    {
        const double a = mean_resultant_length(alpha);
        return convention == CircularVarianceConvention::kOneMinusLength ? 1.0 - a : 1.0 - a * a;
    };
    // nu2_of decreases monotonically; bisect on log(alpha)
    double lo = std::log(1e-8), hi = std::log(1e8);
    for (int it = 0; it < 200; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        (nu2_of(std::exp(mid)) > nu2 ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

static double log_sinh(double x) { return x > 20.0 ? x - std::log(2.0) + std::log1p(-std::exp(-2.0 * x)) : std::log(std::sinh(x)); }

double vmf_density(double theta, double phi, const VmfCluster &c)
{
    if (c.alpha == 0.0)
        return 1.0 / (4.0 * kPi);
    const double dot = std::sin(theta) * std::sin(c.mu_theta) * std::cos(phi - c.mu_phi) +
                       std::cos(theta) * std::cos(c.mu_theta);
    const double log_c = std::log(c.alpha) - std::log(4.0 * kPi) - log_sinh(c.alpha);
    return std::exp(log_c + c.alpha * dot);
}

double vmf_mixture_density(double theta, double phi, const VmfMixture &mixture)
{
    double s = 0.0;
    for (const auto &c : mixture.clusters)
        if (c.weight > 0.0)
            s += c.weight * vmf_density(theta, phi, c);
    return s;
}

static bool in_box(const AngularBox &b, double theta, double phi)
{
    return theta >= b.theta_lo && theta <= b.theta_hi && phi >= b.phi_lo && phi <= b.phi_hi;
}

double evaluate(const SpectralFactor &factor, double theta, double phi)
{
    struct Visitor
    {
        double theta, phi;
        double operator()(const Isotropic &) const { return 1.0; }
        double operator()(const ClusterUniform &c) const
        {
            double n = 0.0;
            for (const auto &b : c.boxes)
                n += in_box(b, theta, phi) ? 1.0 : 0.0;
            return n;
        }
        double operator()(const VmfMixture &m) const { return vmf_mixture_density(theta, phi, m); }
        double operator()(const CustomSeparable &c) const { return c.density(theta, phi); }
        double operator()(const CustomJoint &) const
        {
            throw std::invalid_argument("a joint spectral factor has no single-ended evaluation");
        }
    };
    return std::visit(Visitor{theta, phi}, factor);
}

// ------------------------------------------------------------------------

CellGrid CellGrid::build(const PlanarArray &array)
{
    CellGrid g;
    g.array = array;
    g.cells = enumerate_cells(array);
    g.regions.reserve(g.cells.size());
    for (const auto &c : g.cells)
        g.regions.push_back(angular_region(c));
    return g;
}

int CellGrid::find(CellIndex index) const
{
    for (std::size_t i = 0; i < cells.size(); ++i)
        if (cells[i].index == index)
            return static_cast<int>(i);
    return -1;
}

static double cluster_uniform_power(const ClusterUniform &cu, const AngularRegion &region, const SpectraOptions &opt)
{
    QuadratureOptions q;
    q.rel_tol = opt.rel_tol;
    q.abs_tol = 1e-300;
    double total = 0.0;
    for (const auto &box : cu.boxes)
    {
        if (!(box.theta_hi > box.theta_lo) || !(box.phi_hi > box.phi_lo))
            continue;
        const double c_hi = std::cos(box.theta_lo), c_lo = std::cos(box.theta_hi);
        for (const auto &sub : region.pieces)
        {
            const double lo = std::max(sub.phi_lo, box.phi_lo), hi = std::min(sub.phi_hi, box.phi_hi);
            if (!(hi > lo))
                continue;
            std::vector<double> knots{lo, hi};
            for (double k : sub.smooth_pieces())
                if (k > lo && k < hi)
                    knots.push_back(k);
            std::sort(knots.begin(), knots.end());
            auto f = [&](double phi)
            {
                // cos(max(theta_min, theta_1)) - cos(min(theta_max, theta_2)), clipped at zero
                const double upper = std::min(sub.cos_theta_min(phi), c_hi);
                const double lower = std::max(sub.cos_theta_max(phi), c_lo);
                return std::max(0.0, upper - lower);
            };
            for (std::size_t k = 0; k + 1 < knots.size(); ++k)
                total += integrate_endpoint_graded(f, knots[k], knots[k + 1], q);
        }
    }
    return total;
}

double region_power(const SpectralFactor &factor, const AngularRegion &region, const SpectraOptions &opt)
{
    QuadratureOptions q;
    q.rel_tol = opt.rel_tol;
    q.initial_pieces = 4;
    if (std::holds_alternative<Isotropic>(factor))
        return solid_angle(region, opt.rel_tol);
    if (const auto *cu = std::get_if<ClusterUniform>(&factor))
        return cluster_uniform_power(*cu, region, opt);
    if (const auto *vm = std::get_if<VmfMixture>(&factor))
        return integrate_region(region, [vm](double th, double ph) { return vmf_mixture_density(th, ph, *vm); }, q);
    if (const auto *cs = std::get_if<CustomSeparable>(&factor))
        return integrate_region(region, cs->density, q);
    throw std::invalid_argument("region_power: joint spectral factors need coupling_variances_joint");
}

// Runs body(i) for i in [0, n) in parallel and rethrows the first failure by index.
template <typename Body>
static void parallel_for_indexed(int n, Body &&body)
{
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
#pragma omp parallel for schedule(dynamic, 4)
    for (int i = 0; i < n; ++i)
    {
        try
        {
            body(i);
        }
        catch (...)
        {
            errors[i] = std::current_exception();
        }
    }
    for (auto &e : errors)
        if (e)
            std::rethrow_exception(e);
}

Eigen::VectorXd receive_variances(const SpectralFactor &factor, const CellGrid &grid, const SpectraOptions &opt)
{
    if (const auto *vm = std::get_if<VmfMixture>(&factor))
        vm->validate();
    const int n = grid.size();
    Eigen::VectorXd v(n);
    parallel_for_indexed(n, [&](int i) { v[i] = region_power(factor, grid.regions[i], opt); });

    if ((v.array() < 0.0).any() || !v.allFinite())
        throw NumericalError("receive_variances: spectral factor produced negative or non-finite power");
    const double total = v.sum();
    if (!(total > 0.0))
        throw NumericalError("receive_variances: spectral factor has no support on the upper hemisphere");
    return v / total;
}

CouplingMatrix CouplingMatrix::from_marginals(const Eigen::VectorXd &sigma_r2, const Eigen::VectorXd &sigma_s2)
{
    CouplingMatrix m;
    m.values = sigma_r2 * sigma_s2.transpose();
    m.separable = std::make_pair(sigma_r2, sigma_s2);
    return m;
}

CouplingMatrix coupling_variances(const SpectralFactor &receive, const SpectralFactor &source, const CellGrid &rx,
                                  const CellGrid &tx, const SpectraOptions &opt)
{
    if (std::holds_alternative<CustomJoint>(receive) || std::holds_alternative<CustomJoint>(source))
        throw std::invalid_argument("coupling_variances: joint factor passed to the separable path");
    CouplingMatrix m = CouplingMatrix::from_marginals(receive_variances(receive, rx, opt), receive_variances(source, tx, opt));
    m.receive_cells = rx.cells;
    m.source_cells = tx.cells;
    return m;
}

CouplingMatrix coupling_variances(const SpectralFactor &spectrum, const CellGrid &rx, const CellGrid &tx,
                                  const SpectraOptions &opt)
{
    if (const auto *joint = std::get_if<CustomJoint>(&spectrum))
        return coupling_variances_joint(*joint, rx, tx, opt);
    return coupling_variances(spectrum, spectrum, rx, tx, opt);
}

namespace
{
struct CellRule
{
    std::vector<double> theta, phi, weight;
};

// Composite rule on one region: 2^level panels per smooth azimuth piece
// (endpoint-graded) and 2^level panels in theta at every azimuth node.
CellRule cell_rule(const AngularRegion &region, int level, int order)
{
    const GaussLegendreRule &gl = gauss_legendre(order);
    const int panels = 1 << level;
    CellRule r;
    for (const auto &sub : region.pieces)
    {
        const auto knots = sub.smooth_pieces();
        for (std::size_t k = 0; k + 1 < knots.size(); ++k)
        {
            const double lo = knots[k], w = knots[k + 1] - knots[k];
            for (int p = 0; p < panels; ++p)
                for (int a = 0; a < order; ++a)
                {
                    const double t = (p + 0.5 * (gl.nodes[a] + 1.0)) / panels;
                    const double wt = gl.weights[a] * 0.5 / panels;
                    const double phi = lo + w * t * t * (3.0 - 2.0 * t);
                    const double wphi = wt * w * 6.0 * t * (1.0 - t);
                    const double t0 = sub.theta_min(phi), t1 = sub.theta_max(phi);
                    if (!(t1 > t0))
                        continue;
                    const double h = (t1 - t0) / panels;
                    for (int q = 0; q < panels; ++q)
                        for (int b = 0; b < order; ++b)
                        {
                            const double th = t0 + h * (q + 0.5 * (gl.nodes[b] + 1.0));
                            r.theta.push_back(th);
                            r.phi.push_back(phi);
                            r.weight.push_back(wphi * gl.weights[b] * 0.5 * h * std::sin(th));
                        }
                }
        }
    }
    return r;
}

Eigen::MatrixXd joint_level(const CustomJoint &spectrum, const CellGrid &rx, const CellGrid &tx, int level, int order)
{
    std::vector<CellRule> rr(rx.cells.size()), rs(tx.cells.size());
    for (std::size_t i = 0; i < rr.size(); ++i)
        rr[i] = cell_rule(rx.regions[i], level, order);
    for (std::size_t j = 0; j < rs.size(); ++j)
        rs[j] = cell_rule(tx.regions[j], level, order);

    Eigen::MatrixXd m(rx.size(), tx.size());
    parallel_for_indexed(rx.size(),
                         [&](int i)
                         {
                             const CellRule &a = rr[i];
                             for (int j = 0; j < tx.size(); ++j)
                             {
                                 const CellRule &b = rs[j];
                                 double s = 0.0;
                                 for (std::size_t u = 0; u < a.weight.size(); ++u)
                                 {
                                     double inner = 0.0;
                                     for (std::size_t v = 0; v < b.weight.size(); ++v)
                                         inner += b.weight[v] * spectrum.density(a.theta[u], a.phi[u], b.theta[v], b.phi[v]);
                                     s += a.weight[u] * inner;
                                 }
                                 m(i, j) = s;
                             }
                         });
    return m;
}
} // namespace

CouplingMatrix coupling_variances_joint(const CustomJoint &spectrum, const CellGrid &rx, const CellGrid &tx,
                                        const SpectraOptions &opt)
{
    if (!spectrum.density)
        throw std::invalid_argument("coupling_variances_joint: empty density");
    Eigen::MatrixXd prev = joint_level(spectrum, rx, tx, 0, opt.joint_order);
    double deviation = 0.0;
    for (int level = 1; level <= opt.joint_max_level; ++level)
    {
        Eigen::MatrixXd cur = joint_level(spectrum, rx, tx, level, opt.joint_order);
        const double floor = 1e-14 * std::abs(cur.sum());
        deviation = 0.0;
        bool ok = cur.allFinite();
        for (Eigen::Index k = 0; k < cur.size(); ++k)
        {
            const double d = std::abs(cur(k) - prev(k));
            deviation = std::max(deviation, d / std::max(std::abs(cur(k)), floor));
            if (d > opt.rel_tol * std::abs(cur(k)) + floor)
                ok = false;
        }
        prev = std::move(cur);
        if (ok)
        {
            const double total = prev.sum();
            if (!(total > 0.0) || (prev.array() < 0.0).any())
                throw NumericalError("coupling_variances_joint: joint factor has no nonnegative support");
            CouplingMatrix m;
            m.values = prev / total;
            m.receive_cells = rx.cells;
            m.source_cells = tx.cells;
            return m;
        }
    }
    throw QuadratureError("coupling_variances_joint: 4D rule did not converge at the maximum level", prev.sum(),
                          deviation);
}

// ------------------------------------------------------------------------

static std::vector<Eigen::Index> greedy_order(const double *v, Eigen::Index n)
{
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [v](Eigen::Index a, Eigen::Index b) { return v[a] > v[b]; });
    return order;
}

static std::vector<bool> greedy_select(const double *v, Eigen::Index n, double fraction, double &captured)
{
    if (!(fraction > 0.0))
        throw std::invalid_argument("significant set: fraction must be positive");
    std::vector<bool> pick(static_cast<std::size_t>(n), false);
    double total = 0.0;
    for (Eigen::Index k = 0; k < n; ++k)
        total += v[k];
    captured = 0.0;
    if (!(total > 0.0))
        return pick;
    const double target = fraction * total;
    for (Eigen::Index k : greedy_order(v, n))
    {
        if (!(v[k] > 0.0))
            break;
        if (fraction < 1.0 && captured >= target)
            break;
        pick[k] = true;
        captured += v[k];
    }
    captured /= total;
    return pick;
}

SignificantSet significant_set(const CouplingMatrix &matrix, double fraction)
{
    SignificantSet s;
    const Eigen::MatrixXd &m = matrix.values;
    const auto pick = greedy_select(m.data(), m.size(), fraction, s.captured);
    s.mask.setConstant(m.rows(), m.cols(), false);
    for (Eigen::Index k = 0; k < m.size(); ++k)
        if (pick[k])
            s.mask(k) = true, ++s.selected;
    s.n_r = static_cast<int>(s.mask.rowwise().any().count());
    s.n_s = static_cast<int>(s.mask.colwise().any().count());
    return s;
}

std::vector<bool> significant_mask(const Eigen::VectorXd &variances, double fraction)
{
    double captured = 0.0;
    return greedy_select(variances.data(), variances.size(), fraction, captured);
}

int significant_count(const Eigen::VectorXd &variances, double fraction)
{
    const auto pick = significant_mask(variances, fraction);
    return static_cast<int>(std::count(pick.begin(), pick.end(), true));
}

std::vector<int> significant_counts_per_cluster(const VmfMixture &mixture, const CellGrid &grid, double fraction,
                                                const SpectraOptions &opt)
{
    mixture.validate();
    std::vector<int> out;
    for (const auto &c : mixture.clusters)
    {
        VmfCluster one = c;
        one.weight = 1.0;
        out.push_back(significant_count(receive_variances(VmfMixture{{one}}, grid, opt), fraction));
    }
    return out;
}

} // namespace holomimo
