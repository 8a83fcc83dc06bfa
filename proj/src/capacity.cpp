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

#include "holomimo/capacity.hpp"
#include "holomimo/channel.hpp"
#include "holomimo/errors.hpp"
#include "holomimo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace holomimo
{

std::string to_string(CapacityRegime regime)
{
    switch (regime)
    {
    case CapacityRegime::kCsirMonteCarlo:
        return "CSIR-MC";
    case CapacityRegime::kCsirAsymptotic:
        return "CSIR-asymptotic";
    case CapacityRegime::kCsitWaterfilling:
        return "CSIT-waterfilling";
    case CapacityRegime::kStatisticalCsit:
        return "statistical-CSIT";
    case CapacityRegime::kIidBaseline:
        return "iid-baseline";
    }
    return "unknown";
}

double linear_to_db(double snr) { return 10.0 * std::log10(snr); }

double log2det_identity_plus(const Eigen::MatrixXcd &h, const Eigen::VectorXd &p, double snr)
{
    if (p.size() != h.cols())
        throw std::invalid_argument("log2det_identity_plus: allocation length mismatch");
    const Eigen::MatrixXcd b = h * (p.cwiseMax(0.0) * snr).cwiseSqrt().cast<std::complex<double>>().asDiagonal();
    const bool wide = b.rows() <= b.cols();
    const Eigen::Index n = wide ? b.rows() : b.cols();
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Identity(n, n);
    if (wide)
        g.selfadjointView<Eigen::Lower>().rankUpdate(b);
    else
        g.selfadjointView<Eigen::Lower>().rankUpdate(b.adjoint());
    Eigen::LLT<Eigen::MatrixXcd, Eigen::Lower> llt(g);
    if (llt.info() != Eigen::Success)
        throw NumericalError("log2det_identity_plus: Cholesky factorization failed");
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        s += std::log(llt.matrixLLT()(i, i).real());
    return 2.0 * s / std::numbers::ln2;
}

Eigen::VectorXd gram_eigenvalues(const Eigen::MatrixXcd &h)
{
    const bool wide = h.rows() <= h.cols();
    const Eigen::Index n = wide ? h.rows() : h.cols();
    Eigen::MatrixXcd g = Eigen::MatrixXcd::Zero(n, n);
    if (wide)
        g.selfadjointView<Eigen::Lower>().rankUpdate(h);
    else
        g.selfadjointView<Eigen::Lower>().rankUpdate(h.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("gram_eigenvalues: eigensolver failed");
    return es.eigenvalues().cwiseMax(0.0).reverse();
}

WaterfillingResult waterfilling(const Eigen::VectorXd &eigs, double snr)
{
    if (!(snr >= 0.0))
        throw std::invalid_argument("waterfilling: power budget must be nonnegative");
    double inv_min = std::numeric_limits<double>::infinity();
    for (double l : eigs)
        if (l > 0.0)
            inv_min = std::min(inv_min, 1.0 / l);
    if (!std::isfinite(inv_min))
        throw std::invalid_argument("waterfilling: no positive eigenvalue");

    auto used = [&](double mu)
    {
        double s = 0.0;
        for (double l : eigs)
            if (l > 0.0)
                s += std::max(0.0, mu - 1.0 / l);
        return s;
    };
    double lo = inv_min, hi = inv_min + snr;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it)
    {
        const double mid = 0.5 * (lo + hi);
        (used(mid) < snr ? lo : hi) = mid;
    }
    // exact level for the active set found by bisection, repeated until the set is stable
    double mu = 0.5 * (lo + hi);
    for (int it = 0; it < 64; ++it)
    {
        double inv_sum = 0.0;
        int active = 0;
        for (double l : eigs)
            if (l > 0.0 && 1.0 / l < mu)
                inv_sum += 1.0 / l, ++active;
        if (active == 0)
            break;
        const double next = (snr + inv_sum) / active;
        if (next == mu)
            break;
        mu = next;
    }

    WaterfillingResult r;
    r.mu = mu;
    r.powers = Eigen::VectorXd::Zero(eigs.size());
    for (Eigen::Index i = 0; i < eigs.size(); ++i)
        if (eigs[i] > 0.0 && 1.0 / eigs[i] < mu)
        {
            r.powers[i] = mu - 1.0 / eigs[i];
            r.capacity += std::log2(1.0 + r.powers[i] * eigs[i]);
        }
    return r;
}

namespace
{
CapacityResult summarize(std::vector<double> samples, double snr, CapacityRegime regime);

// Per-trial values in trial order; mean and standard error.
template <typename Trial>
CapacityResult monte_carlo(int trials, std::uint64_t seed, double snr, CapacityRegime regime, Trial &&trial)
{
    if (trials < 1)
        throw std::invalid_argument("capacity: at least one trial is required");
    if (!(snr >= 0.0))
        throw std::invalid_argument("capacity: snr must be nonnegative");
    CapacityResult r;
    r.samples.assign(static_cast<std::size_t>(trials), 0.0);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < trials; ++t)
    {
        try
        {
            r.samples[t] = trial(derive_seed(seed, static_cast<std::uint64_t>(t)));
        }
        catch (...)
        {
            errors[t] = std::current_exception();
        }
    }
    for (auto &e : errors)
        if (e)
            std::rethrow_exception(e);
    return summarize(std::move(r.samples), snr, regime);
}

CapacityResult summarize(std::vector<double> samples, double snr, CapacityRegime regime)
{
    CapacityResult r;
    r.samples = std::move(samples);
    const int trials = static_cast<int>(r.samples.size());
    double sum = 0.0;
    for (double v : r.samples)
        sum += v;
    r.mean = sum / trials;
    double ss = 0.0;
    for (double v : r.samples)
        ss += (v - r.mean) * (v - r.mean);
    r.std_error = trials > 1 ? std::sqrt(ss / (trials - 1) / trials) : 0.0;
    r.trials = trials;
    r.snr_db = snr > 0.0 ? linear_to_db(snr) : -std::numeric_limits<double>::infinity();
    r.regime = regime;
    return r;
}

Eigen::MatrixXd scaled_stddev(const CouplingMatrix &sigma2, int n_rx_antennas, int n_tx_antennas)
{
    if (n_rx_antennas < 1 || n_tx_antennas < 1)
        throw std::invalid_argument("capacity: antenna counts must be positive");
    const double scale = static_cast<double>(n_rx_antennas) * n_tx_antennas;
    return (sigma2.values.array().max(0.0) * scale).sqrt().matrix();
}
} // namespace

CapacityResult capacity_statistical_csit(const CouplingMatrix &sigma2, const Eigen::VectorXd &p, int n_rx_antennas,
                                         int n_tx_antennas, double snr, int trials, std::uint64_t seed)
{
    if (p.size() != sigma2.cols())
        throw std::invalid_argument("statistical CSIT: allocation length must equal n_s");
    if ((p.array() < 0.0).any() || !p.allFinite() || p.sum() > 1.0 + 1e-12)
        throw std::invalid_argument("statistical CSIT: allocation must be nonnegative with trace <= 1");
    const Eigen::MatrixXd sd = scaled_stddev(sigma2, n_rx_antennas, n_tx_antennas);
    auto r = monte_carlo(trials, seed, snr, CapacityRegime::kStatisticalCsit,
                         [&](std::uint64_t s) { return log2det_identity_plus(sample_angular(sd, s).h, p, snr); });
    return r;
}

CapacityResult capacity_csir_mc(const CouplingMatrix &sigma2, int n_rx_antennas, int n_tx_antennas, double snr,
                                int trials, std::uint64_t seed)
{
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(sigma2.cols(), 1.0 / static_cast<double>(sigma2.cols()));
    auto r = capacity_statistical_csit(sigma2, p, n_rx_antennas, n_tx_antennas, snr, trials, seed);
    r.regime = CapacityRegime::kCsirMonteCarlo;
    return r;
}

CapacityResult capacity_csit_mc(const CouplingMatrix &sigma2, int n_rx_antennas, int n_tx_antennas, double snr,
                                int trials, std::uint64_t seed)
{
    const Eigen::MatrixXd sd = scaled_stddev(sigma2, n_rx_antennas, n_tx_antennas);
    return monte_carlo(trials, seed, snr, CapacityRegime::kCsitWaterfilling,
                       [&](std::uint64_t s)
                       {
                           const Eigen::VectorXd eigs = gram_eigenvalues(sample_angular(sd, s).h);
                           if (!(eigs.maxCoeff() > 0.0))
                               return 0.0;
                           return waterfilling(eigs, snr).capacity;
                       });
}

SnrSweep capacity_snr_sweep(const CouplingMatrix &sigma2, int n_rx_antennas, int n_tx_antennas,
                            const std::vector<double> &snr, int trials, std::uint64_t seed)
{
    if (trials < 1)
        throw std::invalid_argument("capacity: at least one trial is required");
    for (double s : snr)
        if (!(s >= 0.0))
            throw std::invalid_argument("capacity_snr_sweep: snr must be nonnegative");
    const Eigen::MatrixXd sd = scaled_stddev(sigma2, n_rx_antennas, n_tx_antennas);
    const double n_s = static_cast<double>(sigma2.cols());
    const std::size_t k = snr.size();

    // row t: csir for every snr, then csit for every snr
    Eigen::MatrixXd values(trials, static_cast<Eigen::Index>(2 * k));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic, 1)
    for (int t = 0; t < trials; ++t)
    {
        try
        {
            const Eigen::VectorXd eigs =
                gram_eigenvalues(sample_angular(sd, derive_seed(seed, static_cast<std::uint64_t>(t))).h);
            const bool any = eigs.size() > 0 && eigs.maxCoeff() > 0.0;
            for (std::size_t i = 0; i < k; ++i)
            {
                double c = 0.0;
                for (double l : eigs)
                    c += std::log2(1.0 + snr[i] / n_s * l);
                values(t, static_cast<Eigen::Index>(i)) = c;
                values(t, static_cast<Eigen::Index>(k + i)) = any ? waterfilling(eigs, snr[i]).capacity : 0.0;
            }
        }
        catch (...)
        {
            errors[t] = std::current_exception();
        }
    }
    for (auto &e : errors)
        if (e)
            std::rethrow_exception(e);

    SnrSweep out;
    for (std::size_t i = 0; i < k; ++i)
    {
        const Eigen::VectorXd a = values.col(static_cast<Eigen::Index>(i));
        const Eigen::VectorXd b = values.col(static_cast<Eigen::Index>(k + i));
        out.csir.push_back(summarize(std::vector<double>(a.begin(), a.end()), snr[i], CapacityRegime::kCsirMonteCarlo));
        out.csit.push_back(summarize(std::vector<double>(b.begin(), b.end()), snr[i], CapacityRegime::kCsitWaterfilling));
    }
    return out;
}

CapacityResult capacity_iid_mc(int n_r, int n_s, double snr, int trials, std::uint64_t seed)
{
    if (n_r < 1 || n_s < 1)
        throw std::invalid_argument("capacity_iid_mc: dimensions must be positive");
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(n_s, 1.0 / n_s);
    return monte_carlo(trials, seed, snr, CapacityRegime::kIidBaseline,
                       [&](std::uint64_t s)
                       {
                           Eigen::MatrixXcd w(n_r, n_s);
                           fill_complex_normal(w, s);
                           return log2det_identity_plus(w, p, snr);
                       });
}

FixedPointSolution solve_fixed_point(const Eigen::VectorXd &g_r, const Eigen::VectorXd &g_s, double snr,
                                     FixedPointNormalization norm, double tol, int max_iterations)
{
    if (g_r.size() == 0 || g_s.size() == 0)
        throw std::invalid_argument("solve_fixed_point: empty gain vector");
    const double c_s = 1.0 / static_cast<double>(g_s.size());
    const double c_r = norm == FixedPointNormalization::kSourceModes ? c_s : 1.0 / static_cast<double>(g_r.size());
    auto f_r = [&](double gs) { return c_r * (g_r.array() / (1.0 + snr * g_r.array() * gs)).sum(); };
    auto f_s = [&](double gr) { return c_s * (g_s.array() / (1.0 + snr * g_s.array() * gr)).sum(); };

    FixedPointSolution s;
    double gr = 1.0, gs = 1.0;
    for (int it = 1; it <= max_iterations; ++it)
    {
        const double nr = 0.5 * gr + 0.5 * f_r(gs);
        const double ns = 0.5 * gs + 0.5 * f_s(gr);
        const bool done = std::abs(nr - gr) <= tol * std::max(std::abs(nr), 1e-300) &&
                          std::abs(ns - gs) <= tol * std::max(std::abs(ns), 1e-300);
        gr = nr, gs = ns;
        s.iterations = it;
        if (done)
        {
            s.gamma_r = gr, s.gamma_s = gs;
            s.residual = std::max(std::abs(f_r(gs) - gr) / std::max(gr, 1e-300),
                                  std::abs(f_s(gr) - gs) / std::max(gs, 1e-300));
            return s;
        }
    }
    const double res = std::max(std::abs(f_r(gs) - gr) / std::max(gr, 1e-300),
                                std::abs(f_s(gr) - gs) / std::max(gs, 1e-300));
    throw NumericalError("solve_fixed_point: no convergence after " + std::to_string(max_iterations) +
                         " iterations (residual " + std::to_string(res) + ")");
}

static CapacityResult asymptotic_from_gains(const Eigen::VectorXd &g_r, const Eigen::VectorXd &g_s, double snr,
                                            FixedPointNormalization norm, CapacityRegime regime)
{
    if (!(snr >= 0.0))
        throw std::invalid_argument("capacity_asymptotic: snr must be nonnegative");
    CapacityResult r;
    r.regime = regime;
    r.snr_db = snr > 0.0 ? linear_to_db(snr) : -std::numeric_limits<double>::infinity();
    if (snr == 0.0)
        return r;
    const FixedPointSolution fp = solve_fixed_point(g_r, g_s, snr, norm);
    const double ns = static_cast<double>(g_s.size());
    double c = 0.0;
    for (double g : g_s)
        c += std::log1p(snr * g * fp.gamma_r);
    for (double g : g_r)
        c += std::log1p(snr * g * fp.gamma_s);
    c -= ns * snr * fp.gamma_r * fp.gamma_s;
    r.mean = std::max(0.0, c / std::numbers::ln2);
    return r;
}

CapacityResult capacity_asymptotic(const Eigen::VectorXd &sigma_r2, const Eigen::VectorXd &sigma_s2, int n_rx_antennas,
                                   int n_tx_antennas, double snr, FixedPointNormalization norm)
{
    return asymptotic_from_gains(sigma_r2.cwiseMax(0.0) * n_rx_antennas, sigma_s2.cwiseMax(0.0) * n_tx_antennas, snr,
                                 norm, CapacityRegime::kCsirAsymptotic);
}

CapacityResult capacity_iid_asymptotic(int n_r, int n_s, double snr)
{
    return asymptotic_from_gains(Eigen::VectorXd::Ones(n_r), Eigen::VectorXd::Ones(n_s), snr,
                                 FixedPointNormalization::kSourceModes, CapacityRegime::kIidBaseline);
}

} // namespace holomimo
