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

#include "catch_amalgamated.hpp"

#include "holomimo/capacity.hpp"
#include "holomimo/errors.hpp"
#include "holomimo/rng.hpp"

#include <cmath>

using namespace holomimo;
using Catch::Approx;

namespace
{
CouplingMatrix uniform(int nr, int ns)
{
    return CouplingMatrix::from_marginals(Eigen::VectorXd::Constant(nr, 1.0 / nr), Eigen::VectorXd::Constant(ns, 1.0 / ns));
}

CouplingMatrix skewed(int nr, int ns)
{
    Eigen::VectorXd r(nr), s(ns);
    for (int i = 0; i < nr; ++i)
        r[i] = std::exp(-0.4 * i);
    for (int i = 0; i < ns; ++i)
        s[i] = std::exp(-0.7 * i);
    return CouplingMatrix::from_marginals(r / r.sum(), s / s.sum());
}

// brute-force maximum of sum log2(1 + p_i l_i) over a simplex grid
double grid_search(const Eigen::VectorXd &l, double snr, int steps)
{
    const int k = static_cast<int>(l.size());
    double best = 0.0;
    std::vector<int> c(k, 0);
    auto rec = [&](auto &&self, int i, int left) -> void
    {
        if (i == k - 1)
        {
            c[i] = left;
            double v = 0.0;
            for (int j = 0; j < k; ++j)
                v += std::log2(1.0 + snr * c[j] / steps * l[j]);
            best = std::max(best, v);
            return;
        }
        for (int m = 0; m <= left; ++m)
        {
            c[i] = m;
            self(self, i + 1, left - m);
        }
    };
    rec(rec, 0, steps);
    return best;
}
} // namespace

TEST_CASE("capacity_csir_mc - scalar Rayleigh channel")
{
    // E log2(1 + snr |h|^2) = exp(1/snr) E1(1/snr) / ln 2 at snr = 10
    const auto r = capacity_csir_mc(uniform(1, 1), 1, 1, 10.0, 40000, 1);
    CHECK(std::abs(r.mean - 2.90651480841481) < 4.0 * r.std_error);
    CHECK(r.std_error < 0.01);
    CHECK(r.trials == 40000);
    CHECK(r.snr_db == Approx(10.0));
    CHECK(r.regime == CapacityRegime::kCsirMonteCarlo);
    CHECK(to_string(r.regime) == "CSIR-MC");
}

TEST_CASE("capacity_csir_mc - determinism and monotonicity in snr")
{
    const auto s = skewed(6, 5);
    const auto a = capacity_csir_mc(s, 8, 8, 10.0, 50, 3);
    const auto b = capacity_csir_mc(s, 8, 8, 10.0, 50, 3);
    CHECK(a.samples == b.samples);
    double prev = -1.0;
    for (double db : {-10.0, 0.0, 10.0, 20.0})
    {
        const double c = capacity_csir_mc(s, 8, 8, db_to_linear(db), 50, 3).mean;
        CHECK(c > prev);
        prev = c;
    }
    CHECK(capacity_csir_mc(s, 8, 8, 0.0, 5, 3).mean == 0.0);
    CHECK_THROWS_AS(capacity_csir_mc(s, 8, 8, -1.0, 5, 3), std::invalid_argument);
    CHECK_THROWS_AS(capacity_csir_mc(s, 8, 8, 1.0, 0, 3), std::invalid_argument);
}

TEST_CASE("capacity_csit_mc - waterfilling dominates per realization")
{
    const auto s = skewed(6, 4);
    const std::vector<double> snr{0.1, 1.0, 10.0, 100.0, 1000.0};
    const auto sweep = capacity_snr_sweep(s, 16, 16, snr, 60, 11);
    for (std::size_t i = 0; i < snr.size(); ++i)
    {
        for (int t = 0; t < 60; ++t)
            CHECK(sweep.csit[i].samples[t] >= sweep.csir[i].samples[t] - 1e-12);
        // the sweep uses the same streams as the single-point estimators
        const auto one = capacity_csir_mc(s, 16, 16, snr[i], 60, 11);
        CHECK(one.mean == Approx(sweep.csir[i].mean).epsilon(1e-12));
        const auto wf = capacity_csit_mc(s, 16, 16, snr[i], 60, 11);
        CHECK(wf.mean == Approx(sweep.csit[i].mean).epsilon(1e-12));
    }
}

TEST_CASE("capacity_csit_mc - rank-one channel has unit high-snr slope")
{
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(3, 3);
    v(1, 2) = 1.0;
    CouplingMatrix m;
    m.values = v;
    const auto hi = capacity_csit_mc(m, 4, 4, db_to_linear(40.0), 200, 5).mean;
    const auto lo = capacity_csit_mc(m, 4, 4, db_to_linear(30.0), 200, 5).mean;
    CHECK((hi - lo) / std::log2(10.0) == Approx(1.0).epsilon(0.01));
}

TEST_CASE("waterfilling - closed-form examples and KKT")
{
    Eigen::VectorXd a(2);
    a << 1.0, 1.0;
    auto r = waterfilling(a, 2.0);
    CHECK(r.capacity == Approx(2.0));
    CHECK(r.mu == Approx(2.0));

    Eigen::VectorXd b(2);
    b << 2.0, 0.5;
    r = waterfilling(b, 1.0);
    CHECK(r.powers[0] == Approx(1.0));
    CHECK(r.powers[1] == 0.0);
    CHECK(r.capacity == Approx(std::log2(3.0)));

    Eigen::VectorXd c(4);
    c << 0.0, 3.0, 0.2, 1.0;
    for (double snr : {0.01, 0.5, 4.0, 100.0})
    {
        r = waterfilling(c, snr);
        CHECK(r.powers.sum() == Approx(snr).epsilon(1e-12));
        CHECK(r.powers[0] == 0.0);
        for (int i = 1; i < 4; ++i)
        {
            if (r.powers[i] > 0.0)
                CHECK(r.powers[i] + 1.0 / c[i] == Approx(r.mu).epsilon(1e-12));
            else
                CHECK(1.0 / c[i] >= r.mu * (1.0 - 1e-12));
        }
    }
    CHECK_THROWS_AS(waterfilling(Eigen::VectorXd::Zero(3), 1.0), std::invalid_argument);
    CHECK(waterfilling(c, 0.0).capacity == 0.0);
}

TEST_CASE("waterfilling - agrees with a simplex grid search")
{
    for (std::uint64_t t = 0; t < 20; ++t)
    {
        const int k = 1 + static_cast<int>(uniform_at(t, 0) * 3.0);
        Eigen::VectorXd l(k);
        for (int i = 0; i < k; ++i)
            l[i] = 0.05 + 5.0 * uniform_at(t, 1 + static_cast<std::uint64_t>(i));
        const double snr = 0.1 + 20.0 * uniform_at(t, 9);
        const double wf = waterfilling(l, snr).capacity;
        const double gs = grid_search(l, snr, 400);
        CHECK(wf >= gs - 1e-12);
        CHECK(wf - gs < 1e-3);
    }
}

TEST_CASE("capacity_statistical_csit - uniform allocation reproduces CSIR")
{
    const auto s = skewed(5, 4);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(4, 0.25);
    const auto st = capacity_statistical_csit(s, p, 9, 9, 10.0, 40, 21);
    const auto cr = capacity_csir_mc(s, 9, 9, 10.0, 40, 21);
    CHECK(st.samples == cr.samples);
    CHECK(st.regime == CapacityRegime::kStatisticalCsit);
    CHECK(capacity_statistical_csit(s, Eigen::VectorXd::Zero(4), 9, 9, 10.0, 10, 21).mean == 0.0);

    Eigen::VectorXd over(4);
    over << 0.5, 0.5, 0.1, 0.0;
    CHECK_THROWS_AS(capacity_statistical_csit(s, over, 9, 9, 10.0, 10, 21), std::invalid_argument);
    Eigen::VectorXd neg(4);
    neg << 0.5, -0.1, 0.1, 0.0;
    CHECK_THROWS_AS(capacity_statistical_csit(s, neg, 9, 9, 10.0, 10, 21), std::invalid_argument);
    CHECK_THROWS_AS(capacity_statistical_csit(s, Eigen::VectorXd::Zero(3), 9, 9, 10.0, 10, 21), std::invalid_argument);

    // putting everything on the strongest column beats uniform at low snr
    Eigen::VectorXd beam = Eigen::VectorXd::Zero(4);
    beam[0] = 1.0;
    CHECK(capacity_statistical_csit(s, beam, 9, 9, 0.01, 400, 2).mean >
          capacity_csir_mc(s, 9, 9, 0.01, 400, 2).mean);
}

TEST_CASE("log2det_identity_plus - small cases")
{
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2, 3);
    h(0, 0) = 2.0;
    h(1, 2) = std::complex<double>(0.0, 1.0);
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(3, 1.0 / 3.0);
    const double expect = std::log2(1.0 + 3.0 * 4.0 / 3.0) + std::log2(1.0 + 3.0 / 3.0);
    CHECK(log2det_identity_plus(h, p, 3.0) == Approx(expect));
    CHECK(log2det_identity_plus(h.adjoint(), Eigen::VectorXd::Constant(2, 0.5), 3.0) ==
          Approx(std::log2(1.0 + 1.5 * 4.0) + std::log2(1.0 + 1.5)));
    const Eigen::VectorXd g = gram_eigenvalues(h);
    CHECK(g[0] == Approx(4.0));
    CHECK(g[1] == Approx(1.0));
}

TEST_CASE("capacity_iid - Monte Carlo, deterministic equivalent and large-system limit")
{
    const auto mc = capacity_iid_mc(6, 4, 10.0, 400, 3);
    const auto via = capacity_csir_mc(uniform(6, 4), 6, 4, 10.0, 400, 3);
    CHECK(mc.mean == Approx(via.mean).epsilon(1e-12));
    CHECK(mc.regime == CapacityRegime::kIidBaseline);

    // square large-system limit per receive antenna
    const double limit[] = {0.83742335704257, 2.7233264657365, 5.48260686140183};
    const double snr[] = {1.0, 10.0, 100.0};
    for (int i = 0; i < 3; ++i)
        CHECK(capacity_iid_asymptotic(50, 50, snr[i]).mean / 50.0 == Approx(limit[i]).epsilon(1e-9));

    const auto a = capacity_iid_asymptotic(32, 32, 10.0);
    const auto m = capacity_iid_mc(32, 32, 10.0, 300, 8);
    CHECK(a.mean == Approx(m.mean).epsilon(0.01));
    CHECK(a.std_error == 0.0);
    CHECK(capacity_iid_asymptotic(8, 3, 0.0).mean == 0.0);
}

TEST_CASE("solve_fixed_point - residual and normalization")
{
    Eigen::VectorXd gr(5), gs(3);
    gr << 3.0, 1.0, 0.5, 0.1, 0.0;
    gs << 2.0, 1.0, 0.2;
    for (auto norm : {FixedPointNormalization::kSourceModes, FixedPointNormalization::kReceiveSourceModes})
        for (double snr : {0.01, 1.0, 1000.0})
        {
            const auto s = solve_fixed_point(gr, gs, snr, norm);
            CHECK(s.residual < 1e-9);
            CHECK(s.gamma_r > 0.0);
            CHECK(s.gamma_s > 0.0);
            const double cr = norm == FixedPointNormalization::kSourceModes ? 1.0 / 3.0 : 1.0 / 5.0;
            const double fr = cr * (gr.array() / (1.0 + snr * gr.array() * s.gamma_s)).sum();
            CHECK(fr == Approx(s.gamma_r).epsilon(1e-9));
        }
    CHECK_THROWS_AS(solve_fixed_point(Eigen::VectorXd(), gs, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(solve_fixed_point(gr, gs, 1.0, FixedPointNormalization::kSourceModes, 1e-14, 3), NumericalError);
}

TEST_CASE("capacity_asymptotic - tracks Monte Carlo on a structured channel")
{
    const auto s = skewed(24, 24);
    const auto a = capacity_asymptotic(s.separable->first, s.separable->second, 64, 64, 10.0);
    const auto m = capacity_csir_mc(s, 64, 64, 10.0, 300, 4);
    CHECK(a.mean == Approx(m.mean).epsilon(0.02));
    CHECK(a.regime == CapacityRegime::kCsirAsymptotic);
}

TEST_CASE("capacity - low-snr slope and standard error scaling")
{
    const auto s = skewed(6, 5);
    const double snr = 1e-4;
    const auto r = capacity_csir_mc(s, 10, 10, snr, 4000, 12);
    // E tr(H_a H_a^H) = N_r N_s, spread over n_s streams
    CHECK(r.mean == Approx(snr * 100.0 / 5.0 / std::log(2.0)).epsilon(0.05));

    const auto a = capacity_csir_mc(s, 10, 10, 10.0, 100, 12);
    const auto b = capacity_csir_mc(s, 10, 10, 10.0, 1600, 12);
    CHECK(a.std_error / b.std_error == Approx(4.0).epsilon(0.25));
    CHECK(linear_to_db(db_to_linear(7.0)) == Approx(7.0));
}
