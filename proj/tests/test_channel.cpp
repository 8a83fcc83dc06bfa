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

#include "holomimo/channel.hpp"
#include "holomimo/rng.hpp"

#include <cmath>

using namespace holomimo;
using Catch::Approx;
using cd = std::complex<double>;

namespace
{
Eigen::MatrixXcd random_block(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed)
{
    Eigen::MatrixXcd m(rows, cols);
    fill_complex_normal(m, seed);
    return m;
}

CouplingMatrix flat_coupling(int nr, int ns)
{
    return CouplingMatrix::from_marginals(Eigen::VectorXd::Constant(nr, 1.0 / nr), Eigen::VectorXd::Constant(ns, 1.0 / ns));
}
} // namespace

TEST_CASE("rng - counter-based streams")
{
    CHECK(uniform_at(1, 0) == uniform_at(1, 0));
    CHECK(uniform_at(1, 0) != uniform_at(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    double s = 0.0, s2 = 0.0;
    const int n = 200000;
    for (int k = 0; k < n; ++k)
    {
        const double u = uniform_at(3, static_cast<std::uint64_t>(k));
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
        const cd z = complex_normal_at(3, static_cast<std::uint64_t>(k));
        s += std::norm(z);
        s2 += z.real() * z.imag();
    }
    CHECK(s / n == Approx(1.0).epsilon(0.01));
    CHECK(std::abs(s2 / n) < 0.01);

    Eigen::MatrixXcd w(3, 2);
    fill_complex_normal(w, 9, 5);
    CHECK(w(1, 1) == complex_normal_at(9, 5 + 4));
}

TEST_CASE("FourierBasis - semi-unitary at half and quarter wavelength")
{
    for (double spacing : {0.5, 0.25})
    {
        const auto a = PlanarArray::square(10.0, spacing);
        const auto basis = build_basis(a, enumerate_cells(a));
        CHECK(basis.uniform_sampling());
        CHECK(basis.modes() == 344);
        const Eigen::MatrixXcd g = basis.matrix().adjoint() * basis.matrix();
        CHECK((g - Eigen::MatrixXcd::Identity(344, 344)).norm() <= 1e-10);
    }
}

TEST_CASE("FourierBasis - FFT path matches the explicit product")
{
    for (double spacing : {0.5, 0.25, 0.2})
    {
        const auto a = PlanarArray::square(8.0, spacing);
        const auto cells = enumerate_cells(a);
        const auto fast = build_basis(a, cells, true);
        const auto slow = build_basis(a, cells, false);
        REQUIRE(fast.fast_path());
        REQUIRE_FALSE(slow.fast_path());
        const Eigen::MatrixXcd x = random_block(fast.modes(), 3, 1);
        const Eigen::MatrixXcd y = random_block(fast.antennas(), 2, 2);
        const Eigen::MatrixXcd ax = slow.apply(x);
        CHECK((fast.apply(x) - ax).norm() <= 1e-12 * ax.norm());
        const Eigen::MatrixXcd ay = slow.apply_adjoint(y);
        CHECK((fast.apply_adjoint(y) - ay).norm() <= 1e-12 * ay.norm());
        CHECK((fast.matrix() - slow.matrix()).norm() == 0.0);
    }
    // rectangular aperture
    PlanarArray r;
    r.length_x = 9.0;
    r.length_y = 5.0;
    const auto cells = enumerate_cells(r);
    const auto fast = build_basis(r, cells, true);
    REQUIRE(fast.fast_path());
    const Eigen::MatrixXcd x = random_block(fast.modes(), 1, 3);
    CHECK((fast.apply(x) - fast.matrix() * x).norm() <= 1e-12 * x.norm());
    CHECK_THROWS_AS(fast.apply(Eigen::MatrixXcd(3, 1)), std::invalid_argument);
}

TEST_CASE("migration_filter - unit modulus phases")
{
    const auto a = PlanarArray::square(4.0, 0.5);
    const auto cells = enumerate_cells(a);
    const auto f = migration_filter(cells, a, 2.5, +1);
    const auto b = migration_filter(cells, a, 2.5, -1);
    for (Eigen::Index j = 0; j < f.diagonal.size(); ++j)
    {
        CHECK(std::abs(f.diagonal[j]) == Approx(1.0));
        CHECK(std::abs(f.diagonal[j] * b.diagonal[j] - 1.0) < 1e-12);
    }
    // the origin cell propagates with gamma = kappa
    for (std::size_t j = 0; j < cells.size(); ++j)
        if (cells[j].index == CellIndex{0, 0})
            CHECK(std::abs(f.diagonal[static_cast<Eigen::Index>(j)] - std::polar(1.0, 2.0 * kPi * 2.5)) < 1e-12);
    const auto none = migration_filter(cells, a, 0.0, 1);
    CHECK((none.diagonal.array() - 1.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("assemble_spatial - singular values of H equal those of H_a")
{
    const auto ra = PlanarArray::square(6.0, 0.25), sa = PlanarArray::square(4.0, 0.5);
    const auto rc = enumerate_cells(ra), sc = enumerate_cells(sa);
    const auto br = build_basis(ra, rc), bs = build_basis(sa, sc);
    const auto sigma = flat_coupling(br.modes(), bs.modes());
    const auto fr = migration_filter(rc, ra, 3.0, -1), fs = migration_filter(sc, sa, 1.0, 1);
    for (std::uint64_t seed = 0; seed < 5; ++seed)
    {
        const auto ha = sample_angular(sigma, br.antennas(), bs.antennas(), seed);
        const auto h = assemble_spatial(ha, br, bs, fr, fs);
        CHECK(h.h.rows() == br.antennas());
        CHECK(h.h.cols() == bs.antennas());
        Eigen::JacobiSVD<Eigen::MatrixXcd> s1(ha.h), s2(h.h);
        const auto k = std::min(ha.h.rows(), ha.h.cols());
        for (Eigen::Index i = 0; i < k; ++i)
            CHECK(s2.singularValues()[i] == Approx(s1.singularValues()[i]).epsilon(1e-9));
    }
    CHECK_THROWS_AS(assemble_spatial(sample_angular(Eigen::MatrixXd::Ones(2, 2), 1), br, bs), std::invalid_argument);
}

TEST_CASE("assemble_spatial - single mode gives a rank-one plane-wave channel")
{
    const auto a = PlanarArray::square(4.0, 0.5);
    const auto cells = enumerate_cells(a);
    const auto b = build_basis(a, cells);
    AngularChannel ha;
    ha.h = Eigen::MatrixXcd::Zero(b.modes(), b.modes());
    ha.h(3, 7) = cd(2.0, -1.0);
    const auto h = assemble_spatial(ha, b, b);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h.h);
    CHECK(svd.singularValues()[0] == Approx(std::sqrt(5.0)));
    CHECK(svd.singularValues()[1] < 1e-12);
    const Eigen::MatrixXcd expect = b.matrix().col(3) * cd(2.0, -1.0) * b.matrix().col(7).adjoint();
    CHECK((h.h - expect).norm() < 1e-12);
}

TEST_CASE("sample_angular - entry variances")
{
    Eigen::MatrixXd sd(2, 3);
    sd << 1.0, 2.0, 0.0, 0.5, 3.0, 1.0;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 3);
    const int n = 20000;
    for (int t = 0; t < n; ++t)
        acc += sample_angular(sd, derive_seed(4, static_cast<std::uint64_t>(t))).h.cwiseAbs2();
    acc /= n;
    for (Eigen::Index k = 0; k < sd.size(); ++k)
        CHECK(acc(k) == Approx(sd(k) * sd(k)).margin(1e-12).epsilon(0.04));
}

TEST_CASE("correlation_matrix - unitary U and covariance trace")
{
    const auto ra = PlanarArray::square(3.0, 0.5), sa = PlanarArray::square(2.0, 0.5);
    const auto br = build_basis(ra, enumerate_cells(ra)), bs = build_basis(sa, enumerate_cells(sa));
    Eigen::VectorXd r(br.modes()), s(bs.modes());
    for (int i = 0; i < r.size(); ++i)
        r[i] = 1.0 + i;
    for (int i = 0; i < s.size(); ++i)
        s[i] = 2.0 + std::sin(i);
    r /= r.sum();
    s /= s.sum();
    const auto sigma = CouplingMatrix::from_marginals(r, s);
    const auto f = correlation_matrix(sigma, br, bs);
    const Eigen::MatrixXcd u = f.u();
    CHECK((u.adjoint() * u - Eigen::MatrixXcd::Identity(u.cols(), u.cols())).norm() < 1e-10);
    const Eigen::MatrixXcd cov = f.covariance();
    const double n = static_cast<double>(br.antennas()) * bs.antennas();
    CHECK(cov.trace().real() == Approx(n).epsilon(1e-12));
    CHECK(f.lambda().sum() == Approx(n).epsilon(1e-12));

    // Kronecker structure: R = R_s^T (x) R_r
    const auto k = kronecker_correlations(sigma, br, bs);
    const Eigen::MatrixXcd rs_t = k.r_s.transpose();
    Eigen::MatrixXcd kron(cov.rows(), cov.cols());
    for (Eigen::Index i = 0; i < rs_t.rows(); ++i)
        for (Eigen::Index j = 0; j < rs_t.cols(); ++j)
            kron.block(i * k.r_r.rows(), j * k.r_r.cols(), k.r_r.rows(), k.r_r.cols()) = rs_t(i, j) * k.r_r;
    CHECK((kron - cov).norm() < 1e-10 * cov.norm());

    const Eigen::VectorXd ev = sorted_eigenvalues(k.r_r);
    Eigen::VectorXd expect = r * br.antennas();
    std::sort(expect.data(), expect.data() + expect.size(), std::greater<>());
    for (Eigen::Index i = 0; i < expect.size(); ++i)
        CHECK(ev[i] == Approx(expect[i]).margin(1e-10));

    const Eigen::VectorXcd v = random_block(f.lambda().size(), 1, 8).col(0);
    CHECK((f.apply_u(v) - u * v).norm() < 1e-12 * v.norm());
}

TEST_CASE("generate_from_correlation - same stream as the angular path")
{
    const auto a = PlanarArray::square(3.0, 0.5);
    const auto b = build_basis(a, enumerate_cells(a));
    const auto sigma = flat_coupling(b.modes(), b.modes());
    const auto f = correlation_matrix(sigma, b, b);
    const auto h1 = generate_from_correlation(f, 17).h;
    const auto h2 = assemble_spatial(sample_angular(sigma, b.antennas(), b.antennas(), 17), b, b).h;
    CHECK((h1 - h2).norm() < 1e-12 * h2.norm());
    auto fe = f;
    CHECK_FALSE(fe.materialized());
    fe.materialize();
    REQUIRE(fe.materialized());
    const auto batch = generate_from_correlation(fe, std::vector<std::uint64_t>{17, 18});
    REQUIRE(batch.size() == 2);
    CHECK((batch[0].h - h2).norm() < 1e-12 * h2.norm());
    CHECK(batch[1].seed == 18);
    CHECK((batch[1].h - generate_from_correlation(f, 18).h).norm() < 1e-12 * batch[1].h.norm());

    // a single nonzero eigenvalue gives a rank-one channel
    Eigen::MatrixXd one = Eigen::MatrixXd::Zero(b.modes(), b.modes());
    one(1, 4) = 1.0;
    CouplingMatrix single;
    single.values = one;
    const auto fs = correlation_matrix(single, b, b);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(generate_from_correlation(fs, 5).h);
    CHECK(svd.singularValues()[1] < 1e-12 * svd.singularValues()[0]);

    const auto big = PlanarArray::square(10.0, 0.5);
    const auto bb = build_basis(big, enumerate_cells(big));
    const auto sb = flat_coupling(bb.modes(), bb.modes());
    const auto fb = correlation_matrix(sb, bb, bb);
    CHECK_THROWS_AS(fb.u(), std::length_error);
    const auto g1 = generate_from_correlation(fb, 3).h;
    const auto g2 = assemble_spatial(sample_angular(sb, bb.antennas(), bb.antennas(), 3), bb, bb).h;
    CHECK((g1 - g2).norm() < 1e-10 * g2.norm());
}

TEST_CASE("clarke_correlation - sinc kernel")
{
    CHECK(sinc(0.0) == 1.0);
    CHECK(sinc(1.0) == Approx(0.0).margin(1e-15));
    CHECK(sinc(0.5) == Approx(2.0 / kPi));
    const auto a = PlanarArray::square(2.0, 0.5);
    const auto r = clarke_correlation(a);
    CHECK(r.rows() == 16);
    CHECK(r(0, 1) == Approx(0.0).margin(1e-15));      // lambda/2 apart
    CHECK(r(0, 5) == Approx(sinc(std::sqrt(2.0))));     // diagonal neighbour
    CHECK(r.trace() == 16.0);
    CHECK((r - r.transpose()).norm() == 0.0);
}

TEST_CASE("lowrank_discard_fraction - edge cases")
{
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(4, 4);
    d.diagonal() << 4.0, 3.0, 2.0, 1.0;
    CHECK(lowrank_discard_fraction(d, 4) == 0.0);
    CHECK(lowrank_discard_fraction(d, 10) == 0.0);
    CHECK(lowrank_discard_fraction(d, 2) == Approx(0.3));
    CHECK(lowrank_discard_fraction(d, 0) == Approx(1.0));
    const Eigen::MatrixXcd c = d.cast<cd>();
    CHECK(lowrank_discard_fraction(c, 1) == Approx(0.6));
}

TEST_CASE("estimate_variances - recovery and convergence rate")
{
    const auto a = PlanarArray::square(3.0, 0.5);
    const auto b = build_basis(a, enumerate_cells(a));
    const int n = b.modes();

    // single active mode: every realization estimates it exactly up to its magnitude
    Eigen::MatrixXd one = Eigen::MatrixXd::Zero(n, n);
    one(2, 5) = 1.0;
    AngularChannel fixed;
    fixed.h = Eigen::MatrixXcd::Zero(n, n);
    fixed.h(2, 5) = cd(0.0, std::sqrt(static_cast<double>(b.antennas()) * b.antennas()));
    const auto h1 = assemble_spatial(fixed, b, b).h;
    const auto e1 = estimate_variances([&](int) { return h1; }, b, b, 3);
    CHECK(e1.values(2, 5) == Approx(1.0).epsilon(1e-12));
    CHECK(e1.values.sum() == Approx(1.0).epsilon(1e-12));

    const auto sigma = flat_coupling(n, n);
    auto channel = [&](int t) { return assemble_spatial(sample_angular(sigma, b.antennas(), b.antennas(), derive_seed(2, t)), b, b).h; };
    auto err = [&](int m)
    {
        const auto e = estimate_variances(channel, b, b, m);
        return (e.values - sigma.values).norm() / sigma.values.norm();
    };
    const double e100 = err(100), e1600 = err(1600);
    CHECK(e1600 < e100);
    CHECK(e100 / e1600 == Approx(4.0).epsilon(0.25));
    CHECK_THROWS_AS(estimate_variances(channel, b, b, 0), std::invalid_argument);
}
