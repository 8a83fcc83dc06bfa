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

#include "holomimo/errors.hpp"
#include "holomimo/geometry.hpp"
#include "holomimo/rng.hpp"

#include <cmath>
#include <set>

using namespace holomimo;
using Catch::Approx;

TEST_CASE("PlanarArray - counts and flags")
{
    auto a = PlanarArray::square(10.0, 0.25);
    CHECK(a.count_x() == 40);
    CHECK(a.count() == 1600);
    CHECK(a.nyquist());
    CHECK(a.uniform_sampling());
    CHECK_FALSE(a.small_aperture());
    CHECK(a.count() >= 4.0 * a.length_x * a.length_y / (a.wavelength * a.wavelength));

    auto b = PlanarArray::square(3.0, 0.6);
    CHECK_FALSE(b.nyquist());
    CHECK(b.small_aperture());

    auto p = a.position(41); // second row, second column
    CHECK(p[0] == Approx(0.25));
    CHECK(p[1] == Approx(0.25));

    PlanarArray bad = a;
    bad.spacing_y = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = a;
    bad.wavelength = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("enumerate_cells - lattice counts")
{
    CHECK(enumerate_cells(PlanarArray::square(10.0, 0.5)).size() == 344);
    CHECK(enumerate_cells(PlanarArray::square(30.0, 0.5)).size() == 2928);

    const auto small = enumerate_cells(PlanarArray::square(0.4, 0.5));
    REQUIRE(small.size() == 4);
    std::set<CellIndex> got;
    for (const auto &c : small)
        got.insert(c.index);
    CHECK(got == std::set<CellIndex>{{-1, -1}, {-1, 0}, {0, -1}, {0, 0}});
}

TEST_CASE("enumerate_cells - order, representative point, rim flag")
{
    const auto cells = enumerate_cells(PlanarArray::square(10.0, 0.5));
    for (std::size_t i = 1; i < cells.size(); ++i)
    {
        const auto &p = cells[i - 1].index, &q = cells[i].index;
        CHECK((p.y < q.y || (p.y == q.y && p.x < q.x)));
    }
    int rim = 0;
    for (const auto &c : cells)
    {
        const auto r = c.representative_point();
        CHECK(r[0] * r[0] + r[1] * r[1] < 1.0);
        CHECK(r[0] >= c.x_lo);
        CHECK(r[0] <= c.x_hi);
        rim += c.touches_rim() ? 1 : 0;
    }
    CHECK(rim > 0);
    CHECK(rim < 344);
}

TEST_CASE("enumerate_cells - tiling of the disk")
{
    const auto a = PlanarArray::square(7.0, 0.5);
    const auto cells = enumerate_cells(a);
    for (std::uint64_t k = 0; k < 20000; ++k)
    {
        const double x = 2.0 * uniform_at(11, 2 * k) - 1.0, y = 2.0 * uniform_at(11, 2 * k + 1) - 1.0;
        if (x * x + y * y >= 1.0)
            continue;
        int hits = 0;
        for (const auto &c : cells)
            hits += (x > c.x_lo && x < c.x_hi && y > c.y_lo && y < c.y_hi) ? 1 : 0;
        CHECK(hits == 1);
    }
}

TEST_CASE("count_asymptotic - ceiling of the disk area")
{
    CHECK(count_asymptotic(PlanarArray::square(10.0, 0.5)) == 315);
    CHECK(count_asymptotic(PlanarArray::square(30.0, 0.5)) == 2828);

    // perimeter-order excess: the relative excess halves when the aperture doubles
    double prev = 0.0;
    for (double l : {10.0, 20.0, 40.0, 80.0})
    {
        const auto a = PlanarArray::square(l, 0.5);
        const double n = static_cast<double>(enumerate_cells(a).size());
        const double asym = static_cast<double>(count_asymptotic(a));
        CHECK(n >= asym);
        const double excess = (n - asym) / asym;
        if (prev > 0.0)
            CHECK(excess == Approx(prev / 2.0).epsilon(0.25));
        prev = excess;
    }
}

TEST_CASE("gamma - dispersion relation")
{
    const double k = 2.0 * kPi;
    CHECK(gamma(0.0, 0.0, k) == k);
    CHECK(gamma(k, 0.0, k) == 0.0);
    CHECK(gamma(0.6 * k, 0.8 * k, k) == Approx(0.0).margin(1e-6));
    CHECK_THROWS_AS(gamma(0.8 * k, 0.8 * k, k), EvanescentWaveError);
    double prev = k;
    for (int i = 1; i <= 10; ++i)
    {
        const double g = gamma(0.07 * i * k, 0.05 * i * k, k);
        CHECK(g < prev);
        prev = g;
    }
}

TEST_CASE("angular_region - origin cell breakpoints")
{
    const auto a = PlanarArray::square(10.0, 0.5);
    const auto cells = enumerate_cells(a);
    const WavenumberCell *c00 = nullptr;
    for (const auto &c : cells)
        if (c.index == CellIndex{0, 0})
            c00 = &c;
    REQUIRE(c00 != nullptr);
    const auto r = angular_region(*c00);
    REQUIRE(r.pieces.size() == 2); // the middle sub-region has zero measure
    CHECK(r.pieces[0].phi_lo == Approx(0.0).margin(1e-15));
    CHECK(r.pieces[0].phi_hi == Approx(kPi / 4));
    CHECK(r.pieces[1].phi_lo == Approx(kPi / 4));
    CHECK(r.pieces[1].phi_hi == Approx(kPi / 2));
    CHECK(r.pieces[0].theta_min(0.3) == 0.0);
    CHECK(r.pieces[0].theta_max(0.3) == Approx(std::asin(0.1 / std::cos(0.3))));
    CHECK(r.pieces[1].theta_max(1.2) == Approx(std::asin(0.1 / std::sin(1.2))));
}

TEST_CASE("angular_region - interior cell never clamps")
{
    const auto r = angular_region(0.2, 0.3, 0.3, 0.4); // cell (2, 3) at L = 10 lambda
    REQUIRE(r.pieces.size() == 3);
    for (const auto &p : r.pieces)
        for (int k = 0; k <= 200; ++k)
        {
            const double phi = p.phi_lo + (p.phi_hi - p.phi_lo) * k / 200.0;
            CHECK(p.upper.radius(p.canonical_phi(phi)) < 1.0);
            CHECK(p.theta_min(phi) <= p.theta_max(phi) + 1e-12);
        }
    // breakpoints of the first-orthant construction
    CHECK(r.pieces[0].phi_lo == Approx(std::atan2(0.3, 0.3)));
    CHECK(r.pieces[2].phi_hi == Approx(std::atan2(0.4, 0.2)));
}

TEST_CASE("angular_region - bounds and ordering in every orthant")
{
    for (const auto &c : enumerate_cells(PlanarArray::square(6.3, 0.5)))
    {
        const auto r = angular_region(c);
        REQUIRE_FALSE(r.pieces.empty());
        for (std::size_t i = 0; i < r.pieces.size(); ++i)
        {
            const auto &p = r.pieces[i];
            CHECK(p.phi_lo < p.phi_hi);
            CHECK(p.phi_lo >= 0.0);
            CHECK(p.phi_hi <= 2.0 * kPi + 1e-12);
            if (i > 0)
                CHECK(r.pieces[i - 1].phi_hi <= p.phi_lo + 1e-12);
            const double q0 = (p.orthant - 1) * kPi / 2;
            CHECK(p.phi_lo >= q0 - 1e-12);
            CHECK(p.phi_hi <= q0 + kPi / 2 + 1e-12);
            for (int k = 0; k <= 16; ++k)
            {
                const double phi = p.phi_lo + (p.phi_hi - p.phi_lo) * k / 16.0;
                CHECK(p.theta_min(phi) >= 0.0);
                CHECK(p.theta_min(phi) <= p.theta_max(phi) + 1e-12);
                CHECK(p.theta_max(phi) <= kPi / 2);
            }
        }
    }
}

TEST_CASE("angular_region - membership matches the projected cell")
{
    const auto cells = enumerate_cells(PlanarArray::square(5.0, 0.5));
    std::vector<AngularRegion> regions;
    for (const auto &c : cells)
        regions.push_back(angular_region(c));
    int checked = 0;
    for (std::uint64_t k = 0; k < 100000; ++k)
    {
        // uniform on the upper hemisphere: cos(theta) uniform
        const double ct = uniform_at(5, 2 * k), phi = 2.0 * kPi * uniform_at(5, 2 * k + 1);
        const double th = std::acos(ct), st = std::sin(th);
        const double x = st * std::cos(phi), y = st * std::sin(phi);
        const std::size_t j = k % cells.size();
        const auto &c = cells[j];
        const bool in_cell = x >= c.x_lo && x <= c.x_hi && y >= c.y_lo && y <= c.y_hi;
        // skip directions within rounding distance of a cell edge
        const double edge = std::min({std::abs(x - c.x_lo), std::abs(x - c.x_hi), std::abs(y - c.y_lo), std::abs(y - c.y_hi)});
        if (edge < 1e-12)
            continue;
        CHECK(regions[j].contains(th, phi) == in_cell);
        ++checked;
    }
    CHECK(checked > 99000);

    // a direction near the modal region of a large cell is found in exactly one region
    for (std::uint64_t k = 0; k < 2000; ++k)
    {
        const double ct = uniform_at(9, 2 * k), phi = 2.0 * kPi * uniform_at(9, 2 * k + 1);
        int hits = 0;
        for (const auto &r : regions)
            hits += r.contains(std::acos(ct), phi) ? 1 : 0;
        CHECK(hits == 1);
    }
}

TEST_CASE("angular_region - axis-straddling rectangles are split")
{
    const auto r = angular_region(-0.05, 0.05, -0.05, 0.05);
    std::set<int> orthants;
    for (const auto &p : r.pieces)
        orthants.insert(p.orthant);
    CHECK(orthants == std::set<int>{1, 2, 3, 4});
    const double whole = solid_angle(r);
    const double parts = solid_angle(angular_region(0.0, 0.05, 0.0, 0.05)) +
                         solid_angle(angular_region(-0.05, 0.0, 0.0, 0.05)) +
                         solid_angle(angular_region(-0.05, 0.0, -0.05, 0.0)) +
                         solid_angle(angular_region(0.0, 0.05, -0.05, 0.0));
    CHECK(whole == Approx(parts).epsilon(1e-10));
    CHECK(whole == Approx(4.0 * solid_angle(angular_region(0.0, 0.05, 0.0, 0.05))).epsilon(1e-10));

    CHECK_THROWS_AS(angular_region(1.0, 1.1, 0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(angular_region(0.8, 0.9, 0.6, 0.7), std::invalid_argument);
}

TEST_CASE("solid_angle - hemisphere closure")
{
    for (double l : {0.4, 4.0, 10.0, 30.0})
    {
        double s = 0.0;
        for (const auto &c : enumerate_cells(PlanarArray::square(l, 0.5)))
            s += solid_angle(angular_region(c));
        CHECK(std::abs(s - 2.0 * kPi) <= 1e-6);
    }
    PlanarArray rect;
    rect.length_x = 7.3;
    rect.length_y = 4.1;
    double s = 0.0;
    for (const auto &c : enumerate_cells(rect))
    {
        const double w = solid_angle(angular_region(c));
        CHECK(w > 0.0);
        s += w;
    }
    CHECK(std::abs(s - 2.0 * kPi) <= 1e-6);
}

TEST_CASE("solid_angle - frozen reference values")
{
    // integral of dx dy / sqrt(1 - x^2 - y^2) over cell and disk, evaluated
    // independently in Cartesian form to 20 digits
    struct Ref
    {
        int lx, ly;
        double omega;
    };
    const Ref refs[] = {{0, 0, 0.010033568832859522576},
                        {2, 3, 0.011092216481183392631},
                        {9, -5, 0.0046097818261186828058},
                        {-10, -1, 0.044754737761829438295},
                        {-4, 7, 0.018027583358649834321}};
    for (const auto &r : refs)
    {
        const double w = solid_angle(angular_region(r.lx * 0.1, (r.lx + 1) * 0.1, r.ly * 0.1, (r.ly + 1) * 0.1));
        CHECK(w == Approx(r.omega).epsilon(1e-9));
    }
}

TEST_CASE("solid_angle - Monte Carlo membership oracle, origin cell")
{
    const auto r = angular_region(0.0, 0.1, 0.0, 0.1);
    const std::uint64_t n = 10000000;
    std::uint64_t hits = 0;
    for (std::uint64_t k = 0; k < n; ++k)
    {
        // direction uniform on the hemisphere; projection (sin t cos p, sin t sin p)
        const double ct = uniform_at(2024, 2 * k), phi = 2.0 * kPi * uniform_at(2024, 2 * k + 1);
        const double st = std::sqrt(1.0 - ct * ct);
        const double x = st * std::cos(phi), y = st * std::sin(phi);
        hits += (x >= 0.0 && x <= 0.1 && y >= 0.0 && y <= 0.1) ? 1 : 0;
    }
    const double mc = 2.0 * kPi * static_cast<double>(hits) / static_cast<double>(n);
    // relative standard error of the hit fraction is about 1e-2 at this sample size
    CHECK(solid_angle(r) == Approx(mc).epsilon(0.04));
    CHECK(solid_angle(r) == Approx(0.010033568832859522576).epsilon(1e-9));
}

TEST_CASE("solid_angle - reflection symmetry")
{
    const auto a = PlanarArray::square(10.0, 0.5);
    for (const auto &c : enumerate_cells(a))
    {
        const int mx = -c.index.x - 1;
        const double w1 = solid_angle(angular_region(c));
        const double w2 = solid_angle(angular_region(mx * 0.1, (mx + 1) * 0.1, c.y_lo, c.y_hi));
        CHECK(w1 == Approx(w2).epsilon(1e-9));
    }
}

TEST_CASE("fraunhofer_distance - reference apertures")
{
    const double c0 = 299792458.0;
    CHECK(fraunhofer_distance(1.0, c0 / 3e9) == Approx(20.0).margin(0.1));
    CHECK(fraunhofer_distance(0.5, c0 / 28e9) == Approx(46.7).margin(0.05));
    CHECK(fraunhofer_distance(0.0, 0.1) == 0.0);
}
