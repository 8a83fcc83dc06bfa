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

#include "holomimo/geometry.hpp"
#include "holomimo/errors.hpp"
#include "holomimo/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace holomimo
{

PlanarArray PlanarArray::square(double side_in_wavelengths, double spacing_in_wavelengths, double wavelength,
                                double z_in_wavelengths)
{
    PlanarArray a;
    a.length_x = a.length_y = side_in_wavelengths * wavelength;
    a.spacing_x = a.spacing_y = spacing_in_wavelengths * wavelength;
    a.z_plane = z_in_wavelengths * wavelength;
    a.wavelength = wavelength;
    return a;
}

void PlanarArray::validate() const
{
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(length_x) || !positive(length_y))
        throw std::invalid_argument("PlanarArray: aperture lengths must be positive");
    if (!positive(spacing_x) || !positive(spacing_y))
        throw std::invalid_argument("PlanarArray: antenna spacings must be positive");
    if (!positive(wavelength))
        throw std::invalid_argument("PlanarArray: wavelength must be positive");
    if (!std::isfinite(z_plane))
        throw std::invalid_argument("PlanarArray: z_plane must be finite");
}

int PlanarArray::count_x() const { return std::max(1, static_cast<int>(std::lround(length_x / spacing_x))); }
int PlanarArray::count_y() const { return std::max(1, static_cast<int>(std::lround(length_y / spacing_y))); }

bool PlanarArray::nyquist() const
{
    const double half = 0.5 * wavelength * (1.0 + 1e-12);
    return spacing_x <= half && spacing_y <= half;
}

bool PlanarArray::small_aperture() const { return std::min(length_x, length_y) / wavelength < 4.0; }

bool PlanarArray::uniform_sampling() const
{
    return std::abs(count_x() * spacing_x - length_x) <= 1e-9 * length_x &&
           std::abs(count_y() * spacing_y - length_y) <= 1e-9 * length_y;
}

std::array<double, 2> PlanarArray::position(int antenna) const
{
    const int nx = count_x();
    return {(antenna % nx) * spacing_x, (antenna / nx) * spacing_y};
}

static double nearest_to_zero(double lo, double hi) { return std::clamp(0.0, lo, hi); }

std::array<double, 2> WavenumberCell::representative_point() const
{
    return {nearest_to_zero(x_lo, x_hi), nearest_to_zero(y_lo, y_hi)};
}

bool WavenumberCell::touches_rim() const
{
    const double fx = std::max(std::abs(x_lo), std::abs(x_hi));
    const double fy = std::max(std::abs(y_lo), std::abs(y_hi));
    return fx * fx + fy * fy > 1.0;
}

// Positive-area overlap with the unit disk: the nearest point must lie strictly inside.
static bool overlaps_disk(double x_lo, double x_hi, double y_lo, double y_hi)
{
    if (!(x_hi > x_lo) || !(y_hi > y_lo))
        return false;
    const double px = nearest_to_zero(x_lo, x_hi), py = nearest_to_zero(y_lo, y_hi);
    return px * px + py * py < 1.0;
}

std::vector<WavenumberCell> enumerate_cells(const PlanarArray &array)
{
    array.validate();
    const double wx = array.wavelength / array.length_x;
    const double wy = array.wavelength / array.length_y;
    const int mx = static_cast<int>(std::ceil(1.0 / wx)) + 1;
    const int my = static_cast<int>(std::ceil(1.0 / wy)) + 1;

    std::vector<WavenumberCell> cells;
    for (int ly = -my; ly <= my; ++ly)
        for (int lx = -mx; lx <= mx; ++lx)
        {
            WavenumberCell c;
            c.index = {lx, ly};
            c.x_lo = lx * wx, c.x_hi = (lx + 1) * wx;
            c.y_lo = ly * wy, c.y_hi = (ly + 1) * wy;
            if (overlaps_disk(c.x_lo, c.x_hi, c.y_lo, c.y_hi))
                cells.push_back(c);
        }
    return cells;
}

std::int64_t count_asymptotic(const PlanarArray &array)
{
    array.validate();
    const double v = kPi * array.length_x * array.length_y / (array.wavelength * array.wavelength);
    // guard against 1 + ulp when the product is an exact integer
    const double r = std::round(v);
    if (std::abs(v - r) <= 1e-12 * std::max(1.0, r))
        return static_cast<std::int64_t>(r);
    return static_cast<std::int64_t>(std::ceil(v));
}

double gamma(double kx, double ky, double kappa)
{
    const double k2 = kappa * kappa;
    const double r2 = kx * kx + ky * ky;
    if (r2 > k2)
    {
        if (r2 - k2 > 1e-12 * k2)
            throw EvanescentWaveError("gamma: (kx, ky) lies outside the propagating disk");
        return 0.0;
    }
    return std::sqrt(k2 - r2);
}

double fraunhofer_distance(double aperture, double wavelength) { return 2.0 * aperture * aperture / wavelength; }

// ------------------------------------------------------------------------
// Theta bounds and sub-regions

double ThetaBound::radius(double canonical_phi) const
{
    if (offset <= 0.0)
        return 0.0;
    const double den = edge == Edge::kVertical ? std::cos(canonical_phi) : std::sin(canonical_phi);
    if (den <= 0.0)
        return 1.0;
    return std::min(1.0, offset / den);
}

double ThetaBound::theta(double canonical_phi) const { return std::asin(radius(canonical_phi)); }

double ThetaBound::saturation_phi() const
{
    if (offset <= 0.0 || offset >= 1.0)
        return -1.0;
    return edge == Edge::kVertical ? std::acos(offset) : std::asin(offset);
}

double AngularSubRegion::canonical_phi(double phi) const
{
    switch (orthant)
    {
    case 2:
        return kPi - phi;
    case 3:
        return phi - kPi;
    case 4:
        return 2.0 * kPi - phi;
    default:
        return phi;
    }
}

double AngularSubRegion::cos_theta_min(double phi) const
{
    const double r = lower.radius(canonical_phi(phi));
    return std::sqrt(std::max(0.0, (1.0 - r) * (1.0 + r)));
}

double AngularSubRegion::cos_theta_max(double phi) const
{
    const double r = upper.radius(canonical_phi(phi));
    return std::sqrt(std::max(0.0, (1.0 - r) * (1.0 + r)));
}

std::vector<double> AngularSubRegion::smooth_pieces() const
{
    std::vector<double> knots{phi_lo, phi_hi};
    for (const ThetaBound *b : {&lower, &upper})
    {
        const double s = b->saturation_phi();
        if (s < 0.0)
            continue;
        const double actual = orthant == 3 ? s + kPi : canonical_phi(s); // reflections are involutions
        if (actual > phi_lo && actual < phi_hi)
            knots.push_back(actual);
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
    return knots;
}

bool AngularRegion::contains(double theta, double phi) const
{
    for (const auto &p : pieces)
        if (phi >= p.phi_lo && phi <= p.phi_hi && theta >= p.theta_min(phi) && theta <= p.theta_max(phi))
            return true;
    return false;
}

namespace
{
using Edge = ThetaBound::Edge;

// Rectangle [a,b] x [c,d] with 0 <= a < b, 0 <= c < d, mapped into 'orthant'.
void add_first_orthant(std::vector<AngularSubRegion> &out, double a, double b, double c, double d, int orthant)
{
    if (!overlaps_disk(a, b, c, d))
        return;

    const double phi1 = std::atan2(c, b);
    const double phi4 = std::atan2(d, a);
    const double q = std::atan2(d, b);
    const double p = (a == 0.0 && c == 0.0) ? q : std::atan2(c, a);
    const double phi2 = std::min(p, q), phi3 = std::max(p, q);

    struct Canonical
    {
        double lo, hi;
        ThetaBound lower, upper;
    };
    Canonical parts[3] = {
        {phi1, phi2, {Edge::kHorizontal, c}, {Edge::kVertical, b}},
        p <= q ? Canonical{phi2, phi3, {Edge::kVertical, a}, {Edge::kVertical, b}}
               : Canonical{phi2, phi3, {Edge::kHorizontal, c}, {Edge::kHorizontal, d}},
        {phi3, phi4, {Edge::kVertical, a}, {Edge::kHorizontal, d}},
    };

    for (auto &cp : parts)
    {
        // Remove azimuths where the near edge already lies beyond the unit circle.
        const double s = cp.lower.saturation_phi();
        if (cp.lower.offset >= 1.0)
            continue;
        if (s >= 0.0)
        {
            if (cp.lower.edge == Edge::kHorizontal)
                cp.lo = std::max(cp.lo, s);
            else
                cp.hi = std::min(cp.hi, s);
        }
        if (!(cp.hi > cp.lo))
            continue;

        AngularSubRegion r;
        r.lower = cp.lower, r.upper = cp.upper, r.orthant = orthant;
        switch (orthant)
        {
        case 2:
            r.phi_lo = kPi - cp.hi, r.phi_hi = kPi - cp.lo;
            break;
        case 3:
            r.phi_lo = kPi + cp.lo, r.phi_hi = kPi + cp.hi;
            break;
        case 4:
            r.phi_lo = 2.0 * kPi - cp.hi, r.phi_hi = 2.0 * kPi - cp.lo;
            break;
        default:
            r.phi_lo = cp.lo, r.phi_hi = cp.hi;
        }
        out.push_back(r);
    }
}
} // namespace

AngularRegion angular_region(double x_lo, double x_hi, double y_lo, double y_hi)
{
    if (!overlaps_disk(x_lo, x_hi, y_lo, y_hi))
        throw std::invalid_argument("angular_region: rectangle does not overlap the unit disk");

    AngularRegion region;
    // Orthants in counter-clockwise order so that azimuths come out sorted.
    if (x_hi > 0.0 && y_hi > 0.0)
        add_first_orthant(region.pieces, std::max(x_lo, 0.0), x_hi, std::max(y_lo, 0.0), y_hi, 1);
    if (x_lo < 0.0 && y_hi > 0.0)
        add_first_orthant(region.pieces, std::max(-x_hi, 0.0), -x_lo, std::max(y_lo, 0.0), y_hi, 2);
    if (x_lo < 0.0 && y_lo < 0.0)
        add_first_orthant(region.pieces, std::max(-x_hi, 0.0), -x_lo, std::max(-y_hi, 0.0), -y_lo, 3);
    if (x_hi > 0.0 && y_lo < 0.0)
        add_first_orthant(region.pieces, std::max(x_lo, 0.0), x_hi, std::max(-y_hi, 0.0), -y_lo, 4);

    std::stable_sort(region.pieces.begin(), region.pieces.end(),
                     [](const AngularSubRegion &l, const AngularSubRegion &r) { return l.phi_lo < r.phi_lo; });
    return region;
}

AngularRegion angular_region(const WavenumberCell &cell)
{
    return angular_region(cell.x_lo, cell.x_hi, cell.y_lo, cell.y_hi);
}

double solid_angle(const AngularRegion &region, double rel_tol)
{
    QuadratureOptions opt;
    opt.rel_tol = rel_tol;
    opt.abs_tol = 1e-15;
    double total = 0.0;
    for (const auto &sub : region.pieces)
    {
        const auto knots = sub.smooth_pieces();
        for (std::size_t k = 0; k + 1 < knots.size(); ++k)
            total += integrate_endpoint_graded([&](double phi) { return sub.cos_theta_min(phi) - sub.cos_theta_max(phi); },
                                        knots[k], knots[k + 1], opt);
    }
    return total;
}

} // namespace holomimo
