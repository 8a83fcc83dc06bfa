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

#ifndef HOLOMIMO_GEOMETRY_HPP
#define HOLOMIMO_GEOMETRY_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <numbers>
#include <vector>

namespace holomimo
{

inline constexpr double kPi = std::numbers::pi;

// Uniform rectangular antenna grid lying in the plane z = z_plane.
// All lengths are in meters. Antenna p_x + N_x * p_y sits at (p_x * spacing_x, p_y * spacing_y).
struct PlanarArray
{
    double length_x = 1.0;
    double length_y = 1.0;
    double spacing_x = 0.5;
    double spacing_y = 0.5;
    double z_plane = 0.0;
    double wavelength = 1.0;

    // Square aperture with side and spacing given in wavelengths.
    static PlanarArray square(double side_in_wavelengths, double spacing_in_wavelengths,
                              double wavelength = 1.0, double z_in_wavelengths = 0.0);

    // Throws std::invalid_argument on non-positive dimensions.
    void validate() const;

    int count_x() const;
    int count_y() const;
    int count() const { return count_x() * count_y(); }

    double wavenumber() const { return 2.0 * kPi / wavelength; }

    // spacing <= lambda/2 on both axes
    bool nyquist() const;

    // min(L_x, L_y) / lambda < 4: the plane-wave series is a coarse approximation
    bool small_aperture() const;

    // The grid tiles the aperture exactly (N * spacing == L on both axes).
    bool uniform_sampling() const;

    std::array<double, 2> position(int antenna) const;
};

struct CellIndex
{
    int x = 0;
    int y = 0;
    auto operator<=>(const CellIndex &) const = default;
};

// Spectral cell [x_lo, x_hi] x [y_lo, y_hi] in normalized cosine-direction
// coordinates (k_x / kappa, k_y / kappa).
struct WavenumberCell
{
    CellIndex index;
    double x_lo = 0.0;
    double x_hi = 0.0;
    double y_lo = 0.0;
    double y_hi = 0.0;

    // Point of the closed cell nearest to the origin.
    std::array<double, 2> representative_point() const;
    bool touches_rim() const; // far corner outside the unit disk
};

// Every cell whose rectangle overlaps the open unit disk, ordered by (y, x).
std::vector<WavenumberCell> enumerate_cells(const PlanarArray &array);

// ceil(pi * L_x * L_y / lambda^2)
std::int64_t count_asymptotic(const PlanarArray &array);

// Dispersion relation sqrt(kappa^2 - kx^2 - ky^2). Throws EvanescentWaveError
// outside the disk of radius kappa.
double gamma(double kx, double ky, double kappa);

// A theta bound of the form arcsin(min(1, offset / cos(phi))) (vertical edge)
// or arcsin(min(1, offset / sin(phi))) (horizontal edge), written in the
// first-orthant azimuth of its sub-region.
struct ThetaBound
{
    enum class Edge : std::uint8_t
    {
        kVertical,
        kHorizontal
    };

    Edge edge = Edge::kVertical;
    double offset = 0.0; // >= 0

    // Clamped radius min(1, offset / trig(phi)) in the cosine-direction plane.
    double radius(double canonical_phi) const;
    double theta(double canonical_phi) const;
    // Canonical azimuth at which the ray reaches the unit circle on this edge; < 0 if never.
    double saturation_phi() const;
};

struct AngularSubRegion
{
    double phi_lo = 0.0;
    double phi_hi = 0.0;
    ThetaBound lower;
    ThetaBound upper;
    int orthant = 1; // 1..4, counter-clockwise from +x

    double canonical_phi(double phi) const;
    double theta_min(double phi) const { return lower.theta(canonical_phi(phi)); }
    double theta_max(double phi) const { return upper.theta(canonical_phi(phi)); }
    double cos_theta_min(double phi) const;
    double cos_theta_max(double phi) const;

    // Sorted azimuths (phi_lo, interior kinks..., phi_hi); the theta bounds are
    // smooth between consecutive entries.
    std::vector<double> smooth_pieces() const;
};

// Spherical-coordinate preimage of a cell: union of at most three sub-regions
// per orthant, each bounded by a phi interval and theta_min(phi) <= theta_max(phi).
struct AngularRegion
{
    std::vector<AngularSubRegion> pieces;

    // True when (theta, phi) lies inside one of the sub-regions.
    bool contains(double theta, double phi) const;
};

// Integration region of a cell. Throws std::invalid_argument if the cell does
// not overlap the unit disk.
AngularRegion angular_region(const WavenumberCell &cell);

// Same construction for an arbitrary axis-aligned rectangle; rectangles
// straddling an axis are split per orthant.
AngularRegion angular_region(double x_lo, double x_hi, double y_lo, double y_hi);

// Solid angle of the region in steradians (adaptive quadrature in phi, closed form in theta).
double solid_angle(const AngularRegion &region, double rel_tol = 1e-8);

// 2 L^2 / lambda
double fraunhofer_distance(double aperture, double wavelength);

} // namespace holomimo

#endif
