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

#ifndef HOLOMIMO_SPECTRA_HPP
#define HOLOMIMO_SPECTRA_HPP

#include "holomimo/geometry.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

namespace holomimo
{

// ------------------------------------------------------------------------
// Spectral factors A^2(theta, phi) on the upper hemisphere

struct VmfCluster
{
    double weight = 1.0;
    double mu_theta = 0.0; // modal elevation [rad]
    double mu_phi = 0.0;   // modal azimuth [rad]
    double alpha = 0.0;    // concentration, >= 0
};

// Uniform angular box theta in [theta_lo, theta_hi], phi in [phi_lo, phi_hi] (radians, 0 <= phi_lo < phi_hi <= 2 pi).
struct AngularBox
{
    double theta_lo = 0.0;
    double theta_hi = 0.0;
    double phi_lo = 0.0;
    double phi_hi = 0.0;
};

struct Isotropic
{
};

// A^2 = number of boxes containing the direction
struct ClusterUniform
{
    std::vector<AngularBox> boxes;
};

struct VmfMixture
{
    std::vector<VmfCluster> clusters;
    void validate() const; // weights >= 0 summing to 1, alpha >= 0
};

struct CustomSeparable
{
    std::function<double(double theta, double phi)> density;
};

struct CustomJoint
{
    std::function<double(double theta_r, double phi_r, double theta_s, double phi_s)> density;
};

using SpectralFactor = std::variant<Isotropic, ClusterUniform, VmfMixture, CustomSeparable, CustomJoint>;

// Mean resultant length coth(alpha) - 1/alpha of a 3D vMF distribution.
double mean_resultant_length(double alpha);

// Relation between circular variance nu^2 and the mean resultant length A.
enum class CircularVarianceConvention
{
    kOneMinusLengthSquared, // nu^2 = 1 - A^2 (default)
    kOneMinusLength,        // nu^2 = 1 - A
};

// Concentration alpha for a circular variance in (0, 1), by bisection.
double concentration_from_circular_variance(
    double nu2, CircularVarianceConvention convention = CircularVarianceConvention::kOneMinusLengthSquared);

// c(alpha) exp(alpha <u, mu>) with c(alpha) = alpha / (4 pi sinh alpha), evaluated in the log domain.
double vmf_density(double theta, double phi, const VmfCluster &cluster);

// Weighted mixture of vmf_density
double vmf_mixture_density(double theta, double phi, const VmfMixture &mixture);

// Point evaluation of a separable factor. Throws std::invalid_argument for CustomJoint.
double evaluate(const SpectralFactor &factor, double theta, double phi);

// ------------------------------------------------------------------------
// Coupling variances

// Cells of one array together with their integration regions.
struct CellGrid
{
    PlanarArray array;
    std::vector<WavenumberCell> cells;
    std::vector<AngularRegion> regions;

    static CellGrid build(const PlanarArray &array);
    int size() const { return static_cast<int>(cells.size()); }
    // Position of a cell index in 'cells', or -1.
    int find(CellIndex index) const;
};

struct SpectraOptions
{
    double rel_tol = 1e-6;
    int joint_order = 8;      // Gauss-Legendre points per panel for the 4D rule
    int joint_max_level = 4;  // panel doublings before giving up
};

// Unnormalized integral of A^2 sin(theta) over one region.
double region_power(const SpectralFactor &factor, const AngularRegion &region, const SpectraOptions &opt = {});

// Per-cell integrals of A^2 sin(theta), normalized to unit sum.
// Throws NumericalError when the spectrum carries no power on the hemisphere.
Eigen::VectorXd receive_variances(const SpectralFactor &factor, const CellGrid &grid, const SpectraOptions &opt = {});

struct CouplingMatrix
{
    Eigen::MatrixXd values; // n_r x n_s, rows follow receive_cells
    std::vector<WavenumberCell> receive_cells;
    std::vector<WavenumberCell> source_cells;
    std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> separable; // (sigma_r^2, sigma_s^2)

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
    double total() const { return values.sum(); }

    // Marginals; equal to the separable factors when present.
    Eigen::VectorXd receive_marginal() const { return values.rowwise().sum(); }
    Eigen::VectorXd source_marginal() const { return values.colwise().sum().transpose(); }

    // Outer product of two unit-sum vectors.
    static CouplingMatrix from_marginals(const Eigen::VectorXd &sigma_r2, const Eigen::VectorXd &sigma_s2);
};

// Separable model A^2 = A_r^2(theta_r, phi_r) A_s^2(theta_s, phi_s).
CouplingMatrix coupling_variances(const SpectralFactor &receive, const SpectralFactor &source, const CellGrid &rx,
                                  const CellGrid &tx, const SpectraOptions &opt = {});

// Same factor on both ends, or the 4D joint rule when 'spectrum' is CustomJoint.
CouplingMatrix coupling_variances(const SpectralFactor &spectrum, const CellGrid &rx, const CellGrid &tx,
                                  const SpectraOptions &opt = {});

// Tensor product of per-cell 2D rules, refined until every entry changes by
// less than rel_tol between levels. Throws QuadratureError at joint_max_level.
CouplingMatrix coupling_variances_joint(const CustomJoint &spectrum, const CellGrid &rx, const CellGrid &tx,
                                        const SpectraOptions &opt = {});

struct SignificantSet
{
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> mask;
    int n_r = 0;       // rows with a selected entry
    int n_s = 0;       // columns with a selected entry
    int selected = 0;  // selected entries
    double captured = 0.0;
};

// Entries in descending order (ties by column-major index) until the
// cumulative share reaches 'fraction'. fraction >= 1 selects every nonzero entry.
SignificantSet significant_set(const CouplingMatrix &matrix, double fraction = 0.997);

// Same rule on a single variance vector; returns the number of selected cells.
int significant_count(const Eigen::VectorXd &variances, double fraction = 0.997);
std::vector<bool> significant_mask(const Eigen::VectorXd &variances, double fraction = 0.997);

// Significant-set sizes of the clusters of a mixture, each cluster taken on its
// own (unit power) on the given grid. Their sum is the n' of a clustered spectrum.
std::vector<int> significant_counts_per_cluster(const VmfMixture &mixture, const CellGrid &grid,
                                                double fraction = 0.997, const SpectraOptions &opt = {});

} // namespace holomimo

#endif
