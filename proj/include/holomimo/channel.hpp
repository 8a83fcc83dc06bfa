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

#ifndef HOLOMIMO_CHANNEL_HPP
#define HOLOMIMO_CHANNEL_HPP

#include "holomimo/geometry.hpp"
#include "holomimo/spectra.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace holomimo
{

// Semi-unitary N x n Fourier basis of one array. Column j holds
// (1/sqrt N) exp(+i 2 pi (l_x x / L_x + l_y y / L_y)) for cell j.
class FourierBasis
{
  public:
    FourierBasis() = default;
    FourierBasis(const PlanarArray &array, std::vector<WavenumberCell> cells, bool allow_fft = true);

    const Eigen::MatrixXcd &matrix() const { return phi_; }
    const PlanarArray &array() const { return array_; }
    const std::vector<WavenumberCell> &cells() const { return cells_; }
    int antennas() const { return static_cast<int>(phi_.rows()); }
    int modes() const { return static_cast<int>(phi_.cols()); }

    // N * spacing == L on both axes and spacing <= lambda/2
    bool uniform_sampling() const { return uniform_; }
    // 2D FFT is used by apply / apply_adjoint (uniform sampling, N_x, N_y >= 8)
    bool fast_path() const { return fast_; }

    // Phi * x for an n x k block
    Eigen::MatrixXcd apply(const Eigen::MatrixXcd &x) const;
    // Phi^H * y for an N x k block
    Eigen::MatrixXcd apply_adjoint(const Eigen::MatrixXcd &y) const;

  private:
    Eigen::MatrixXcd fft_apply(const Eigen::MatrixXcd &x, bool adjoint) const;

    PlanarArray array_;
    std::vector<WavenumberCell> cells_;
    Eigen::MatrixXcd phi_;
    std::vector<int> bins_; // FFT bin of each column
    bool uniform_ = false;
    bool fast_ = false;
};

FourierBasis build_basis(const PlanarArray &array, const std::vector<WavenumberCell> &cells, bool allow_fft = true);

struct MigrationFilter
{
    Eigen::VectorXcd diagonal;
};

// exp(sign i gamma z), gamma taken at each cell's representative point.
MigrationFilter migration_filter(const std::vector<WavenumberCell> &cells, const PlanarArray &array, double z,
                                 int sign);

struct AngularChannel
{
    Eigen::MatrixXcd h; // n_r x n_s
    std::uint64_t seed = 0;
};

struct SpatialChannel
{
    Eigen::MatrixXcd h; // N_r x N_s
    std::uint64_t seed = 0;
    double z_r = 0.0;
    double z_s = 0.0;
};

// [H_a]_ij = sqrt(N_r N_s sigma^2_ij) w_ij, w_ij ~ CN(0, 1) drawn from the counter stream of 'seed'.
AngularChannel sample_angular(const CouplingMatrix &sigma2, int n_rx_antennas, int n_tx_antennas, std::uint64_t seed);

// Same draw from precomputed standard deviations sqrt(N_r N_s sigma^2).
AngularChannel sample_angular(const Eigen::MatrixXd &stddev, std::uint64_t seed);

// H = Phi_r (F_r H_a F_s) Phi_s^H. Empty filters stand for identities.
SpatialChannel assemble_spatial(const AngularChannel &ha, const FourierBasis &phi_r, const FourierBasis &phi_s,
                                const MigrationFilter &filter_r = {}, const MigrationFilter &filter_s = {});

// R = U Lambda U^H with U = conj(Phi_s) kron Phi_r, so that R = E{vec(H) vec(H)^H}
// for column-major vec. Lambda = vec(N_r N_s sigma^2).
class CorrelationFactors
{
  public:
    static constexpr Eigen::Index kExplicitLimit = 4096;

    CorrelationFactors(const CouplingMatrix &sigma2, const FourierBasis &phi_r, const FourierBasis &phi_s);

    const Eigen::VectorXd &lambda() const { return lambda_; }
    const FourierBasis &phi_r() const { return *phi_r_; }
    const FourierBasis &phi_s() const { return *phi_s_; }
    Eigen::Index dimension() const { return Eigen::Index{phi_r_->antennas()} * phi_s_->antennas(); }

    // U * v without forming U
    Eigen::VectorXcd apply_u(const Eigen::VectorXcd &v) const;
    // Explicit U and R; throw std::length_error when dimension() > kExplicitLimit.
    Eigen::MatrixXcd u() const;
    Eigen::MatrixXcd covariance() const;

    // Keeps an explicit copy of U for generate_from_correlation. Same size limit as u().
    void materialize();
    bool materialized() const { return explicit_u_ != nullptr; }
    const Eigen::MatrixXcd *explicit_u() const { return explicit_u_.get(); }

  private:
    std::shared_ptr<const Eigen::MatrixXcd> explicit_u_;
    const FourierBasis *phi_r_;
    const FourierBasis *phi_s_;
    Eigen::VectorXd lambda_;
    Eigen::Index n_r_, n_s_;
};

CorrelationFactors correlation_matrix(const CouplingMatrix &sigma2, const FourierBasis &phi_r,
                                      const FourierBasis &phi_s);

// vec(H) = U Lambda^{1/2} w, with w drawn from the same stream as sample_angular.
// The product runs through the explicit U after materialize(), otherwise through
// the factored form.
SpatialChannel generate_from_correlation(const CorrelationFactors &factors, std::uint64_t seed);
// One realization per seed; the explicit product is done as a single block.
std::vector<SpatialChannel> generate_from_correlation(const CorrelationFactors &factors,
                                                      const std::vector<std::uint64_t> &seeds);

struct KroneckerCorrelations
{
    Eigen::MatrixXcd r_r; // Phi_r diag(N_r sigma_r^2) Phi_r^H
    Eigen::MatrixXcd r_s; // Phi_s diag(N_s sigma_s^2) Phi_s^H
};

// Full correlation is R_s^T kron R_r.
KroneckerCorrelations kronecker_correlations(const Eigen::VectorXd &sigma_r2, const Eigen::VectorXd &sigma_s2,
                                             const FourierBasis &phi_r, const FourierBasis &phi_s);
// Throws std::invalid_argument when sigma2 carries no separable factors.
KroneckerCorrelations kronecker_correlations(const CouplingMatrix &sigma2, const FourierBasis &phi_r,
                                             const FourierBasis &phi_s);

// Isotropic reference correlation [R]_ij = sinc(2 d_ij / lambda), normalized sinc.
Eigen::MatrixXd clarke_correlation(const PlanarArray &array);

double sinc(double x);

// Share of the eigenvalue mass beyond the n largest eigenvalues.
double lowrank_discard_fraction(const Eigen::MatrixXd &r, Eigen::Index n);
double lowrank_discard_fraction(const Eigen::MatrixXcd &r, Eigen::Index n);

// Descending eigenvalues of a Hermitian matrix
Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXcd &r);
Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd &r);

// (1/(N_r N_s)) mean over trials of |Phi_r^H H Phi_s|^2. 'channel(t)' returns
// realization t; it is called concurrently for distinct t.
CouplingMatrix estimate_variances(const std::function<Eigen::MatrixXcd(int)> &channel, const FourierBasis &phi_r,
                                  const FourierBasis &phi_s, int trials);

} // namespace holomimo

#endif
