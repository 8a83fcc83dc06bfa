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

#ifndef HOLOMIMO_CAPACITY_HPP
#define HOLOMIMO_CAPACITY_HPP

#include "holomimo/spectra.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace holomimo
{

enum class CapacityRegime
{
    kCsirMonteCarlo,
    kCsirAsymptotic,
    kCsitWaterfilling,
    kStatisticalCsit,
    kIidBaseline,
};

std::string to_string(CapacityRegime regime);

struct CapacityResult
{
    double mean = 0.0;      // bit/s/Hz
    double std_error = 0.0; // standard error of the mean; 0 for deterministic results
    int trials = 0;
    double snr_db = 0.0;
    CapacityRegime regime = CapacityRegime::kCsirMonteCarlo;
    std::vector<double> samples; // per-trial capacities in trial order (Monte Carlo regimes)
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double snr);

// log2 det(I + snr H diag(p) H^H), computed on the smaller Gram matrix by Cholesky.
double log2det_identity_plus(const Eigen::MatrixXcd &h, const Eigen::VectorXd &p, double snr);

// Descending eigenvalues of H H^H (min(rows, cols) of them).
Eigen::VectorXd gram_eigenvalues(const Eigen::MatrixXcd &h);

struct WaterfillingResult
{
    Eigen::VectorXd powers;
    double capacity = 0.0; // sum log2(mu lambda_i)^+
    double mu = 0.0;
};

// Bisection on the water level followed by the closed-form level of the final
// active set. Throws std::invalid_argument when no eigenvalue is positive.
WaterfillingResult waterfilling(const Eigen::VectorXd &eigs, double snr);

// Per-trial realization seeds are derive_seed(seed, t); all Monte Carlo
// regimes called with the same seed see the same H_a in trial t.
CapacityResult capacity_csir_mc(const CouplingMatrix &sigma2, int n_rx_antennas, int n_tx_antennas, double snr,
                                int trials, std::uint64_t seed);

CapacityResult capacity_csit_mc(const CouplingMatrix &sigma2, int n_rx_antennas, int n_tx_antennas, double snr,
                                int trials, std::uint64_t seed);

struct SnrSweep
{
    std::vector<CapacityResult> csir; // one entry per snr, in input order
    std::vector<CapacityResult> csit;
};

// CSIR and CSIT capacities over several snr values from one eigendecomposition
// of H_a H_a^H per trial; trial t uses the same realization as the functions above.
SnrSweep capacity_snr_sweep(const CouplingMatrix &sigma2, int n_rx_antennas, int n_tx_antennas,
                            const std::vector<double> &snr, int trials, std::uint64_t seed);

// Fixed diagonal allocation p (p >= 0, sum p <= 1). Throws std::invalid_argument otherwise.
CapacityResult capacity_statistical_csit(const CouplingMatrix &sigma2, const Eigen::VectorXd &p, int n_rx_antennas,
                                         int n_tx_antennas, double snr, int trials, std::uint64_t seed);

// i.i.d. CN(0, 1) channel with uniform allocation 1/n_s.
CapacityResult capacity_iid_mc(int n_r, int n_s, double snr, int trials, std::uint64_t seed);

enum class FixedPointNormalization
{
    kSourceModes,        // both sums scaled by 1/n_s
    kReceiveSourceModes, // receive sum by 1/n_r, source sum by 1/n_s
};

struct FixedPointSolution
{
    double gamma_r = 0.0;
    double gamma_s = 0.0;
    int iterations = 0;
    double residual = 0.0; // max relative mismatch of the two equations
};

// Gains g_r = N_r sigma_r^2, g_s = N_s sigma_s^2 and uniform allocation over n_s = g_s.size():
//   Gamma_r = c_r sum_i g_r,i / (1 + snr g_r,i Gamma_s),  Gamma_s = (1/n_s) sum_j g_s,j / (1 + snr g_s,j Gamma_r)
// solved by damped Picard iteration (0.5) from Gamma = 1. Throws NumericalError after max_iterations.
FixedPointSolution solve_fixed_point(const Eigen::VectorXd &g_r, const Eigen::VectorXd &g_s, double snr,
                                     FixedPointNormalization norm = FixedPointNormalization::kSourceModes,
                                     double tol = 1e-10, int max_iterations = 100000);

// Large-dimensional approximation of the CSIR capacity.
CapacityResult capacity_asymptotic(const Eigen::VectorXd &sigma_r2, const Eigen::VectorXd &sigma_s2, int n_rx_antennas,
                                   int n_tx_antennas, double snr,
                                   FixedPointNormalization norm = FixedPointNormalization::kSourceModes);

// Deterministic equivalent of the i.i.d. baseline (all gains equal to one).
CapacityResult capacity_iid_asymptotic(int n_r, int n_s, double snr);

} // namespace holomimo

#endif
