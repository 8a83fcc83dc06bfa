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

#include "holomimo/channel.hpp"
#include "holomimo/errors.hpp"
#include "holomimo/rng.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <exception>
#include <mutex>
#include <stdexcept>

namespace holomimo
{

namespace
{
using cd = std::complex<double>;

std::mutex &fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

int positive_mod(long long a, int n) { return static_cast<int>(((a % n) + n) % n); }
} // namespace

FourierBasis::FourierBasis(const PlanarArray &array, std::vector<WavenumberCell> cells, bool allow_fft)
    : array_(array), cells_(std::move(cells))
{
    array_.validate();
    const int nx = array_.count_x(), ny = array_.count_y(), n = nx * ny;
    uniform_ = array_.uniform_sampling() && array_.nyquist();
    fast_ = allow_fft && uniform_ && nx >= 8 && ny >= 8;

    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    phi_.resize(n, static_cast<Eigen::Index>(cells_.size()));
    bins_.resize(cells_.size());
    for (std::size_t j = 0; j < cells_.size(); ++j)
    {
        const int lx = cells_[j].index.x, ly = cells_[j].index.y;
        bins_[j] = positive_mod(ly, ny) * nx + positive_mod(lx, nx);
        for (int i = 0; i < n; ++i)
        {
            const int px = i % nx, py = i / nx;
            double turns;
            if (uniform_) // exact reduction of the phase to one period
                turns = static_cast<double>(positive_mod(static_cast<long long>(lx) * px, nx)) / nx +
                        static_cast<double>(positive_mod(static_cast<long long>(ly) * py, ny)) / ny;
            else
                turns = lx * px * array_.spacing_x / array_.length_x + ly * py * array_.spacing_y / array_.length_y;
            phi_(i, static_cast<Eigen::Index>(j)) = std::polar(scale, 2.0 * kPi * turns);
        }
    }
}

Eigen::MatrixXcd FourierBasis::fft_apply(const Eigen::MatrixXcd &x, bool adjoint) const
{
    const int nx = array_.count_x(), ny = array_.count_y(), n = nx * ny;
    const int k = static_cast<int>(x.cols());
    Eigen::MatrixXcd grid;
    if (adjoint)
        grid = x;
    else
    {
        grid.setZero(n, k);
        for (int c = 0; c < k; ++c)
            for (std::size_t j = 0; j < bins_.size(); ++j)
                grid(bins_[j], c) += x(static_cast<Eigen::Index>(j), c);
    }
    if (k > 0)
    {
        int dims[2] = {ny, nx};
        auto *data = reinterpret_cast<fftw_complex *>(grid.data());
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lock(fftw_planner_mutex());
            plan = fftw_plan_many_dft(2, dims, k, data, nullptr, 1, n, data, nullptr, 1, n,
                                      adjoint ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        fftw_execute(plan);
        {
            std::lock_guard<std::mutex> lock(fftw_planner_mutex());
            fftw_destroy_plan(plan);
        }
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    if (!adjoint)
        return grid * scale;
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(bins_.size()), k);
    for (int c = 0; c < k; ++c)
        for (std::size_t j = 0; j < bins_.size(); ++j)
            out(static_cast<Eigen::Index>(j), c) = grid(bins_[j], c) * scale;
    return out;
}

Eigen::MatrixXcd FourierBasis::apply(const Eigen::MatrixXcd &x) const
{
    if (x.rows() != phi_.cols())
        throw std::invalid_argument("FourierBasis::apply: dimension mismatch");
    return fast_ ? fft_apply(x, false) : Eigen::MatrixXcd(phi_ * x);
}

Eigen::MatrixXcd FourierBasis::apply_adjoint(const Eigen::MatrixXcd &y) const
{
    if (y.rows() != phi_.rows())
        throw std::invalid_argument("FourierBasis::apply_adjoint: dimension mismatch");
    return fast_ ? fft_apply(y, true) : Eigen::MatrixXcd(phi_.adjoint() * y);
}

FourierBasis build_basis(const PlanarArray &array, const std::vector<WavenumberCell> &cells, bool allow_fft)
{
    return FourierBasis(array, cells, allow_fft);
}

MigrationFilter migration_filter(const std::vector<WavenumberCell> &cells, const PlanarArray &array, double z, int sign)
{
    const double kappa = array.wavenumber();
    MigrationFilter f;
    f.diagonal.resize(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t j = 0; j < cells.size(); ++j)
    {
        const auto p = cells[j].representative_point();
        const double g = gamma(kappa * p[0], kappa * p[1], kappa);
        f.diagonal[static_cast<Eigen::Index>(j)] = std::polar(1.0, (sign >= 0 ? 1.0 : -1.0) * g * z);
    }
    return f;
}

AngularChannel sample_angular(const Eigen::MatrixXd &stddev, std::uint64_t seed)
{
    AngularChannel a;
    a.seed = seed;
    a.h.resize(stddev.rows(), stddev.cols());
    fill_complex_normal(a.h, seed);
    a.h.array() *= stddev.array().cast<cd>();
    return a;
}

AngularChannel sample_angular(const CouplingMatrix &sigma2, int n_rx_antennas, int n_tx_antennas, std::uint64_t seed)
{
    const double scale = static_cast<double>(n_rx_antennas) * n_tx_antennas;
    return sample_angular(Eigen::MatrixXd((sigma2.values.array().max(0.0) * scale).sqrt()), seed);
}

SpatialChannel assemble_spatial(const AngularChannel &ha, const FourierBasis &phi_r, const FourierBasis &phi_s,
                                const MigrationFilter &filter_r, const MigrationFilter &filter_s)
{
    if (ha.h.rows() != phi_r.modes() || ha.h.cols() != phi_s.modes())
        throw std::invalid_argument("assemble_spatial: H_a does not match the basis dimensions");
    Eigen::MatrixXcd x = ha.h;
    if (filter_r.diagonal.size() > 0)
    {
        if (filter_r.diagonal.size() != x.rows())
            throw std::invalid_argument("assemble_spatial: receive filter length mismatch");
        x = filter_r.diagonal.asDiagonal() * x;
    }
    if (filter_s.diagonal.size() > 0)
    {
        if (filter_s.diagonal.size() != x.cols())
            throw std::invalid_argument("assemble_spatial: source filter length mismatch");
        x = x * filter_s.diagonal.asDiagonal();
    }
    const Eigen::MatrixXcd y = phi_r.apply(x);                    // N_r x n_s
    const Eigen::MatrixXcd ht = phi_s.apply(y.adjoint());          // N_s x N_r
    SpatialChannel h;
    h.h = ht.adjoint();
    h.seed = ha.seed;
    h.z_r = phi_r.array().z_plane;
    h.z_s = phi_s.array().z_plane;
    return h;
}

// ------------------------------------------------------------------------

CorrelationFactors::CorrelationFactors(const CouplingMatrix &sigma2, const FourierBasis &phi_r,
                                       const FourierBasis &phi_s)
    : phi_r_(&phi_r), phi_s_(&phi_s), n_r_(sigma2.rows()), n_s_(sigma2.cols())
{
    if (n_r_ != phi_r.modes() || n_s_ != phi_s.modes())
        throw std::invalid_argument("correlation_matrix: coupling matrix does not match the bases");
    const double scale = static_cast<double>(phi_r.antennas()) * phi_s.antennas();
    lambda_ = Eigen::Map<const Eigen::VectorXd>(sigma2.values.data(), sigma2.values.size()) * scale;
}

Eigen::VectorXcd CorrelationFactors::apply_u(const Eigen::VectorXcd &v) const
{
    if (v.size() != n_r_ * n_s_)
        throw std::invalid_argument("CorrelationFactors::apply_u: length mismatch");
    const Eigen::MatrixXcd x = Eigen::Map<const Eigen::MatrixXcd>(v.data(), n_r_, n_s_);
    const Eigen::MatrixXcd y = phi_r_->apply(x);
    const Eigen::MatrixXcd h = phi_s_->apply(y.adjoint()).adjoint();
    return Eigen::Map<const Eigen::VectorXcd>(h.data(), h.size());
}

Eigen::MatrixXcd CorrelationFactors::u() const
{
    if (dimension() > kExplicitLimit)
        throw std::length_error("CorrelationFactors: N_r N_s exceeds the explicit size limit");
    const Eigen::MatrixXcd &a = phi_r_->matrix();
    const Eigen::MatrixXcd &b = phi_s_->matrix();
    const Eigen::Index nr = a.rows(), ns = b.rows();
    Eigen::MatrixXcd u(nr * ns, n_r_ * n_s_);
    for (Eigen::Index j = 0; j < n_s_; ++j)
        for (Eigen::Index s = 0; s < ns; ++s)
            u.block(s * nr, j * n_r_, nr, n_r_) = std::conj(b(s, j)) * a;
    return u;
}

Eigen::MatrixXcd CorrelationFactors::covariance() const
{
    Eigen::MatrixXcd us = u();
    us *= lambda_.cwiseMax(0.0).cwiseSqrt().cast<cd>().asDiagonal();
    Eigen::MatrixXcd r(us.rows(), us.rows());
    r.setZero();
    r.selfadjointView<Eigen::Lower>().rankUpdate(us);
    return r.selfadjointView<Eigen::Lower>();
}

CorrelationFactors correlation_matrix(const CouplingMatrix &sigma2, const FourierBasis &phi_r,
                                      const FourierBasis &phi_s)
{
    return CorrelationFactors(sigma2, phi_r, phi_s);
}

void CorrelationFactors::materialize()
{
    if (!explicit_u_)
        explicit_u_ = std::make_shared<const Eigen::MatrixXcd>(u());
}

std::vector<SpatialChannel> generate_from_correlation(const CorrelationFactors &factors,
                                                      const std::vector<std::uint64_t> &seeds)
{
    const Eigen::Index n = factors.lambda().size(), k = static_cast<Eigen::Index>(seeds.size());
    const Eigen::VectorXcd scale = factors.lambda().cwiseMax(0.0).cwiseSqrt().cast<cd>();
    Eigen::MatrixXcd v(n, k);
    for (Eigen::Index c = 0; c < k; ++c)
    {
        Eigen::MatrixXcd w(n, 1);
        fill_complex_normal(w, seeds[static_cast<std::size_t>(c)]);
        v.col(c) = scale.cwiseProduct(w.col(0));
    }
    const Eigen::Index nr = factors.phi_r().antennas(), ns = factors.phi_s().antennas();
    std::vector<SpatialChannel> out(static_cast<std::size_t>(k));
    if (const Eigen::MatrixXcd *u = factors.explicit_u())
    {
        const Eigen::MatrixXcd x = *u * v;
        for (Eigen::Index c = 0; c < k; ++c)
            out[c].h = Eigen::Map<const Eigen::MatrixXcd>(x.col(c).data(), nr, ns);
    }
    else
        for (Eigen::Index c = 0; c < k; ++c)
        {
            const Eigen::VectorXcd x = factors.apply_u(v.col(c));
            out[c].h = Eigen::Map<const Eigen::MatrixXcd>(x.data(), nr, ns);
        }
    for (Eigen::Index c = 0; c < k; ++c)
        out[c].seed = seeds[static_cast<std::size_t>(c)];
    return out;
}

SpatialChannel generate_from_correlation(const CorrelationFactors &factors, std::uint64_t seed)
{
    return std::move(generate_from_correlation(factors, std::vector<std::uint64_t>{seed}).front());
}

KroneckerCorrelations kronecker_correlations(const Eigen::VectorXd &sigma_r2, const Eigen::VectorXd &sigma_s2,
                                             const FourierBasis &phi_r, const FourierBasis &phi_s)
{
    if (sigma_r2.size() != phi_r.modes() || sigma_s2.size() != phi_s.modes())
        throw std::invalid_argument("kronecker_correlations: variance vectors do not match the bases");
    auto one_side = [](const Eigen::VectorXd &s2, const FourierBasis &phi)
    {
        const Eigen::VectorXd d = (s2.cwiseMax(0.0) * phi.antennas()).cwiseSqrt();
        const Eigen::MatrixXcd b = phi.matrix() * d.cast<cd>().asDiagonal();
        Eigen::MatrixXcd r(b.rows(), b.rows());
        r.setZero();
        r.selfadjointView<Eigen::Lower>().rankUpdate(b);
        return Eigen::MatrixXcd(r.selfadjointView<Eigen::Lower>());
    };
    return {one_side(sigma_r2, phi_r), one_side(sigma_s2, phi_s)};
}

KroneckerCorrelations kronecker_correlations(const CouplingMatrix &sigma2, const FourierBasis &phi_r,
                                             const FourierBasis &phi_s)
{
    if (!sigma2.separable)
        throw std::invalid_argument("kronecker_correlations: coupling matrix is not separable");
    return kronecker_correlations(sigma2.separable->first, sigma2.separable->second, phi_r, phi_s);
}

double sinc(double x)
{
    if (std::abs(x) < 1e-8)
        return 1.0 - (kPi * x) * (kPi * x) / 6.0;
    return std::sin(kPi * x) / (kPi * x);
}

Eigen::MatrixXd clarke_correlation(const PlanarArray &array)
{
    array.validate();
    const int n = array.count();
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i)
    {
        const auto pi = array.position(i);
        r(i, i) = 1.0;
        for (int j = 0; j < i; ++j)
        {
            const auto pj = array.position(j);
            const double d = std::hypot(pi[0] - pj[0], pi[1] - pj[1]);
            r(i, j) = r(j, i) = sinc(2.0 * d / array.wavelength);
        }
    }
    return r;
}

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd &r)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(r, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("sorted_eigenvalues: eigensolver failed");
    return es.eigenvalues().reverse();
}

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXcd &r)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("sorted_eigenvalues: eigensolver failed");
    return es.eigenvalues().reverse();
}

static double discard_from_eigs(const Eigen::VectorXd &eigs, Eigen::Index n)
{
    const Eigen::VectorXd e = eigs.cwiseMax(0.0);
    const double total = e.sum();
    if (!(total > 0.0) || n >= e.size())
        return 0.0;
    return e.tail(e.size() - std::max<Eigen::Index>(n, 0)).sum() / total;
}

double lowrank_discard_fraction(const Eigen::MatrixXd &r, Eigen::Index n)
{
    return discard_from_eigs(sorted_eigenvalues(r), n);
}

double lowrank_discard_fraction(const Eigen::MatrixXcd &r, Eigen::Index n)
{
    return discard_from_eigs(sorted_eigenvalues(r), n);
}

CouplingMatrix estimate_variances(const std::function<Eigen::MatrixXcd(int)> &channel, const FourierBasis &phi_r,
                                  const FourierBasis &phi_s, int trials)
{
    if (trials < 1)
        throw std::invalid_argument("estimate_variances: at least one trial is required");
    constexpr int kBlock = 64;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(phi_r.modes(), phi_s.modes());
    std::vector<Eigen::MatrixXd> part(kBlock);
    for (int start = 0; start < trials; start += kBlock)
    {
        const int len = std::min(kBlock, trials - start);
        std::vector<std::exception_ptr> errors(len);
#pragma omp parallel for schedule(dynamic, 1)
        for (int b = 0; b < len; ++b)
        {
            try
            {
                const Eigen::MatrixXcd h = channel(start + b);
                if (h.rows() != phi_r.antennas() || h.cols() != phi_s.antennas())
                    throw std::invalid_argument("estimate_variances: channel does not match the bases");
                const Eigen::MatrixXcd y = phi_r.apply_adjoint(h);               // n_r x N_s
                const Eigen::MatrixXcd x = phi_s.apply_adjoint(y.adjoint());     // n_s x n_r
                part[b] = x.adjoint().cwiseAbs2();
            }
            catch (...)
            {
                errors[b] = std::current_exception();
            }
        }
        for (int b = 0; b < len; ++b)
        {
            if (errors[b])
                std::rethrow_exception(errors[b]);
            acc += part[b];
        }
    }
    CouplingMatrix est;
    est.values = acc / (static_cast<double>(trials) * phi_r.antennas() * phi_s.antennas());
    est.receive_cells = phi_r.cells();
    est.source_cells = phi_s.cells();
    return est;
}

} // namespace holomimo
