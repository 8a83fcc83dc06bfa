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

#ifndef HOLOMIMO_ERRORS_HPP
#define HOLOMIMO_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace holomimo
{

// Numerical failure: non-convergence, empty spectral support, degenerate input.
// The CLI maps this to exit code 2.
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Evaluating the dispersion relation outside the propagating disk.
class EvanescentWaveError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

// Adaptive quadrature exceeded its refinement budget. Carries the best
// estimate reached and the accumulated error bound.
class QuadratureError : public NumericalError
{
public:
    QuadratureError(const std::string &what, double best_estimate, double error_bound)
        : NumericalError(what + " (best estimate " + std::to_string(best_estimate) +
                         ", error bound " + std::to_string(error_bound) + ")"),
          best_estimate_(best_estimate), error_bound_(error_bound)
    {
    }

    double best_estimate() const noexcept { return best_estimate_; }
    double error_bound() const noexcept { return error_bound_; }

private:
    double best_estimate_;
    double error_bound_;
};

// Invalid or unknown experiment configuration. The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace holomimo

#endif
