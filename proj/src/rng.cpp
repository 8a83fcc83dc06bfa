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

#include "holomimo/rng.hpp"

#include <cmath>
#include <numbers>

namespace holomimo
{

double uniform_at(std::uint64_t seed, std::uint64_t counter)
{
    const std::uint64_t h = splitmix64(splitmix64(seed) + (counter + 1) * 0x9E3779B97F4A7C15ULL);
    return static_cast<double>((h >> 11) + 1) * 0x1.0p-53;
}

std::complex<double> complex_normal_at(std::uint64_t seed, std::uint64_t index)
{
    const double u1 = uniform_at(seed, 2 * index);
    const double u2 = uniform_at(seed, 2 * index + 1);
    const double r = std::sqrt(-std::log(u1)); // |w|^2 ~ Exp(1)
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
}

void fill_complex_normal(Eigen::MatrixXcd &w, std::uint64_t seed, std::uint64_t offset)
{
    for (Eigen::Index k = 0; k < w.size(); ++k)
        w(k) = complex_normal_at(seed, offset + static_cast<std::uint64_t>(k));
}

} // namespace holomimo
