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

#ifndef HOLOMIMO_RNG_HPP
#define HOLOMIMO_RNG_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>

namespace holomimo
{

// SplitMix64 finalizer
constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent child seed, e.g. one per Monte Carlo trial.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x5851F42D4C957F2DULL));
}

// Uniform variate in (0, 1] that depends only on (seed, counter).
double uniform_at(std::uint64_t seed, std::uint64_t counter);

// Circularly-symmetric CN(0, 1) variate for entry 'index' of the stream 'seed'.
std::complex<double> complex_normal_at(std::uint64_t seed, std::uint64_t index);

// Fills w column-major with CN(0, 1) entries index = offset + k. Independent
// of the thread layout of the caller.
void fill_complex_normal(Eigen::MatrixXcd &w, std::uint64_t seed, std::uint64_t offset = 0);

} // namespace holomimo

#endif
