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

#ifndef HOLOMIMO_EXPERIMENT_HPP
#define HOLOMIMO_EXPERIMENT_HPP

#include "holomimo/capacity.hpp"
#include "holomimo/geometry.hpp"
#include "holomimo/spectra.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace holomimo
{

inline constexpr int kConfigSchemaVersion = 1;

enum class ExperimentKind
{
    kVariances,
    kEigenvalues,
    kCapacityVsSpacing,
    kCapacityVsSnr,
    kEstimate,
    kGenerate,
};

std::string to_string(ExperimentKind kind);

enum class OutputFormat
{
    kCsv,
    kJson,
};

// Geometry in wavelengths
struct ArraySpec
{
    double length_x = 10.0;
    double length_y = 10.0;
    double spacing_x = 0.5;
    double spacing_y = 0.5;
    double z = 0.0;

    PlanarArray to_array(double wavelength) const;
};

struct SpectrumSpec
{
    std::string name;
    SpectralFactor receive;
    SpectralFactor source;
};

struct ExperimentConfig
{
    ExperimentKind kind = ExperimentKind::kVariances;
    double wavelength = 1.0;
    ArraySpec receive;
    ArraySpec source;
    std::vector<SpectrumSpec> spectra;
    std::vector<double> snr_db{10.0};
    std::vector<double> spacings; // sweep values in wavelengths
    int trials = 100;
    std::uint64_t seed = 1;
    double fraction = 0.997;
    double rel_tol = 1e-6;
    double power_threshold = 1e-3; // entries below this share are excluded from estimate errors
    int realizations = 1;
    bool spatial_domain = true;     // generate: H or H_a
    int iid_mc_max_antennas = 256;  // larger i.i.d. baselines use the deterministic equivalent
    bool clarke = true;
    FixedPointNormalization normalization = FixedPointNormalization::kSourceModes;
    std::string output_dir = "out";
    std::string basename;
    OutputFormat format = OutputFormat::kCsv;

    nlohmann::json source_json; // validated input, used for hashing

    // Throws ConfigError with the JSON path of the offending field.
    static ExperimentConfig parse(const nlohmann::json &j);
    static ExperimentConfig parse_text(std::string_view text);
    static ExperimentConfig load(const std::filesystem::path &path);
};

struct RunOptions
{
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<OutputFormat> format;
    std::string preset;
    bool quiet = false;
};

struct RunResult
{
    std::filesystem::path manifest_path;
    std::vector<std::filesystem::path> outputs;
    nlohmann::json manifest;
};

// Seed and output directory precedence: RunOptions, then HOLO_MIMO_SEED / HOLO_MIMO_OUT, then the config.
RunResult run(const ExperimentConfig &config, const RunOptions &options = {});

// Named presets shipped with the tool
std::vector<std::string> preset_names();
// Throws ConfigError for an unknown name.
std::string preset_text(const std::string &name);

// 64-bit FNV-1a
std::uint64_t fnv1a64(std::string_view data);

// ------------------------------------------------------------------------
// Tables

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table
{
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
    // Sum, min and max of every numeric column, in row order.
    nlohmann::json column_stats() const;
};

// %.17g numbers, header row, LF line endings
void write_csv(const Table &table, const std::filesystem::path &path);
void write_json(const Table &table, const std::filesystem::path &path);
// Numeric fields come back as double, other fields as string.
Table read_csv(const std::filesystem::path &path);
std::string format_number(double v);

// ------------------------------------------------------------------------
// Binary channel container: "HMIMOCH\0", u32 version, u32 reserved, u64 count,
// u64 rows, u64 cols, then count * rows * cols complex doubles (re, im),
// row-major per matrix, little-endian.

void write_channel_container(const std::filesystem::path &path, const std::vector<Eigen::MatrixXcd> &channels);
std::vector<Eigen::MatrixXcd> read_channel_container(const std::filesystem::path &path);

} // namespace holomimo

#endif
