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

#include "holomimo/experiment.hpp"
#include "holomimo/channel.hpp"
#include "holomimo/errors.hpp"
#include "holomimo/rng.hpp"

#include <algorithm>
#include <bit>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#ifndef HOLO_MIMO_VERSION
#define HOLO_MIMO_VERSION "0.0.0"
#endif

namespace holomimo
{

// Preset sources, generated at configure time from presets/*.json.
const std::map<std::string, std::string> &embedded_presets();

using nlohmann::json;

std::string to_string(ExperimentKind kind)
{
    switch (kind)
    {
    case ExperimentKind::kVariances:
        return "variances";
    case ExperimentKind::kEigenvalues:
        return "eigenvalues";
    case ExperimentKind::kCapacityVsSpacing:
        return "capacity-vs-spacing";
    case ExperimentKind::kCapacityVsSnr:
        return "capacity-vs-snr";
    case ExperimentKind::kEstimate:
        return "estimate";
    case ExperimentKind::kGenerate:
        return "generate";
    }
    return "unknown";
}

PlanarArray ArraySpec::to_array(double wavelength) const
{
    PlanarArray a;
    a.length_x = length_x * wavelength;
    a.length_y = length_y * wavelength;
    a.spacing_x = spacing_x * wavelength;
    a.spacing_y = spacing_y * wavelength;
    a.z_plane = z * wavelength;
    a.wavelength = wavelength;
    return a;
}

std::uint64_t fnv1a64(std::string_view data)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data)
    {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// ------------------------------------------------------------------------
// Config parsing

namespace
{
[[noreturn]] void fail(const std::string &path, const std::string &what)
{
    throw ConfigError((path.empty() ? std::string("/") : path) + ": " + what);
}

void check_object(const json &j, const std::string &path, std::initializer_list<const char *> allowed)
{
    if (!j.is_object())
        fail(path, "expected an object");
    for (const auto &[key, value] : j.items())
    {
        (void)value;
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char *a) { return key == a; }))
            fail(path + "/" + key, "unknown key");
    }
}

double as_number(const json &v, const std::string &path)
{
    if (!v.is_number())
        fail(path, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d))
        fail(path, "expected a finite number");
    return d;
}

double number_or(const json &obj, const char *key, const std::string &path, double fallback)
{
    return obj.contains(key) ? as_number(obj.at(key), path + "/" + key) : fallback;
}

double positive_or(const json &obj, const char *key, const std::string &path, double fallback)
{
    const double v = number_or(obj, key, path, fallback);
    if (!(v > 0.0))
        fail(path + "/" + key, "must be positive");
    return v;
}

std::int64_t integer_or(const json &obj, const char *key, const std::string &path, std::int64_t fallback)
{
    if (!obj.contains(key))
        return fallback;
    const json &v = obj.at(key);
    if (!v.is_number_integer())
        fail(path + "/" + key, "expected an integer");
    return v.get<std::int64_t>();
}

std::string string_or(const json &obj, const char *key, const std::string &path, const std::string &fallback)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj.at(key).is_string())
        fail(path + "/" + key, "expected a string");
    return obj.at(key).get<std::string>();
}

bool bool_or(const json &obj, const char *key, const std::string &path, bool fallback)
{
    if (!obj.contains(key))
        return fallback;
    if (!obj.at(key).is_boolean())
        fail(path + "/" + key, "expected true or false");
    return obj.at(key).get<bool>();
}

std::vector<double> number_list(const json &v, const std::string &path)
{
    std::vector<double> out;
    if (v.is_number())
        out.push_back(as_number(v, path));
    else if (v.is_array())
    {
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(as_number(v[i], path + "/" + std::to_string(i)));
    }
    else
        fail(path, "expected a number or an array of numbers");
    if (out.empty())
        fail(path, "must not be empty");
    return out;
}

ArraySpec parse_array(const json &j, const std::string &path)
{
    check_object(j, path, {"length", "length_x", "length_y", "spacing", "spacing_x", "spacing_y", "z"});
    if (j.contains("length") && (j.contains("length_x") || j.contains("length_y")))
        fail(path + "/length", "use either length or length_x/length_y");
    if (j.contains("spacing") && (j.contains("spacing_x") || j.contains("spacing_y")))
        fail(path + "/spacing", "use either spacing or spacing_x/spacing_y");
    ArraySpec a;
    const double l = positive_or(j, "length", path, 10.0);
    const double s = positive_or(j, "spacing", path, 0.5);
    a.length_x = positive_or(j, "length_x", path, l);
    a.length_y = positive_or(j, "length_y", path, l);
    a.spacing_x = positive_or(j, "spacing_x", path, s);
    a.spacing_y = positive_or(j, "spacing_y", path, s);
    a.z = number_or(j, "z", path, 0.0);
    return a;
}

constexpr double kDeg = kPi / 180.0;

SpectralFactor parse_factor(const json &j, const std::string &path, bool allow_name)
{
    const std::string type = j.is_object() ? string_or(j, "type", path, "") : "";
    if (type.empty())
        fail(path + "/type", "missing spectrum type (isotropic, vmf or cluster-uniform)");

    if (type == "isotropic")
    {
        if (allow_name)
            check_object(j, path, {"name", "type", "source"});
        else
            check_object(j, path, {"type"});
        return Isotropic{};
    }
    if (type == "vmf")
    {
        if (allow_name)
            check_object(j, path, {"name", "type", "clusters", "convention", "source"});
        else
            check_object(j, path, {"type", "clusters", "convention"});
        const std::string conv = string_or(j, "convention", path, "one-minus-length-squared");
        CircularVarianceConvention convention;
        if (conv == "one-minus-length-squared")
            convention = CircularVarianceConvention::kOneMinusLengthSquared;
        else if (conv == "one-minus-length")
            convention = CircularVarianceConvention::kOneMinusLength;
        else
            fail(path + "/convention", "expected one-minus-length-squared or one-minus-length");
        if (!j.contains("clusters") || !j.at("clusters").is_array() || j.at("clusters").empty())
            fail(path + "/clusters", "expected a non-empty array");
        const json &cl = j.at("clusters");
        VmfMixture m;
        int weighted = 0;
        for (std::size_t i = 0; i < cl.size(); ++i)
        {
            const std::string p = path + "/clusters/" + std::to_string(i);
            check_object(cl[i], p, {"weight", "mu_theta_deg", "mu_phi_deg", "alpha", "circular_variance"});
            VmfCluster c;
            weighted += cl[i].contains("weight") ? 1 : 0;
            c.weight = number_or(cl[i], "weight", p, 1.0 / static_cast<double>(cl.size()));
            if (c.weight < 0.0)
                fail(p + "/weight", "must be nonnegative");
            const double th = number_or(cl[i], "mu_theta_deg", p, 0.0);
            if (th < 0.0 || th > 180.0)
                fail(p + "/mu_theta_deg", "must lie in [0, 180]");
            c.mu_theta = th * kDeg;
            c.mu_phi = number_or(cl[i], "mu_phi_deg", p, 0.0) * kDeg;
            const bool has_a = cl[i].contains("alpha"), has_v = cl[i].contains("circular_variance");
            if (has_a == has_v)
                fail(p, "give exactly one of alpha or circular_variance");
            if (has_a)
            {
                c.alpha = as_number(cl[i].at("alpha"), p + "/alpha");
                if (c.alpha < 0.0)
                    fail(p + "/alpha", "must be nonnegative");
            }
            else
            {
                const double v = as_number(cl[i].at("circular_variance"), p + "/circular_variance");
                if (!(v > 0.0 && v < 1.0))
                    fail(p + "/circular_variance", "must lie in (0, 1)");
                c.alpha = concentration_from_circular_variance(v, convention);
            }
            m.clusters.push_back(c);
        }
        if (weighted != 0 && weighted != static_cast<int>(cl.size()))
            fail(path + "/clusters", "give a weight for every cluster or for none");
        double sum = 0.0;
        for (const auto &c : m.clusters)
            sum += c.weight;
        if (std::abs(sum - 1.0) > 1e-9)
            fail(path + "/clusters", "weights must sum to 1");
        for (auto &c : m.clusters)
            c.weight /= sum;
        return m;
    }
    if (type == "cluster-uniform")
    {
        if (allow_name)
            check_object(j, path, {"name", "type", "boxes", "source"});
        else
            check_object(j, path, {"type", "boxes"});
        if (!j.contains("boxes") || !j.at("boxes").is_array() || j.at("boxes").empty())
            fail(path + "/boxes", "expected a non-empty array");
        ClusterUniform cu;
        const json &bx = j.at("boxes");
        for (std::size_t i = 0; i < bx.size(); ++i)
        {
            const std::string p = path + "/boxes/" + std::to_string(i);
            check_object(bx[i], p, {"theta_deg", "phi_deg"});
            auto range = [&](const char *key, double lo, double hi)
            {
                if (!bx[i].contains(key))
                    fail(p + "/" + key, "missing [low, high] range");
                const auto v = number_list(bx[i].at(key), p + "/" + key);
                if (v.size() != 2 || !(v[0] < v[1]) || v[0] < lo || v[1] > hi)
                    fail(p + "/" + key, "expected [low, high] with low < high inside [" + format_number(lo) + ", " +
                                            format_number(hi) + "]");
                return std::make_pair(v[0] * kDeg, v[1] * kDeg);
            };
            const auto t = range("theta_deg", 0.0, 90.0);
            const auto f = range("phi_deg", 0.0, 360.0);
            cu.boxes.push_back({t.first, t.second, f.first, f.second});
        }
        return cu;
    }
    fail(path + "/type", "unknown spectrum type '" + type + "'");
}

SpectrumSpec parse_spectrum(const json &j, const std::string &path)
{
    if (!j.is_object())
        fail(path, "expected an object");
    SpectrumSpec s;
    s.receive = parse_factor(j, path, true);
    s.name = string_or(j, "name", path, j.at("type").get<std::string>());
    if (s.name.empty() || s.name.find_first_of(",\n\r\"/\\ ") != std::string::npos)
        fail(path + "/name", "must be non-empty without spaces, commas, quotes or slashes");
    s.source = j.contains("source") ? parse_factor(j.at("source"), path + "/source", false) : s.receive;
    return s;
}

ExperimentKind parse_kind(const json &j)
{
    const std::string k = string_or(j, "kind", "", "");
    for (auto kind : {ExperimentKind::kVariances, ExperimentKind::kEigenvalues, ExperimentKind::kCapacityVsSpacing,
                      ExperimentKind::kCapacityVsSnr, ExperimentKind::kEstimate, ExperimentKind::kGenerate})
        if (k == to_string(kind))
            return kind;
    fail("/kind", k.empty() ? "missing experiment kind" : "unknown experiment kind '" + k + "'");
}
} // namespace

ExperimentConfig ExperimentConfig::parse(const json &j)
{
    check_object(j, "",
                 {"schema_version", "kind", "wavelength", "receive", "source", "spectrum", "spectra", "snr_db",
                  "spacings", "trials", "seed", "fraction", "rel_tol", "power_threshold", "realizations", "domain",
                  "iid_mc_max_antennas", "clarke", "fixed_point_normalization", "output"});
    if (!j.contains("schema_version"))
        fail("/schema_version", "missing");
    if (integer_or(j, "schema_version", "", 0) != kConfigSchemaVersion)
        fail("/schema_version", "unsupported version (expected " + std::to_string(kConfigSchemaVersion) + ")");

    ExperimentConfig c;
    c.source_json = j;
    c.kind = parse_kind(j);
    c.wavelength = positive_or(j, "wavelength", "", 1.0);
    if (!j.contains("receive"))
        fail("/receive", "missing array description");
    c.receive = parse_array(j.at("receive"), "/receive");
    c.source = j.contains("source") ? parse_array(j.at("source"), "/source") : c.receive;

    if (j.contains("spectrum") == j.contains("spectra"))
        fail("/spectrum", "give exactly one of spectrum or spectra");
    if (j.contains("spectrum"))
        c.spectra.push_back(parse_spectrum(j.at("spectrum"), "/spectrum"));
    else
    {
        const json &sp = j.at("spectra");
        if (!sp.is_array() || sp.empty())
            fail("/spectra", "expected a non-empty array");
        std::set<std::string> names;
        for (std::size_t i = 0; i < sp.size(); ++i)
        {
            c.spectra.push_back(parse_spectrum(sp[i], "/spectra/" + std::to_string(i)));
            if (!names.insert(c.spectra.back().name).second)
                fail("/spectra/" + std::to_string(i) + "/name", "duplicate spectrum name");
        }
    }

    if (j.contains("snr_db"))
        c.snr_db = number_list(j.at("snr_db"), "/snr_db");
    if (j.contains("spacings"))
    {
        c.spacings = number_list(j.at("spacings"), "/spacings");
        for (std::size_t i = 0; i < c.spacings.size(); ++i)
            if (!(c.spacings[i] > 0.0))
                fail("/spacings/" + std::to_string(i), "must be positive");
    }
    if (c.kind == ExperimentKind::kCapacityVsSpacing && c.spacings.empty())
        fail("/spacings", "required for capacity-vs-spacing");

    const std::int64_t trials = integer_or(j, "trials", "", c.trials);
    if (trials < 1 || trials > 100000000)
        fail("/trials", "must be a positive integer");
    c.trials = static_cast<int>(trials);
    if (j.contains("seed"))
    {
        if (!j.at("seed").is_number_unsigned() && !(j.at("seed").is_number_integer() && j.at("seed").get<std::int64_t>() >= 0))
            fail("/seed", "expected a nonnegative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    c.fraction = number_or(j, "fraction", "", c.fraction);
    if (!(c.fraction > 0.0 && c.fraction <= 1.0))
        fail("/fraction", "must lie in (0, 1]");
    c.rel_tol = positive_or(j, "rel_tol", "", c.rel_tol);
    c.power_threshold = number_or(j, "power_threshold", "", c.power_threshold);
    if (!(c.power_threshold >= 0.0 && c.power_threshold < 1.0))
        fail("/power_threshold", "must lie in [0, 1)");
    const std::int64_t reals = integer_or(j, "realizations", "", c.realizations);
    if (reals < 1 || reals > 1000000)
        fail("/realizations", "must be a positive integer");
    c.realizations = static_cast<int>(reals);
    const std::string domain = string_or(j, "domain", "", "spatial");
    if (domain != "spatial" && domain != "angular")
        fail("/domain", "expected spatial or angular");
    c.spatial_domain = domain == "spatial";
    const std::int64_t iid_max = integer_or(j, "iid_mc_max_antennas", "", c.iid_mc_max_antennas);
    if (iid_max < 0)
        fail("/iid_mc_max_antennas", "must be nonnegative");
    c.iid_mc_max_antennas = static_cast<int>(iid_max);
    c.clarke = bool_or(j, "clarke", "", c.clarke);
    const std::string fp = string_or(j, "fixed_point_normalization", "", "source");
    if (fp == "source")
        c.normalization = FixedPointNormalization::kSourceModes;
    else if (fp == "receive-source")
        c.normalization = FixedPointNormalization::kReceiveSourceModes;
    else
        fail("/fixed_point_normalization", "expected source or receive-source");

    c.basename = to_string(c.kind);
    if (j.contains("output"))
    {
        const json &o = j.at("output");
        check_object(o, "/output", {"dir", "basename", "format"});
        c.output_dir = string_or(o, "dir", "/output", c.output_dir);
        c.basename = string_or(o, "basename", "/output", c.basename);
        if (c.basename.empty() || c.basename.find_first_of("/\\") != std::string::npos)
            fail("/output/basename", "must be a plain file name");
        const std::string f = string_or(o, "format", "/output", "csv");
        if (f == "csv")
            c.format = OutputFormat::kCsv;
        else if (f == "json")
            c.format = OutputFormat::kJson;
        else
            fail("/output/format", "expected csv or json");
    }

    // geometry sanity, so that no computation starts on an invalid aperture
    try
    {
        c.receive.to_array(c.wavelength).validate();
        c.source.to_array(c.wavelength).validate();
    }
    catch (const std::invalid_argument &e)
    {
        fail("/receive", e.what());
    }
    return c;
}

ExperimentConfig ExperimentConfig::parse_text(std::string_view text)
{
    json j;
    try
    {
        j = json::parse(text.begin(), text.end(), nullptr, true, true);
    }
    catch (const json::parse_error &e)
    {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return parse(j);
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try
    {
        return parse_text(ss.str());
    }
    catch (const ConfigError &e)
    {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::vector<std::string> preset_names()
{
    std::vector<std::string> names;
    for (const auto &[k, v] : embedded_presets())
        names.push_back(k);
    return names;
}

std::string preset_text(const std::string &name)
{
    const auto &p = embedded_presets();
    const auto it = p.find(name);
    if (it == p.end())
    {
        std::string known;
        for (const auto &n : preset_names())
            known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown preset '" + name + "' (available: " + known + ")");
    }
    return it->second;
}

// ------------------------------------------------------------------------
// Tables

std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

static std::string cell_text(const Cell &c)
{
    if (const auto *i = std::get_if<std::int64_t>(&c))
        return std::to_string(*i);
    if (const auto *d = std::get_if<double>(&c))
        return format_number(*d);
    return std::get<std::string>(c);
}

static json cell_json(const Cell &c)
{
    if (const auto *i = std::get_if<std::int64_t>(&c))
        return *i;
    if (const auto *d = std::get_if<double>(&c))
        return std::isfinite(*d) ? json(*d) : json(nullptr);
    return std::get<std::string>(c);
}

json Table::column_stats() const
{
    json out = json::object();
    for (std::size_t k = 0; k < columns.size(); ++k)
    {
        double sum = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
        std::size_t n = 0;
        for (const auto &r : rows)
        {
            double v;
            if (const auto *i = std::get_if<std::int64_t>(&r[k]))
                v = static_cast<double>(*i);
            else if (const auto *d = std::get_if<double>(&r[k]))
                v = *d;
            else
                continue;
            if (!std::isfinite(v))
                continue;
            sum += v, lo = std::min(lo, v), hi = std::max(hi, v), ++n;
        }
        if (n > 0)
            out[columns[k]] = {{"sum", sum}, {"min", lo}, {"max", hi}, {"count", n}};
    }
    return out;
}

void write_csv(const Table &table, const std::filesystem::path &path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    for (std::size_t k = 0; k < table.columns.size(); ++k)
        out << (k ? "," : "") << table.columns[k];
    out << '\n';
    for (const auto &r : table.rows)
    {
        for (std::size_t k = 0; k < r.size(); ++k)
            out << (k ? "," : "") << cell_text(r[k]);
        out << '\n';
    }
}

void write_json(const Table &table, const std::filesystem::path &path)
{
    json rows = json::array();
    for (const auto &r : table.rows)
    {
        json row = json::array();
        for (const auto &c : r)
            row.push_back(cell_json(c));
        rows.push_back(std::move(row));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out << json{{"columns", table.columns}, {"rows", rows}}.dump(1) << '\n';
}

Table read_csv(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    Table t;
    std::string line;
    auto split = [](const std::string &s)
    {
        std::vector<std::string> f;
        std::size_t a = 0;
        for (;;)
        {
            const std::size_t b = s.find(',', a);
            f.push_back(s.substr(a, b == std::string::npos ? std::string::npos : b - a));
            if (b == std::string::npos)
                return f;
            a = b + 1;
        }
    };
    if (!std::getline(in, line))
        return t;
    t.columns = split(line);
    while (std::getline(in, line))
    {
        std::vector<Cell> row;
        for (const auto &f : split(line))
        {
            char *end = nullptr;
            const double d = std::strtod(f.c_str(), &end);
            if (!f.empty() && end == f.c_str() + f.size())
                row.emplace_back(d);
            else
                row.emplace_back(f);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

// ------------------------------------------------------------------------
// Binary container

namespace
{
constexpr char kMagic[8] = {'H', 'M', 'I', 'M', 'O', 'C', 'H', '\0'};
constexpr std::uint32_t kContainerVersion = 1;

template <typename T>
void put_le(std::ostream &out, T v)
{
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(b, b + sizeof(T));
    out.write(reinterpret_cast<const char *>(b), sizeof(T));
}

template <typename T>
T get_le(std::istream &in)
{
    unsigned char b[sizeof(T)];
    if (!in.read(reinterpret_cast<char *>(b), sizeof(T)))
        throw std::runtime_error("channel container: truncated file");
    if constexpr (std::endian::native == std::endian::big)
        std::reverse(b, b + sizeof(T));
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}
} // namespace

void write_channel_container(const std::filesystem::path &path, const std::vector<Eigen::MatrixXcd> &channels)
{
    const std::uint64_t rows = channels.empty() ? 0 : static_cast<std::uint64_t>(channels.front().rows());
    const std::uint64_t cols = channels.empty() ? 0 : static_cast<std::uint64_t>(channels.front().cols());
    for (const auto &h : channels)
        if (static_cast<std::uint64_t>(h.rows()) != rows || static_cast<std::uint64_t>(h.cols()) != cols)
            throw std::invalid_argument("channel container: all matrices must share one shape");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    put_le<std::uint32_t>(out, kContainerVersion);
    put_le<std::uint32_t>(out, 0);
    put_le<std::uint64_t>(out, channels.size());
    put_le<std::uint64_t>(out, rows);
    put_le<std::uint64_t>(out, cols);
    for (const auto &h : channels)
        for (Eigen::Index r = 0; r < h.rows(); ++r)
            for (Eigen::Index c = 0; c < h.cols(); ++c)
            {
                put_le<double>(out, h(r, c).real());
                put_le<double>(out, h(r, c).imag());
            }
}

std::vector<Eigen::MatrixXcd> read_channel_container(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot read " + path.string());
    char magic[8];
    if (!in.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
        throw std::runtime_error("channel container: bad magic");
    if (get_le<std::uint32_t>(in) != kContainerVersion)
        throw std::runtime_error("channel container: unsupported version");
    (void)get_le<std::uint32_t>(in);
    const auto count = get_le<std::uint64_t>(in);
    const auto rows = get_le<std::uint64_t>(in);
    const auto cols = get_le<std::uint64_t>(in);
    std::vector<Eigen::MatrixXcd> out;
    for (std::uint64_t k = 0; k < count; ++k)
    {
        Eigen::MatrixXcd h(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        for (Eigen::Index r = 0; r < h.rows(); ++r)
            for (Eigen::Index c = 0; c < h.cols(); ++c)
            {
                const double re = get_le<double>(in);
                const double im = get_le<double>(in);
                h(r, c) = {re, im};
            }
        out.push_back(std::move(h));
    }
    return out;
}

// ------------------------------------------------------------------------
// Experiments

namespace
{
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Context
{
    const ExperimentConfig &cfg;
    std::uint64_t seed;
    std::filesystem::path dir;
    OutputFormat format;
    bool quiet;
    json outputs = json::array();
    json summary = json::object();
    json durations = json::object();
    std::vector<std::filesystem::path> files;

    void log(const std::string &msg) const
    {
        if (!quiet)
            std::cerr << "[holo-mimo] " << msg << '\n';
    }

    void emit(const Table &t, const std::string &stem, json meta = json::object())
    {
        const std::string name = stem + (format == OutputFormat::kCsv ? ".csv" : ".json");
        const auto path = dir / name;
        if (format == OutputFormat::kCsv)
            write_csv(t, path);
        else
            write_json(t, path);
        json entry = {{"path", name}, {"format", format == OutputFormat::kCsv ? "csv" : "json"},
                      {"rows", t.rows.size()}, {"columns", t.columns}, {"stats", t.column_stats()}};
        if (!meta.empty())
            entry["meta"] = std::move(meta);
        outputs.push_back(std::move(entry));
        files.push_back(path);
        log("wrote " + path.string());
    }

    std::string stem(const std::string &suffix = "") const
    {
        return suffix.empty() ? cfg.basename : cfg.basename + "_" + suffix;
    }
};

double safe_db(double v) { return v > 0.0 ? 10.0 * std::log10(v) : -std::numeric_limits<double>::infinity(); }

SpectraOptions spectra_options(const ExperimentConfig &c)
{
    SpectraOptions o;
    o.rel_tol = c.rel_tol;
    return o;
}

void run_variances(Context &ctx)
{
    const auto &c = ctx.cfg;
    const CellGrid grid = CellGrid::build(c.receive.to_array(c.wavelength));
    const auto n = static_cast<double>(grid.size());
    for (const auto &sp : c.spectra)
    {
        const auto t0 = Clock::now();
        const Eigen::VectorXd v = receive_variances(sp.receive, grid, spectra_options(c));
        const double vmax = v.maxCoeff();
        Table t;
        t.columns = {"lx", "ly", "value", "normalized", "normalized_db"};
        for (int i = 0; i < grid.size(); ++i)
            t.add({std::int64_t{grid.cells[i].index.x}, std::int64_t{grid.cells[i].index.y}, v[i], n * v[i],
                   safe_db(v[i] / vmax)});
        const int mixture_prime = significant_count(v, c.fraction);
        int n_prime = mixture_prime;
        json per_cluster = nullptr;
        // clustered spectra: n_r' is the sum of the per-cluster counts
        if (const auto *vm = std::get_if<VmfMixture>(&sp.receive); vm && vm->clusters.size() > 1)
        {
            const auto counts = significant_counts_per_cluster(*vm, grid, c.fraction, spectra_options(c));
            n_prime = std::accumulate(counts.begin(), counts.end(), 0);
            per_cluster = counts;
        }
        ctx.durations["variances_" + sp.name] = seconds_since(t0);
        ctx.summary[sp.name] = {{"n_r", grid.size()},
                                {"n_r_prime", n_prime},
                                {"n_r_prime_mixture", mixture_prime},
                                {"n_r_prime_per_cluster", per_cluster},
                                {"count_asymptotic", count_asymptotic(grid.array)},
                                {"fraction", c.fraction},
                                {"max_normalized", n * vmax}};
        ctx.log(sp.name + ": n_r = " + std::to_string(grid.size()) + ", n_r' = " + std::to_string(n_prime));
        ctx.emit(t, ctx.stem(c.spectra.size() > 1 ? sp.name : ""), {{"spectrum", sp.name}});
    }
}

void run_eigenvalues(Context &ctx)
{
    const auto &c = ctx.cfg;
    std::vector<double> spacings = c.spacings;
    if (spacings.empty())
        spacings.push_back(c.receive.spacing_x);

    for (std::size_t k = 0; k < spacings.size(); ++k)
    {
        ArraySpec spec = c.receive;
        spec.spacing_x = spec.spacing_y = spacings[k];
        const PlanarArray array = spec.to_array(c.wavelength);
        const CellGrid grid = CellGrid::build(array);
        const int big_n = array.count();
        const auto t0 = Clock::now();

        std::vector<Eigen::VectorXd> fourier;
        json per_spectrum = json::object();
        for (const auto &sp : c.spectra)
        {
            const Eigen::VectorXd s2 = receive_variances(sp.receive, grid, spectra_options(c));
            const FourierBasis basis = build_basis(array, grid.cells);
            Eigen::VectorXd eig;
            if (basis.uniform_sampling() && big_n >= grid.size())
            {
                // semi-unitary congruence: N_r sigma_r^2 followed by zeros
                eig = Eigen::VectorXd::Zero(big_n);
                Eigen::VectorXd g = s2 * big_n;
                std::sort(g.data(), g.data() + g.size(), std::greater<>());
                eig.head(g.size()) = g;
            }
            else
            {
                const KroneckerCorrelations kc = kronecker_correlations(s2, s2, basis, basis);
                eig = sorted_eigenvalues(kc.r_r).cwiseMax(0.0);
            }
            fourier.push_back(eig);
            per_spectrum[sp.name] = {{"n_r_prime", significant_count(s2, c.fraction)},
                                     {"trace", eig.sum()}};
        }

        Eigen::VectorXd clarke_eigs;
        double discard = 0.0;
        if (c.clarke)
        {
            clarke_eigs = sorted_eigenvalues(clarke_correlation(array)).cwiseMax(0.0);
            discard = clarke_eigs.size() > grid.size() ? clarke_eigs.tail(clarke_eigs.size() - grid.size()).sum() /
                                                             clarke_eigs.sum()
                                                       : 0.0;
        }

        Table t;
        t.columns = {"rank"};
        for (const auto &sp : c.spectra)
            t.columns.push_back("fourier_" + sp.name);
        if (c.clarke)
            t.columns.push_back("clarke");
        t.columns.push_back("iid");
        for (int i = 0; i < big_n; ++i)
        {
            std::vector<Cell> row{std::int64_t{i + 1}};
            for (const auto &f : fourier)
                row.emplace_back(f[i]);
            if (c.clarke)
                row.emplace_back(clarke_eigs[i]);
            row.emplace_back(1.0);
            t.add(std::move(row));
        }
        const std::string key = "spacing_" + std::to_string(k);
        ctx.durations["eigenvalues_" + key] = seconds_since(t0);
        json s = {{"spacing_wavelengths", spacings[k]}, {"antennas", big_n}, {"n_r", grid.size()},
                  {"spectra", per_spectrum}};
        if (c.clarke)
            s["clarke_discard_fraction"] = discard;
        ctx.summary[key] = s;
        ctx.emit(t, ctx.stem(spacings.size() > 1 ? key : ""), {{"spacing_wavelengths", spacings[k]}});
    }
}

std::vector<Cell> capacity_row(const std::string &spectrum, double spacing, double snr_db, int nr, int ns,
                               const CapacityResult &r, const std::string &method)
{
    return {spectrum, spacing, snr_db, std::int64_t{nr}, std::int64_t{ns}, to_string(r.regime), r.mean, r.std_error,
            std::int64_t{r.trials}, method};
}

const std::vector<std::string> kCapacityColumns = {"spectrum", "spacing",  "snr_db",    "n_rx_antennas", "n_tx_antennas",
                                                   "regime",   "capacity", "std_error", "trials",        "method"};

CapacityResult iid_baseline(const ExperimentConfig &c, int nr, int ns, double snr, std::uint64_t seed, std::string &method)
{
    if (std::max(nr, ns) <= c.iid_mc_max_antennas)
    {
        method = "monte-carlo";
        return capacity_iid_mc(nr, ns, snr, c.trials, seed);
    }
    method = "deterministic-equivalent";
    return capacity_iid_asymptotic(nr, ns, snr);
}

void run_capacity_vs_spacing(Context &ctx)
{
    const auto &c = ctx.cfg;
    const CellGrid rx = CellGrid::build(c.receive.to_array(c.wavelength));
    const CellGrid tx = CellGrid::build(c.source.to_array(c.wavelength));
    Table t;
    t.columns = kCapacityColumns;
    std::vector<CouplingMatrix> sigma;
    for (const auto &sp : c.spectra)
        sigma.push_back(coupling_variances(sp.receive, sp.source, rx, tx, spectra_options(c)));

    for (double spacing : c.spacings)
    {
        ArraySpec r = c.receive, s = c.source;
        r.spacing_x = r.spacing_y = s.spacing_x = s.spacing_y = spacing;
        const int nr = r.to_array(c.wavelength).count(), ns = s.to_array(c.wavelength).count();
        for (double snr_db : c.snr_db)
        {
            const double snr = db_to_linear(snr_db);
            const auto t0 = Clock::now();
            for (std::size_t k = 0; k < c.spectra.size(); ++k)
            {
                const auto &m = sigma[k];
                const auto mc = capacity_csir_mc(m, nr, ns, snr, c.trials, c.seed);
                t.add(capacity_row(c.spectra[k].name, spacing, snr_db, nr, ns, mc, "monte-carlo"));
                const auto as = capacity_asymptotic(m.separable->first, m.separable->second, nr, ns, snr, c.normalization);
                t.add(capacity_row(c.spectra[k].name, spacing, snr_db, nr, ns, as, "fixed-point"));
            }
            std::string method;
            const auto iid = iid_baseline(c, nr, ns, snr, c.seed, method);
            t.add(capacity_row("iid", spacing, snr_db, nr, ns, iid, method));
            ctx.durations["spacing_" + format_number(spacing) + "_snr_" + format_number(snr_db)] = seconds_since(t0);
            ctx.log("spacing " + format_number(spacing) + " lambda, snr " + format_number(snr_db) + " dB done");
        }
    }
    json per = json::object();
    for (std::size_t k = 0; k < c.spectra.size(); ++k)
    {
        const auto ss = significant_set(sigma[k], c.fraction);
        per[c.spectra[k].name] = {{"n_r", sigma[k].rows()}, {"n_s", sigma[k].cols()}, {"n_r_prime", ss.n_r},
                                  {"n_s_prime", ss.n_s}};
    }
    ctx.summary["spectra"] = per;
    ctx.emit(t, ctx.stem());
}

void run_capacity_vs_snr(Context &ctx)
{
    const auto &c = ctx.cfg;
    const PlanarArray ra = c.receive.to_array(c.wavelength), sa = c.source.to_array(c.wavelength);
    const CellGrid rx = CellGrid::build(ra), tx = CellGrid::build(sa);
    const int nr = ra.count(), ns = sa.count();
    std::vector<double> snr;
    for (double d : c.snr_db)
        snr.push_back(db_to_linear(d));

    Table t;
    t.columns = kCapacityColumns;
    json per = json::object();
    for (const auto &sp : c.spectra)
    {
        const auto t0 = Clock::now();
        const CouplingMatrix m = coupling_variances(sp.receive, sp.source, rx, tx, spectra_options(c));
        const SnrSweep sweep = capacity_snr_sweep(m, nr, ns, snr, c.trials, c.seed);
        for (std::size_t i = 0; i < snr.size(); ++i)
        {
            t.add(capacity_row(sp.name, c.receive.spacing_x, c.snr_db[i], nr, ns, sweep.csir[i], "monte-carlo"));
            t.add(capacity_row(sp.name, c.receive.spacing_x, c.snr_db[i], nr, ns, sweep.csit[i], "monte-carlo"));
            const auto as = capacity_asymptotic(m.separable->first, m.separable->second, nr, ns, snr[i], c.normalization);
            t.add(capacity_row(sp.name, c.receive.spacing_x, c.snr_db[i], nr, ns, as, "fixed-point"));
        }
        const auto ss = significant_set(m, c.fraction);
        per[sp.name] = {{"n_r", m.rows()}, {"n_s", m.cols()}, {"n_r_prime", ss.n_r}, {"n_s_prime", ss.n_s},
                        {"dof", std::min(ss.n_r, ss.n_s)}};
        ctx.durations["capacity_" + sp.name] = seconds_since(t0);
        ctx.log(sp.name + " done");
    }
    for (std::size_t i = 0; i < snr.size(); ++i)
    {
        std::string method;
        const auto iid = iid_baseline(c, nr, ns, snr[i], c.seed, method);
        t.add(capacity_row("iid", c.receive.spacing_x, c.snr_db[i], nr, ns, iid, method));
    }
    ctx.summary["spectra"] = per;
    ctx.emit(t, ctx.stem());
}

void run_estimate(Context &ctx)
{
    const auto &c = ctx.cfg;
    const PlanarArray ra = c.receive.to_array(c.wavelength), sa = c.source.to_array(c.wavelength);
    const CellGrid rx = CellGrid::build(ra), tx = CellGrid::build(sa);
    const FourierBasis br = build_basis(ra, rx.cells), bs = build_basis(sa, tx.cells);
    const MigrationFilter fr = migration_filter(rx.cells, ra, ra.z_plane, +1);
    const MigrationFilter fs = migration_filter(tx.cells, sa, sa.z_plane, -1);

    for (const auto &sp : c.spectra)
    {
        const auto t0 = Clock::now();
        const CouplingMatrix truth = coupling_variances(sp.receive, sp.source, rx, tx, spectra_options(c));
        const Eigen::MatrixXd sd = (truth.values.array() * (double(ra.count()) * sa.count())).sqrt();
        const CouplingMatrix est = estimate_variances(
            [&](int trial)
            {
                const AngularChannel ha = sample_angular(sd, derive_seed(c.seed, static_cast<std::uint64_t>(trial)));
                return assemble_spatial(ha, br, bs, fr, fs).h;
            },
            br, bs, c.trials);

        Table t;
        t.columns = {"lx", "ly", "mx", "my", "truth", "estimate", "relative_error"};
        double max_err = 0.0;
        int counted = 0;
        const double total = truth.total();
        for (Eigen::Index j = 0; j < truth.cols(); ++j)
            for (Eigen::Index i = 0; i < truth.rows(); ++i)
            {
                const double v = truth.values(i, j), e = est.values(i, j);
                const double rel = v > 0.0 ? std::abs(e - v) / v : std::numeric_limits<double>::infinity();
                if (v >= c.power_threshold * total)
                    max_err = std::max(max_err, rel), ++counted;
                t.add({std::int64_t{rx.cells[i].index.x}, std::int64_t{rx.cells[i].index.y},
                       std::int64_t{tx.cells[j].index.x}, std::int64_t{tx.cells[j].index.y}, v, e, rel});
            }
        ctx.summary[sp.name] = {{"trials", c.trials}, {"power_threshold", c.power_threshold},
                                {"entries_above_threshold", counted}, {"max_relative_error", max_err}};
        ctx.durations["estimate_" + sp.name] = seconds_since(t0);
        ctx.log(sp.name + ": max relative error " + format_number(max_err) + " over " + std::to_string(counted) +
                " entries");
        ctx.emit(t, ctx.stem(c.spectra.size() > 1 ? sp.name : ""), {{"spectrum", sp.name}});
    }
}

void run_generate(Context &ctx)
{
    const auto &c = ctx.cfg;
    const PlanarArray ra = c.receive.to_array(c.wavelength), sa = c.source.to_array(c.wavelength);
    const CellGrid rx = CellGrid::build(ra), tx = CellGrid::build(sa);
    const FourierBasis br = build_basis(ra, rx.cells), bs = build_basis(sa, tx.cells);
    const MigrationFilter fr = migration_filter(rx.cells, ra, ra.z_plane, +1);
    const MigrationFilter fs = migration_filter(tx.cells, sa, sa.z_plane, -1);

    for (const auto &sp : c.spectra)
    {
        const auto t0 = Clock::now();
        const CouplingMatrix m = coupling_variances(sp.receive, sp.source, rx, tx, spectra_options(c));
        const Eigen::MatrixXd sd = (m.values.array() * (double(ra.count()) * sa.count())).sqrt();
        std::vector<Eigen::MatrixXcd> channels(static_cast<std::size_t>(c.realizations));
#pragma omp parallel for schedule(dynamic, 1)
        for (int r = 0; r < c.realizations; ++r)
        {
            const AngularChannel ha = sample_angular(sd, derive_seed(c.seed, static_cast<std::uint64_t>(r)));
            channels[r] = c.spatial_domain ? assemble_spatial(ha, br, bs, fr, fs).h : ha.h;
        }
        const std::string stem = ctx.stem(c.spectra.size() > 1 ? sp.name : "");
        const auto bin = ctx.dir / (stem + ".hmc");
        write_channel_container(bin, channels);
        ctx.files.push_back(bin);
        ctx.outputs.push_back({{"path", bin.filename().string()},
                               {"format", "binary-container"},
                               {"realizations", c.realizations},
                               {"rows", channels.front().rows()},
                               {"cols", channels.front().cols()}});

        Table t;
        t.columns = {"realization", "row", "col", "re", "im"};
        double power = 0.0;
        for (int r = 0; r < c.realizations; ++r)
        {
            const auto &h = channels[r];
            for (Eigen::Index i = 0; i < h.rows(); ++i)
                for (Eigen::Index j = 0; j < h.cols(); ++j)
                    t.add({std::int64_t{r}, std::int64_t{i}, std::int64_t{j}, h(i, j).real(), h(i, j).imag()});
            power += h.squaredNorm();
        }
        const double scale = double(ra.count()) * sa.count();
        ctx.summary[sp.name] = {{"domain", c.spatial_domain ? "spatial" : "angular"},
                                {"realizations", c.realizations},
                                {"mean_normalized_power", power / (scale * c.realizations)}};
        ctx.durations["generate_" + sp.name] = seconds_since(t0);
        ctx.emit(t, stem, {{"spectrum", sp.name}});
    }
}

std::optional<std::uint64_t> env_seed()
{
    const char *s = std::getenv("HOLO_MIMO_SEED");
    if (!s || !*s)
        return std::nullopt;
    char *end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s, &end, 10);
    if (errno != 0 || *end != '\0' || s[0] == '-')
        throw ConfigError("HOLO_MIMO_SEED: expected a nonnegative integer");
    return static_cast<std::uint64_t>(v);
}
} // namespace

RunResult run(const ExperimentConfig &config, const RunOptions &options)
{
    const auto t_start = Clock::now();
    std::uint64_t seed = config.seed;
    if (const auto e = env_seed())
        seed = *e;
    if (options.seed)
        seed = *options.seed;
    std::string dir = config.output_dir;
    if (const char *e = std::getenv("HOLO_MIMO_OUT"); e && *e)
        dir = e;
    if (options.output_dir)
        dir = *options.output_dir;

    ExperimentConfig cfg = config;
    cfg.seed = seed;
    if (options.format)
        cfg.format = *options.format;

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw ConfigError("cannot create output directory " + dir + ": " + ec.message());

    Context ctx{cfg, seed, dir, cfg.format, options.quiet, json::array(), json::object(), json::object(), {}};
    switch (cfg.kind)
    {
    case ExperimentKind::kVariances:
        run_variances(ctx);
        break;
    case ExperimentKind::kEigenvalues:
        run_eigenvalues(ctx);
        break;
    case ExperimentKind::kCapacityVsSpacing:
        run_capacity_vs_spacing(ctx);
        break;
    case ExperimentKind::kCapacityVsSnr:
        run_capacity_vs_snr(ctx);
        break;
    case ExperimentKind::kEstimate:
        run_estimate(ctx);
        break;
    case ExperimentKind::kGenerate:
        run_generate(ctx);
        break;
    }
    ctx.durations["total"] = seconds_since(t_start);

    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(config.source_json.dump())));
    RunResult result;
    result.manifest = {{"tool", "holo-mimo"},
                       {"version", HOLO_MIMO_VERSION},
                       {"schema_version", kConfigSchemaVersion},
                       {"kind", to_string(cfg.kind)},
                       {"config_hash", std::string("fnv1a64:") + hash},
                       {"seed", seed},
                       {"preset", options.preset.empty() ? json(nullptr) : json(options.preset)},
                       {"outputs", ctx.outputs},
                       {"summary", ctx.summary},
                       {"durations", ctx.durations},
                       {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                             "." + std::to_string(EIGEN_MINOR_VERSION)}};
    result.manifest_path = std::filesystem::path(dir) / (cfg.basename + ".manifest.json");
    std::ofstream out(result.manifest_path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + result.manifest_path.string());
    out << result.manifest.dump(2) << '\n';
    result.outputs = ctx.files;
    ctx.log("manifest " + result.manifest_path.string());
    return result;
}

} // namespace holomimo
