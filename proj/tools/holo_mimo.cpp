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

// holo-mimo command line front end.
//
//   holo-mimo run <config.json> [--seed N] [--out DIR] [--format csv|json]
//   holo-mimo preset <name> [--print] [--seed N] [--out DIR] [--format csv|json]
//   holo-mimo preset --list
//
// Exit codes: 0 success, 1 configuration error, 2 numerical failure.

#include "holomimo/errors.hpp"
#include "holomimo/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace
{
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;

holomimo::OutputFormat parse_format(const std::string &s)
{
    if (s == "csv")
        return holomimo::OutputFormat::kCsv;
    if (s == "json")
        return holomimo::OutputFormat::kJson;
    throw holomimo::ConfigError("--format: expected csv or json");
}

struct Common
{
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> format;
    bool quiet = false;

    void attach(CLI::App *cmd)
    {
        cmd->add_option("--seed", seed, "Master seed (overrides HOLO_MIMO_SEED and the config)");
        cmd->add_option("--out", out, "Output directory (overrides HOLO_MIMO_OUT and the config)");
        cmd->add_option("--format", format, "Data format")->check(CLI::IsMember({"csv", "json"}));
        cmd->add_flag("-q,--quiet", quiet, "Suppress progress messages");
    }

    holomimo::RunOptions options(const std::string &preset) const
    {
        holomimo::RunOptions o;
        o.seed = seed;
        o.output_dir = out;
        if (format)
            o.format = parse_format(*format);
        o.preset = preset;
        o.quiet = quiet;
        return o;
    }
};

void report(const holomimo::RunResult &r)
{
    for (const auto &p : r.outputs)
        std::cout << p.string() << '\n';
    std::cout << r.manifest_path.string() << '\n';
}
} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Fourier plane-wave synthesis of holographic MIMO channels"};
    app.set_version_flag("--version", HOLO_MIMO_VERSION_STRING);
    app.require_subcommand(1);

    Common run_opts, preset_opts;
    std::string config_path, preset_name;
    bool print = false, list = false;

    CLI::App *run = app.add_subcommand("run", "Run an experiment described by a JSON config");
    run->add_option("config", config_path, "Config file")->required();
    run_opts.attach(run);

    CLI::App *preset = app.add_subcommand("preset", "Run or print a shipped preset");
    preset->add_option("name", preset_name, "Preset name (fig3, fig4a, fig4b, fig5, fig6, fig7)");
    preset->add_flag("--print", print, "Print the preset config instead of running it");
    preset->add_flag("--list", list, "List the available presets");
    preset_opts.attach(preset);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try
    {
        if (run->parsed())
        {
            const auto cfg = holomimo::ExperimentConfig::load(config_path);
            report(holomimo::run(cfg, run_opts.options("")));
            return 0;
        }
        if (list)
        {
            for (const auto &n : holomimo::preset_names())
                std::cout << n << '\n';
            return 0;
        }
        if (preset_name.empty())
            throw holomimo::ConfigError("preset: missing preset name (see --list)");
        const std::string text = holomimo::preset_text(preset_name);
        if (print)
        {
            std::cout << text;
            return 0;
        }
        const auto cfg = holomimo::ExperimentConfig::parse_text(text);
        report(holomimo::run(cfg, preset_opts.options(preset_name)));
        return 0;
    }
    catch (const holomimo::ConfigError &e)
    {
        std::cerr << "holo-mimo: config error: " << e.what() << '\n';
        return kExitConfig;
    }
    catch (const holomimo::QuadratureError &e)
    {
        std::cerr << "holo-mimo: numerical failure: " << e.what() << " (best estimate " << e.best_estimate()
                  << ", error bound " << e.error_bound() << ")\n";
        return kExitNumeric;
    }
    catch (const std::exception &e)
    {
        std::cerr << "holo-mimo: numerical failure: " << e.what() << '\n';
        return kExitNumeric;
    }
}
