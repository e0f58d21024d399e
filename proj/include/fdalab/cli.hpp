// SPDX-License-Identifier: Apache-2.0
//
// fdalab: reference-background residual laboratory for single-snapshot FDA-MIMO-GPR
// Copyright (C) 2026 The fdalab Authors
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


#ifndef FDALAB_CLI_HPP
#define FDALAB_CLI_HPP

#include "config.hpp"
#include "studies.hpp"
#include "table.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace fdalab
{
    enum ExitCode : int
    {
        exit_ok = 0,
        exit_failure = 1,
        exit_config = 2,
        exit_numerical = 3
    };

    /// Writes tables plus run_manifest.json into cfg.output_dir. Returns the written file names.
    inline std::vector<std::string> write_outputs(const ExperimentConfig &cfg, const std::vector<const Table *> &tables,
                                                  const std::string &subcommand, const std::string &format)
    {
        namespace fs = std::filesystem;
        const fs::path dir(cfg.output_dir);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec)
            throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
        std::vector<std::string> files;
        for (const Table *t : tables)
        {
            const std::string file = t->name + (format == "json" ? ".json" : ".csv");
            write_text_file(dir / file, format == "json" ? table_to_json(*t) : table_to_csv(*t));
            files.push_back(file);
        }
        nlohmann::ordered_json m;
        m["code_version"] = version_string;
        m["subcommand"] = subcommand;
        m["seed"] = cfg.master_seed;
        m["feedback_on"] = cfg.feedback_on;
        m["format"] = format;
        m["config_hash"] = config_hash(cfg);
        m["files"] = files;
        m["config"] = experiment_json(cfg);
        write_text_file(dir / "run_manifest.json", m.dump(2) + "\n");
        files.push_back("run_manifest.json");
        return files;
    }

    inline void print_scenes(const ExperimentConfig &cfg, std::ostream &out)
    {
        char line[256];
        std::snprintf(line, sizeof(line), "%-5s %-34s %10s %10s %10s %7s %10s\n", "scene", "medium", "eps_inf",
                      "delta_eps", "tau_s", "alpha", "sigma_S/m");
        out << line;
        for (const auto &s : scene_registry())
        {
            const ColeColeParams p = cfg.scene_background(s.id);
            std::snprintf(line, sizeof(line), "%-5s %-34s %10.4g %10.4g %10.4g %7.3g %10.4g\n",
                          std::string(s.tag).c_str(), std::string(s.medium).c_str(), p.eps_inf, p.delta_eps, p.tau,
                          p.alpha, p.sigma);
            out << line;
        }
    }

    /// Command-line entry point; returns the process exit code.
    inline int cli_main(int argc, const char *const *argv, std::ostream &out = std::cout, std::ostream &err = std::cerr)
    {
        CLI::App app{"fdalab: reference-background residual laboratory", "fdalab"};
        app.require_subcommand(1);
        app.fallthrough();

        std::string config_path, out_dir, feedback, format = "csv";
        std::optional<std::uint64_t> seed;
        app.add_option("--config", config_path, "JSON configuration file");
        app.add_option("--seed", seed, "master seed");
        app.add_option("--out", out_dir, "output directory");
        app.add_option("--feedback", feedback, "kernel feedback on|off")->check(CLI::IsMember({"on", "off"}));
        app.add_option("--format", format, "table format csv|json")->check(CLI::IsMember({"csv", "json"}));

        auto *observe = app.add_subcommand("observe", "observation-domain covariance study");
        auto *recon = app.add_subcommand("recon", "Tikhonov reconstruction study");
        auto *downstream = app.add_subcommand("downstream", "ideal-anomaly and whitening/detection study");
        auto *all = app.add_subcommand("all", "run every study");
        auto *validate = app.add_subcommand("validate-config", "check a configuration file");
        auto *scenes = app.add_subcommand("show-scenes", "print the background media registry");

        try
        {
            app.parse(argc, argv);
        }
        catch (const CLI::CallForHelp &)
        {
            out << app.help();
            return exit_ok;
        }
        catch (const CLI::ParseError &e)
        {
            err << "error: " << e.what() << "\n" << app.help();
            return exit_config;
        }

        try
        {
            ExperimentConfig cfg;
            if (!config_path.empty())
                cfg = load_config(config_path);
            else if (validate->parsed())
                throw ConfigError("validate-config requires --config PATH");
            if (seed)
                cfg.master_seed = *seed;
            if (!out_dir.empty())
                cfg.output_dir = out_dir;
            if (!feedback.empty())
                cfg.feedback_on = feedback == "on";
            cfg.validate();

            if (validate->parsed())
            {
                out << "config ok (hash " << config_hash(cfg) << ")\n";
                return exit_ok;
            }
            if (scenes->parsed())
            {
                print_scenes(cfg, out);
                return exit_ok;
            }

            std::vector<Table> tables;
            std::string name;
            if (observe->parsed() || all->parsed())
                tables.push_back(run_observation_study(cfg));
            if (recon->parsed() || all->parsed())
            {
                auto r = run_recon_study(cfg);
                tables.push_back(std::move(r.lambda));
                tables.push_back(std::move(r.coding));
                tables.push_back(std::move(r.summary));
            }
            if (downstream->parsed() || all->parsed())
            {
                auto d = run_downstream_study(cfg);
                tables.push_back(std::move(d.ideal));
                tables.push_back(std::move(d.whitening));
            }
            for (auto *sc : {observe, recon, downstream, all})
                if (sc->parsed())
                    name = sc->get_name();
            std::vector<const Table *> ptrs;
            for (const auto &t : tables)
                ptrs.push_back(&t);
            for (const auto &f : write_outputs(cfg, ptrs, name, format))
                out << (std::filesystem::path(cfg.output_dir) / f).string() << "\n";
            return exit_ok;
        }
        catch (const ConfigError &e)
        {
            err << "config error: " << e.what() << "\n";
            return exit_config;
        }
        catch (const NumericalError &e)
        {
            err << "numerical error: " << e.what() << "\n";
            return exit_numerical;
        }
        catch (const DomainError &e)
        {
            err << "numerical error: " << e.what() << "\n";
            return exit_numerical;
        }
        catch (const std::exception &e)
        {
            err << "error: " << e.what() << "\n";
            return exit_failure;
        }
    }

} // namespace fdalab

#endif // FDALAB_CLI_HPP
