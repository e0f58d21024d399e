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


#ifndef FDALAB_CONFIG_HPP
#define FDALAB_CONFIG_HPP

#include "common.hpp"
#include "forward.hpp"
#include "grid.hpp"
#include "media.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fdalab
{
    inline constexpr const char *version_string = "0.1.0";

    /// Sweep definition shared by every study.
    struct ExperimentConfig
    {
        std::vector<SceneId> scenes{all_scenes.begin(), all_scenes.end()};
        std::map<SceneId, ColeColeParams> scene_params; ///< overrides of the built-in registry
        std::vector<ReferenceKind> references{ReferenceKind::R0, ReferenceKind::R1, ReferenceKind::R2};
        std::vector<PatternTag> patterns{PatternTag::C1, PatternTag::C2, PatternTag::C3, PatternTag::C4};
        std::vector<std::size_t> permutation = default_permutation(); ///< 1-based
        std::vector<double> delta_f_list{1e4, 1e5, 1e6};
        std::vector<double> lambda_list{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
        std::size_t L_cov = 1000;
        std::size_t L_recon = 512;
        std::uint64_t master_seed = 0;
        bool feedback_on = true;
        std::string output_dir = "fdalab_out";

        // operating point of the single-case studies
        PatternTag design_pattern = PatternTag::C1;
        double design_delta_f = 1e5;
        double design_lambda = 0.1;

        // geometry and coding
        double f_c = 1e8;
        std::size_t N = 6;
        std::size_t M = 8;
        double spacing = 0.1;
        double array_z = -0.1;
        Grid::Box domain{-1.5, 1.5, 0.2, 2.0};
        std::size_t nx = 12, nz = 12;
        Grid::Box anomaly{-0.5, 0.5, 0.6, 1.4};

        // residual law
        MismatchBias bias{};
        ColeColeParams generic = default_generic_medium;
        std::array<double, 5> rel_std = default_rel_std;

        ColeColeParams scene_background(SceneId s) const
        {
            const auto it = scene_params.find(s);
            return it != scene_params.end() ? it->second : scene_info(s).params;
        }

        ReferenceSpec reference_spec(ReferenceKind k) const { return {k, bias, generic}; }

        Grid grid() const { return Grid::regular(domain, nx, nz, anomaly); }

        ArrayGeometry array() const { return ArrayGeometry::uniform(N, M, spacing, array_z); }

        CodingPattern pattern(PatternTag t) const { return {t, permutation}; }

        std::vector<CodedChannel> channels(PatternTag t, double delta_f) const
        {
            return coding_path(pattern(t), N, f_c, delta_f, {0.0, array_z}, {spacing, 0.0});
        }

        void validate() const;
        nlohmann::json to_json() const;
        static ExperimentConfig from_json(const nlohmann::json &j);
    };

    namespace detail
    {
        [[noreturn]] inline void bad_key(const std::string &key, const std::string &what)
        {
            throw ConfigError("config key '" + key + "': " + what);
        }

        template <class T>
        T get_as(const nlohmann::json &j, const std::string &key)
        {
            try
            {
                return j.get<T>();
            }
            catch (const nlohmann::json::exception &)
            {
                bad_key(key, "unexpected value type");
            }
        }

        inline ColeColeParams params_from_json(const nlohmann::json &j, const std::string &key)
        {
            if (!j.is_object())
                bad_key(key, "expected an object with eps_inf, delta_eps, tau, alpha, sigma");
            std::array<double, 5> v{};
            std::size_t seen = 0;
            for (const auto &[k, val] : j.items())
            {
                std::size_t i = 0;
                while (i < 5 && ColeColeParams::names[i] != k)
                    ++i;
                if (i == 5)
                    bad_key(key + "." + k, "unknown parameter");
                v[i] = get_as<double>(val, key + "." + k);
                ++seen;
            }
            if (seen != 5)
                bad_key(key, "all five Cole-Cole parameters are required");
            return ColeColeParams::from_array(v);
        }

        inline nlohmann::json params_to_json(const ColeColeParams &p)
        {
            nlohmann::json j;
            const auto a = p.to_array();
            for (std::size_t i = 0; i < 5; ++i)
                j[std::string(ColeColeParams::names[i])] = a[i];
            return j;
        }

        inline Grid::Box box_from_json(const nlohmann::json &j, const std::string &key)
        {
            if (!j.is_array() || j.size() != 4)
                bad_key(key, "expected [x_min, x_max, z_min, z_max]");
            return {get_as<double>(j[0], key), get_as<double>(j[1], key), get_as<double>(j[2], key),
                    get_as<double>(j[3], key)};
        }

        inline std::uint64_t fnv1a(const std::string &s)
        {
            std::uint64_t h = 14695981039346656037ull;
            for (unsigned char c : s)
            {
                h ^= c;
                h *= 1099511628211ull;
            }
            return h;
        }
    } // namespace detail

    inline void ExperimentConfig::validate() const
    {
        using detail::bad_key;
        auto distinct = [](const auto &v) { return std::set(v.begin(), v.end()).size() == v.size(); };
        if (scenes.empty())
            bad_key("scenes", "list must not be empty");
        if (references.empty())
            bad_key("references", "list must not be empty");
        if (patterns.empty())
            bad_key("patterns", "list must not be empty");
        if (delta_f_list.empty())
            bad_key("delta_f_list", "list must not be empty");
        for (double df : delta_f_list)
            if (!(df > 0.0) || !std::isfinite(df))
                bad_key("delta_f_list", "entries must be positive and finite");
        if (lambda_list.empty())
            bad_key("lambda_list", "list must not be empty");
        for (double l : lambda_list)
            if (!(l > 0.0) || !std::isfinite(l))
                bad_key("lambda_list", "entries must be positive and finite");
        if (L_cov < 2)
            bad_key("L_cov", "must be at least 2");
        if (L_recon < 2)
            bad_key("L_recon", "must be at least 2");
        if (!(design_lambda > 0.0) || !std::isfinite(design_lambda))
            bad_key("design_lambda", "must be positive and finite");
        if (!(design_delta_f > 0.0) || !std::isfinite(design_delta_f))
            bad_key("design_delta_f", "must be positive and finite");
        if (!(f_c > 0.0) || !std::isfinite(f_c))
            bad_key("f_c", "must be positive and finite");
        if (N == 0)
            bad_key("N", "must be positive");
        if (M == 0)
            bad_key("M", "must be positive");
        if (!(spacing > 0.0) || !std::isfinite(spacing))
            bad_key("spacing", "must be positive and finite");
        if (!(array_z < 0.0))
            bad_key("array_z", "array must lie above the interface (z < 0)");
        if (output_dir.empty())
            bad_key("output_dir", "must not be empty");
        if (!bias.finite())
            bad_key("bias", "entries must be finite");
        if (!generic.admissible())
            bad_key("generic_medium", "must be physically admissible");
        for (double s : rel_std)
            if (!(s >= 0.0) || !std::isfinite(s))
                bad_key("rel_std", "entries must be finite and nonnegative");
        for (const auto &[s, p] : scene_params)
            if (!p.admissible())
                bad_key("scene_params." + std::string(to_string(s)), "must be physically admissible");
        if (!distinct(lambda_list))
            bad_key("lambda_list", "entries must be distinct");
        if (!distinct(delta_f_list))
            bad_key("delta_f_list", "entries must be distinct");
        if (!distinct(scenes))
            bad_key("scenes", "entries must be distinct");
        if (!distinct(references))
            bad_key("references", "entries must be distinct");
        if (!distinct(patterns))
            bad_key("patterns", "entries must be distinct");
        const bool uses_c4 = design_pattern == PatternTag::C4 ||
                             std::find(patterns.begin(), patterns.end(), PatternTag::C4) != patterns.end();
        if (uses_c4)
        {
            try
            {
                pattern(PatternTag::C4).resolved_permutation(N);
            }
            catch (const ConfigError &e)
            {
                bad_key("permutation", e.what());
            }
        }
        for (double df : delta_f_list)
            if (std::abs(centered_index(1, N) * df) >= f_c)
                bad_key("delta_f_list", "frequency offsets must stay below f_c");
        if (std::abs(centered_index(1, N) * design_delta_f) >= f_c)
            bad_key("design_delta_f", "frequency offsets must stay below f_c");
        try
        {
            grid();
        }
        catch (const ConfigError &e)
        {
            bad_key("grid", e.what());
        }
    }

    inline nlohmann::json ExperimentConfig::to_json() const
    {
        nlohmann::json j;
        for (auto s : scenes)
            j["scenes"].push_back(std::string(to_string(s)));
        j["scene_params"] = nlohmann::json::object();
        for (const auto &[s, p] : scene_params)
            j["scene_params"][std::string(to_string(s))] = detail::params_to_json(p);
        for (auto r : references)
            j["references"].push_back(std::string(to_string(r)));
        for (auto p : patterns)
            j["patterns"].push_back(std::string(to_string(p)));
        j["permutation"] = permutation;
        j["delta_f_list"] = delta_f_list;
        j["lambda_list"] = lambda_list;
        j["L_cov"] = L_cov;
        j["L_recon"] = L_recon;
        j["master_seed"] = master_seed;
        j["feedback_on"] = feedback_on;
        j["output_dir"] = output_dir;
        j["design_pattern"] = std::string(to_string(design_pattern));
        j["design_delta_f"] = design_delta_f;
        j["design_lambda"] = design_lambda;
        j["f_c"] = f_c;
        j["N"] = N;
        j["M"] = M;
        j["spacing"] = spacing;
        j["array_z"] = array_z;
        j["grid"] = {{"domain", {domain.x_min, domain.x_max, domain.z_min, domain.z_max}},
                     {"nx", nx},
                     {"nz", nz},
                     {"anomaly", {anomaly.x_min, anomaly.x_max, anomaly.z_min, anomaly.z_max}}};
        j["bias"] = {{"eps_inf_rel", bias.eps_inf_rel},
                     {"delta_eps_rel", bias.delta_eps_rel},
                     {"tau_factor", bias.tau_factor},
                     {"alpha_add", bias.alpha_add},
                     {"sigma_factor", bias.sigma_factor}};
        j["generic_medium"] = detail::params_to_json(generic);
        j["rel_std"] = rel_std;
        return j;
    }

    inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json &j)
    {
        using detail::bad_key;
        using detail::get_as;
        if (!j.is_object())
            throw ConfigError("config: top level must be an object");
        ExperimentConfig c;
        auto list = [&](const nlohmann::json &v, const std::string &key) {
            if (!v.is_array())
                bad_key(key, "expected a list");
            return v;
        };
        for (const auto &[key, v] : j.items())
        {
            try
            {
                if (key == "scenes")
                {
                    c.scenes.clear();
                    for (const auto &s : list(v, key))
                        c.scenes.push_back(parse_scene(get_as<std::string>(s, key)));
                }
                else if (key == "scene_params")
                {
                    if (!v.is_object())
                        bad_key(key, "expected an object keyed by scene tag");
                    for (const auto &[tag, p] : v.items())
                        c.scene_params[parse_scene(tag)] = detail::params_from_json(p, key + "." + tag);
                }
                else if (key == "references")
                {
                    c.references.clear();
                    for (const auto &s : list(v, key))
                        c.references.push_back(parse_reference(get_as<std::string>(s, key)));
                }
                else if (key == "patterns")
                {
                    c.patterns.clear();
                    for (const auto &s : list(v, key))
                        c.patterns.push_back(parse_pattern(get_as<std::string>(s, key)));
                }
                else if (key == "permutation")
                    c.permutation = get_as<std::vector<std::size_t>>(list(v, key), key);
                else if (key == "delta_f_list")
                    c.delta_f_list = get_as<std::vector<double>>(list(v, key), key);
                else if (key == "lambda_list")
                    c.lambda_list = get_as<std::vector<double>>(list(v, key), key);
                else if (key == "L_cov")
                    c.L_cov = get_as<std::size_t>(v, key);
                else if (key == "L_recon")
                    c.L_recon = get_as<std::size_t>(v, key);
                else if (key == "master_seed")
                    c.master_seed = get_as<std::uint64_t>(v, key);
                else if (key == "feedback_on")
                    c.feedback_on = get_as<bool>(v, key);
                else if (key == "output_dir")
                    c.output_dir = get_as<std::string>(v, key);
                else if (key == "design_pattern")
                    c.design_pattern = parse_pattern(get_as<std::string>(v, key));
                else if (key == "design_delta_f")
                    c.design_delta_f = get_as<double>(v, key);
                else if (key == "design_lambda")
                    c.design_lambda = get_as<double>(v, key);
                else if (key == "f_c")
                    c.f_c = get_as<double>(v, key);
                else if (key == "N")
                    c.N = get_as<std::size_t>(v, key);
                else if (key == "M")
                    c.M = get_as<std::size_t>(v, key);
                else if (key == "spacing")
                    c.spacing = get_as<double>(v, key);
                else if (key == "array_z")
                    c.array_z = get_as<double>(v, key);
                else if (key == "grid")
                {
                    if (!v.is_object())
                        bad_key(key, "expected an object");
                    for (const auto &[gk, gv] : v.items())
                    {
                        const std::string full = key + "." + gk;
                        if (gk == "domain")
                            c.domain = detail::box_from_json(gv, full);
                        else if (gk == "anomaly")
                            c.anomaly = detail::box_from_json(gv, full);
                        else if (gk == "nx")
                            c.nx = get_as<std::size_t>(gv, full);
                        else if (gk == "nz")
                            c.nz = get_as<std::size_t>(gv, full);
                        else
                            bad_key(full, "unknown key");
                    }
                }
                else if (key == "bias")
                {
                    if (!v.is_object())
                        bad_key(key, "expected an object");
                    for (const auto &[bk, bv] : v.items())
                    {
                        const std::string full = key + "." + bk;
                        const double x = get_as<double>(bv, full);
                        if (bk == "eps_inf_rel")
                            c.bias.eps_inf_rel = x;
                        else if (bk == "delta_eps_rel")
                            c.bias.delta_eps_rel = x;
                        else if (bk == "tau_factor")
                            c.bias.tau_factor = x;
                        else if (bk == "alpha_add")
                            c.bias.alpha_add = x;
                        else if (bk == "sigma_factor")
                            c.bias.sigma_factor = x;
                        else
                            bad_key(full, "unknown key");
                    }
                }
                else if (key == "generic_medium")
                    c.generic = detail::params_from_json(v, key);
                else if (key == "rel_std")
                {
                    const auto r = get_as<std::vector<double>>(list(v, key), key);
                    if (r.size() != 5)
                        bad_key(key, "expected five entries");
                    std::copy(r.begin(), r.end(), c.rel_std.begin());
                }
                else
                    bad_key(key, "unknown key");
            }
            catch (const ConfigError &e)
            {
                const std::string msg = e.what();
                if (msg.rfind("config key", 0) == 0)
                    throw;
                bad_key(key, msg);
            }
        }
        c.validate();
        return c;
    }

    inline ExperimentConfig load_config(const std::string &path)
    {
        std::ifstream in(path);
        if (!in)
            throw ConfigError("cannot open config file '" + path + "'");
        nlohmann::json j;
        try
        {
            j = nlohmann::json::parse(in, nullptr, true, true);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
        }
        return ExperimentConfig::from_json(j);
    }

    /// Configuration without the output location, as recorded in run manifests.
    inline nlohmann::json experiment_json(const ExperimentConfig &c)
    {
        nlohmann::json j = c.to_json();
        j.erase("output_dir");
        return j;
    }

    /// FNV-1a over the canonical JSON dump (keys sorted), output location excluded.
    inline std::string config_hash(const ExperimentConfig &c)
    {
        char buf[17];
        std::snprintf(buf, sizeof(buf), "%016llx",
                      static_cast<unsigned long long>(detail::fnv1a(experiment_json(c).dump())));
        return buf;
    }

} // namespace fdalab

#endif // FDALAB_CONFIG_HPP
