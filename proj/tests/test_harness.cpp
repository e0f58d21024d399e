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


#include <catch2/catch_amalgamated.hpp>

#include "fdalab/cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

using namespace fdalab;
using Catch::Matchers::ContainsSubstring;

static ExperimentConfig small_config()
{
    ExperimentConfig c;
    c.scenes = {SceneId::S3, SceneId::S4};
    c.patterns = {PatternTag::C1, PatternTag::C3};
    c.delta_f_list = {1e4, 1e5};
    c.lambda_list = {1e-3, 1e-1, 10.0};
    c.L_cov = 24;
    c.L_recon = 16;
    c.master_seed = 3;
    c.nx = 6;
    c.nz = 6;
    return c;
}

/// Value of `metric` in the row whose formatted keys start with `prefix`.
static std::optional<double> lookup(const Table &t, const std::vector<std::string> &prefix, const std::string &metric)
{
    const auto col = t.column(metric);
    for (const auto &r : t.rows)
    {
        bool match = true;
        for (std::size_t i = 0; i < prefix.size() && match; ++i)
            match = format_key(r.keys[i]) == prefix[i];
        if (match)
            return r.values[col];
    }
    throw std::runtime_error("row not found");
}

static std::string run_cli(std::vector<std::string> args, int &code, std::string *err_text = nullptr)
{
    args.insert(args.begin(), "fdalab");
    std::vector<const char *> argv;
    for (const auto &a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    code = cli_main(int(argv.size()), argv.data(), out, err);
    if (err_text)
        *err_text = err.str();
    return out.str();
}

static std::string slurp(const std::filesystem::path &p)
{
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

// ================================================================================================
// Configuration
// ================================================================================================

TEST_CASE("Config - defaults")
{
    const ExperimentConfig c;
    CHECK_NOTHROW(c.validate());
    CHECK(c.L_cov == 1000);
    CHECK(c.L_recon == 512);
    CHECK(c.delta_f_list == std::vector<double>{1e4, 1e5, 1e6});
    CHECK(c.lambda_list == std::vector<double>{1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0});
    CHECK(c.grid().size() == 144);
    CHECK(c.grid().anomaly_size() == 20);
}

TEST_CASE("Config - errors name the offending key")
{
    auto msg = [](const std::string &text) {
        try
        {
            ExperimentConfig::from_json(nlohmann::json::parse(text));
        }
        catch (const ConfigError &e)
        {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK_THAT(msg(R"({"lambda_list": [0.1, -1]})"), ContainsSubstring("'lambda_list'"));
    CHECK_THAT(msg(R"({"lambda_list": []})"), ContainsSubstring("'lambda_list'"));
    CHECK_THAT(msg(R"({"lambda_list": [0.1, 0.1]})"), ContainsSubstring("'lambda_list'"));
    CHECK_THAT(msg(R"({"L_cov": 1})"), ContainsSubstring("'L_cov'"));
    CHECK_THAT(msg(R"({"L_recon": "many"})"), ContainsSubstring("'L_recon'"));
    CHECK_THAT(msg(R"({"bogus": 1})"), ContainsSubstring("'bogus'"));
    CHECK_THAT(msg(R"({"scenes": ["S9"]})"), ContainsSubstring("'scenes'"));
    CHECK_THAT(msg(R"({"grid": {"nx": "wide"}})"), ContainsSubstring("'grid.nx'"));
    CHECK_THAT(msg(R"({"bias": {"eps_inf_rel": 0.1, "sigma": 1}})"), ContainsSubstring("'bias.sigma'"));
    CHECK_THAT(msg(R"({"permutation": [1, 1, 2, 3, 4, 5]})"), ContainsSubstring("'permutation'"));
    CHECK_THAT(msg(R"({"delta_f_list": [5e7]})"), ContainsSubstring("'delta_f_list'"));
    CHECK_THAT(msg(R"({"generic_medium": {"eps_inf": 5}})"), ContainsSubstring("'generic_medium'"));
    CHECK_THAT(msg(R"({"array_z": 0.1})"), ContainsSubstring("'array_z'"));
    CHECK_THAT(msg(R"([1, 2])"), ContainsSubstring("top level"));
}

TEST_CASE("Config - JSON round trip and hash")
{
    ExperimentConfig c = small_config();
    c.scene_params[SceneId::S4] = {2.5, 30.0, 5e-12, 0.2, 0.05};
    const auto back = ExperimentConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16);
    CHECK(back.scene_background(SceneId::S4).sigma == 0.05);
    CHECK(back.scene_background(SceneId::S3) == scene_info(SceneId::S3).params);

    ExperimentConfig d = c;
    d.master_seed = 4;
    CHECK(config_hash(d) != config_hash(c));
    d = c;
    d.output_dir = "elsewhere";
    CHECK(config_hash(d) == config_hash(c));
    CHECK(config_hash(ExperimentConfig{}) == config_hash(ExperimentConfig{}));
}

TEST_CASE("Config - file loading")
{
    const auto dir = std::filesystem::temp_directory_path() / "fdalab_cfg_test";
    std::filesystem::create_directories(dir);
    write_text_file(dir / "ok.json", "{\n  // comments are allowed\n  \"master_seed\": 11\n}\n");
    CHECK(load_config((dir / "ok.json").string()).master_seed == 11);
    write_text_file(dir / "broken.json", "{ \"master_seed\": ");
    CHECK_THROWS_AS(load_config((dir / "broken.json").string()), ConfigError);
    CHECK_THROWS_AS(load_config((dir / "missing.json").string()), ConfigError);
    std::filesystem::remove_all(dir);
}

// ================================================================================================
// Tables and seeding
// ================================================================================================

TEST_CASE("Table - formatting and ordering")
{
    Table t{"demo", {"scene", "lambda"}, {"a", "b"}, {}};
    t.add({{std::string("S2"), 0.1}, {1.5, std::nullopt}});
    t.add({{std::string("S1"), KeyValue{}}, {0.1, std::numeric_limits<double>::infinity()}});
    t.sort_rows();
    CHECK(table_to_csv(t) == "scene,lambda,a,b\nS1,null,0.10000000000000001,inf\nS2,0.10000000000000001,1.5,null\n");
    const auto j = nlohmann::json::parse(table_to_json(t));
    CHECK(j[0]["lambda"].is_null());
    CHECK(j[0]["b"] == "inf");
    CHECK(j[1]["b"].is_null());
    CHECK(j[1]["a"] == 1.5);

    t.add({{std::string("S1"), KeyValue{}}, {0.0, 0.0}});
    CHECK_THROWS(t.sort_rows());
    CHECK_THROWS(t.add({{std::string("S1")}, {0.0, 0.0}}));
}

TEST_CASE("Table - median")
{
    CHECK(*median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(*median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK_FALSE(median({}).has_value());
}

TEST_CASE("Seeding - per-sample streams")
{
    const auto a = stream_seed(7, 0, 1, 2, 1e5, 10);
    CHECK(a == stream_seed(7, 0, 1, 2, 1e5, 10));
    CHECK(a != stream_seed(8, 0, 1, 2, 1e5, 10));
    CHECK(a != stream_seed(7, 1, 1, 2, 1e5, 10));
    CHECK(a != stream_seed(7, 0, 2, 2, 1e5, 10));
    CHECK(a != stream_seed(7, 0, 1, 3, 1e5, 10));
    CHECK(a != stream_seed(7, 0, 1, 2, 1e4, 10));
    CHECK(a != stream_seed(7, 0, 1, 2, 1e5, 11));
    // swapping coordinates must not collide
    CHECK(stream_seed(7, 1, 2, 0, 1e5, 0) != stream_seed(7, 2, 1, 0, 1e5, 0));
}

TEST_CASE("Seeding - draws do not depend on the sweep")
{
    ExperimentConfig a = small_config();
    ExperimentConfig b = small_config();
    b.scenes = {SceneId::S4};
    b.patterns = {PatternTag::C3};
    const CaseKey k{SceneId::S4, ReferenceKind::R1, PatternTag::C3, 1e5};
    const CaseSetup ca(a, k), cb(b, k);
    CHECK(ca.draw(a, 5) == cb.draw(b, 5));
    const CVec x = ca.responses(a, 3, 2)[1].stacked(), y = cb.responses(b, 4, 1)[0].stacked();
    CHECK((x - y).norm() <= 1e-13 * x.norm());
}

TEST_CASE("Work pool - lowest failing index is reported")
{
    std::vector<int> hit(50, 0);
    parallel_for(50, [&](std::size_t i) { hit[i] = 1; });
    CHECK(std::count(hit.begin(), hit.end(), 1) == 50);
    try
    {
        parallel_for(10, [](std::size_t i) {
            if (i == 3 || i == 7)
                throw std::runtime_error("fail " + std::to_string(i));
        });
        FAIL("no exception");
    }
    catch (const std::runtime_error &e)
    {
        CHECK(std::string(e.what()) == "fail 3");
    }
}

// ================================================================================================
// Studies
// ================================================================================================

TEST_CASE("Studies - observation table")
{
    const auto cfg = small_config();
    const Table t = run_observation_study(cfg);
    CHECK(t.rows.size() == 2 * 3 * 2 * 2);
    CHECK(table_to_csv(t) == table_to_csv(run_observation_study(cfg)));

    for (const char *s : {"S3", "S4"})
        for (const char *p : {"C1", "C3"})
        {
            const std::vector<std::string> r0{s, "R0", p, "100000"};
            CHECK(*lookup(t, r0, "param_diff_norm") == 0.0);
            CHECK(*lookup(t, r0, "c_norm") == 0.0);
            CHECK_FALSE(lookup(t, r0, "D_f").has_value());
            CHECK(*lookup(t, r0, "trace") > 0.0);
            CHECK(*lookup(t, {s, "R2", p, "100000"}, "c_norm") > *lookup(t, {s, "R1", p, "100000"}, "c_norm"));
        }
}

TEST_CASE("Studies - reconstruction tables")
{
    const auto cfg = small_config();
    const auto r = run_recon_study(cfg);
    CHECK(r.lambda.rows.size() == 2 * 3 * 2 * 2 * 3);
    CHECK(r.coding.rows.size() == 2 * 3 * 2 * 2);

    const auto g = r.lambda.column("G_norm");
    const auto route = r.lambda.column("route_discrepancy");
    std::map<std::string, double> last;
    for (const auto &row : r.lambda.rows)
    {
        const std::string key = format_key(row.keys[0]) + format_key(row.keys[1]) + format_key(row.keys[2]) +
                                format_key(row.keys[3]);
        if (last.count(key))
            CHECK(*row.values[g] <= last[key]);
        last[key] = *row.values[g];
        if (row.values[route])
            CHECK(*row.values[route] < 1e-10);
    }

    for (const char *s : {"S3", "S4"})
        for (const char *ref : {"R1", "R2"})
            for (const char *df : {"10000", "100000"})
                CHECK(*lookup(r.coding, {s, ref, "C3", df}, "rho_path") >=
                      *lookup(r.coding, {s, ref, "C1", df}, "rho_path"));

    // every metric of both per-case tables shows up in the pooled summary exactly once
    std::size_t pooled = 0;
    for (const auto &row : r.summary.rows)
        if (format_key(row.keys[2]) == "pooled")
            ++pooled;
    CHECK(pooled == r.lambda.metric_columns.size() + r.coding.metric_columns.size());
}

TEST_CASE("Studies - downstream tables")
{
    auto cfg = small_config();
    const auto d = run_downstream_study(cfg);
    CHECK(d.ideal.rows.size() == 2 * 3 * 2);
    CHECK(d.whitening.rows.size() == 2 * 3 * 3);

    for (const char *s : {"S3", "S4"})
        CHECK(*lookup(d.ideal, {s, "R0", "C1", "100000", "0.10000000000000001", "3", "point"}, "eps_loc") == 0.0);

    // the three covariance kinds share the case key tuple
    std::map<std::string, int> per_case;
    for (const auto &row : d.whitening.rows)
    {
        std::string k;
        for (std::size_t i = 0; i + 1 < row.keys.size(); ++i)
            k += format_key(row.keys[i]) + "|";
        ++per_case[k];
    }
    CHECK(per_case.size() == 6);
    for (const auto &[k, n] : per_case)
        CHECK(n == 3);
}

TEST_CASE("Studies - matched reference has lower NMSE than the generic reference")
{
    const auto d = run_downstream_study(small_config());
    for (const char *s : {"S3", "S4"})
    {
        INFO(s);
        CHECK(*lookup(d.ideal, {s, "R0", "C1", "100000", "0.10000000000000001", "3", "point"}, "nmse") <
              *lookup(d.ideal, {s, "R2", "C1", "100000", "0.10000000000000001", "3", "point"}, "nmse"));
    }
}

TEST_CASE("Studies - feedback switch changes mismatched responses only")
{
    auto on = small_config();
    on.scenes = {SceneId::S4};
    on.patterns = {PatternTag::C1};
    on.delta_f_list = {1e5};
    auto off = on;
    off.feedback_on = false;
    const Table a = run_observation_study(on), b = run_observation_study(off);
    CHECK(*lookup(a, {"S4", "R0", "C1", "100000"}, "c_norm") == *lookup(b, {"S4", "R0", "C1", "100000"}, "c_norm"));
    CHECK(*lookup(a, {"S4", "R2", "C1", "100000"}, "c_norm") != *lookup(b, {"S4", "R2", "C1", "100000"}, "c_norm"));
}

// ================================================================================================
// Command line
// ================================================================================================

TEST_CASE("CLI - exit codes")
{
    int code = -1;
    std::string err;
    const auto scenes = run_cli({"show-scenes"}, code);
    CHECK(code == exit_ok);
    CHECK_THAT(scenes, ContainsSubstring("pure water ice"));

    run_cli({"show-scenes", "--bogus"}, code, &err);
    CHECK(code == exit_config);
    run_cli({}, code);
    CHECK(code == exit_config);
    run_cli({"validate-config"}, code, &err);
    CHECK(code == exit_config);
    run_cli({"observe", "--feedback", "maybe"}, code);
    CHECK(code == exit_config);

    const auto dir = std::filesystem::temp_directory_path() / "fdalab_cli_test";
    std::filesystem::create_directories(dir);
    write_text_file(dir / "bad.json", R"({"lambda_list": [0.1, -2]})");
    run_cli({"validate-config", "--config", (dir / "bad.json").string()}, code, &err);
    CHECK(code == exit_config);
    CHECK_THAT(err, ContainsSubstring("lambda_list"));

    write_text_file(dir / "ok.json", R"({"scenes": ["S1"]})");
    const auto ok = run_cli({"validate-config", "--config", (dir / "ok.json").string()}, code);
    CHECK(code == exit_ok);
    CHECK_THAT(ok, ContainsSubstring("config ok"));

    write_text_file(dir / "odd.json", R"({"scene_params": {"S1": {"eps_inf": 3, "delta_eps": 0.05, "tau": 1e-6,
        "alpha": 0.3, "sigma": -1}}})");
    run_cli({"validate-config", "--config", (dir / "odd.json").string()}, code, &err);
    CHECK(code == exit_config);
    CHECK_THAT(err, ContainsSubstring("scene_params.S1"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("CLI - run writes tables and a manifest deterministically")
{
    const auto dir = std::filesystem::temp_directory_path() / "fdalab_cli_run";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    auto cfg = small_config();
    cfg.scenes = {SceneId::S2};
    cfg.references = {ReferenceKind::R1};
    cfg.patterns = {PatternTag::C1};
    cfg.delta_f_list = {1e5};
    write_text_file(dir / "cfg.json", cfg.to_json().dump());

    int code = -1;
    for (const char *sub : {"a", "b"})
    {
        run_cli({"all", "--config", (dir / "cfg.json").string(), "--seed", "9", "--out", (dir / sub).string()}, code);
        REQUIRE(code == exit_ok);
    }
    std::vector<std::string> names;
    for (const auto &e : std::filesystem::directory_iterator(dir / "a"))
        names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"downstream_ideal.csv", "downstream_whitening.csv", "observation.csv",
                                            "recon_coding.csv", "recon_lambda.csv", "recon_summary.csv",
                                            "run_manifest.json"});
    for (const auto &n : names)
        CHECK(slurp(dir / "a" / n) == slurp(dir / "b" / n));

    const auto m = nlohmann::json::parse(slurp(dir / "a" / "run_manifest.json"));
    CHECK(m["seed"] == 9);
    CHECK(m["subcommand"] == "all");
    CHECK(m["code_version"] == version_string);
    CHECK(m["config_hash"].get<std::string>().size() == 16);

    run_cli({"observe", "--config", (dir / "cfg.json").string(), "--format", "json", "--feedback", "off", "--out",
             (dir / "c").string()},
            code);
    REQUIRE(code == exit_ok);
    const auto obs = nlohmann::json::parse(slurp(dir / "c" / "observation.json"));
    CHECK(obs.size() == 1);
    CHECK(obs[0]["seed"] == "3");
    CHECK(nlohmann::json::parse(slurp(dir / "c" / "run_manifest.json"))["feedback_on"] == false);
    std::filesystem::remove_all(dir);
}
