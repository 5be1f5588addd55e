// SPDX-License-Identifier: Apache-2.0
//
// stnsec: cognitive secure downlink scheduling for satellite-terrestrial networks
// Copyright (C) 2026 The stnsec authors
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
//
// Command-line front end. Exit codes: 0 success, 1 invalid configuration,
// 2 usage error, 3 training or artifact error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "stnsec/harness.hpp"

namespace fs = std::filesystem;
using namespace stnsec;

namespace {

struct Options {
    std::string config;
    std::string profile_name;
    std::vector<std::uint64_t> seeds;
    std::string out;
    std::string stage = "all";
    std::string axis;
    std::string path;
};

ExperimentConfig resolve(const Options& o) {
    std::optional<std::string> prof;
    if (!o.profile_name.empty()) prof = o.profile_name;
    ExperimentConfig c = o.config.empty() ? profile(prof.value_or("toy")) : load_config(o.config, prof);
    if (!o.seeds.empty()) c.seeds = o.seeds;
    // --out beats STNSEC_OUT, which beats the file.
    if (!o.out.empty()) c.output_dir = o.out;
    else c.output_dir = output_root(c).string();
    c.check();
    return c;
}

fs::path run_dir(const ExperimentConfig& c, std::uint64_t seed) {
    return fs::path(c.output_dir) / (c.scenario + "_" + config_hash(c).substr(0, 8)) / ("seed" + std::to_string(seed));
}

void say(const std::string& s) { std::cout << s << '\n'; }

int cmd_validate(const Options& o) {
    const auto c = resolve(o);
    say("ok " + c.scenario + " config " + config_hash(c));
    std::cout << to_json(c).dump(2) << '\n';
    return 0;
}

int cmd_fig3(const Options& o) {
    const auto c = resolve(o);
    const auto seed = c.seeds.front();
    const auto rows = run_fig3(c, seed);
    const auto path = fs::path(c.output_dir) / "fig3.csv";
    write_text(path, fig3_csv(c, seed, rows));
    int bad = 0;
    for (const auto& r : rows) bad += !fig3_row_ok(r);
    say("wrote " + path.string() + " (" + std::to_string(rows.size()) + " rows, " + std::to_string(bad) +
        " outside tolerance)");
    return 0;
}

int cmd_train(const Options& o) {
    const auto c = resolve(o);
    const int last = o.stage == "all" ? 3 : std::stoi(o.stage);
    for (auto seed : c.seeds) {
        const auto dir = run_dir(c, seed);
        if (last < 3) {
            const auto f = train_front_end(c, seed, last);
            save_front_end(*f, dir);
        } else {
            const auto p = train_pipeline(c, seed);
            save_pipeline(*p, dir);
        }
        say("seed " + std::to_string(seed) + " -> " + dir.string());
    }
    return 0;
}

int cmd_evaluate(const Options& o) {
    if (!o.path.empty()) {
        const auto p = load_pipeline(o.path);
        const auto r = evaluate(*p);
        const auto out = o.out.empty() ? fs::path(o.path) : fs::path(o.out);
        write_text(out / "report.csv", report_csv(*p, r));
        say("wrote " + (out / "report.csv").string());
        return r.parameters_unchanged() ? 0 : 3;
    }
    const auto c = resolve(o);
    for (auto seed : c.seeds) {
        const auto p = train_pipeline(c, seed);
        const auto r = evaluate(*p);
        const auto dir = run_dir(c, seed);
        save_pipeline(*p, dir, &r);
        say("seed " + std::to_string(seed) + " -> " + (dir / "report.csv").string());
        if (!r.parameters_unchanged()) return 3;
    }
    return 0;
}

int cmd_trend(const Options& o) {
    const auto c = resolve(o);
    const auto axis = parse_axis(o.axis);
    const auto t = run_trend(c, axis);
    const auto base = fs::path(c.output_dir) / ("trend_" + std::string(to_string(axis)));
    write_text(base.string() + ".csv", trend_csv(c, t));
    write_text(base.string() + "_summary.csv", trend_summary_csv(c, t));
    write_text(base.string() + "_checks.csv", trend_checks_csv(c, t));
    for (const auto& k : t.checks) say(std::string(k.passed ? "PASS " : "FAIL ") + k.name + "  " + k.detail);
    return 0;
}

int cmd_inspect(const Options& o) {
    std::cout << describe_checkpoint(o.path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Secure downlink scheduling experiments"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* s, bool seeds_too) {
        s->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
        s->add_option("--profile", o.profile_name, "base profile")->check(CLI::IsMember({"paper", "toy"}));
        s->add_option("--out", o.out, "output directory");
        if (seeds_too) s->add_option("--seed", o.seeds, "seed (repeatable); defaults to the configured list");
    };

    auto* validate = app.add_subcommand("validate-config", "check a configuration and print it resolved");
    common(validate, true);
    auto* fig3 = app.add_subcommand("fig3", "closed-form vs Monte Carlo SP/RTP curves");
    common(fig3, true);
    auto* train = app.add_subcommand("train", "train the stages and save checkpoints");
    common(train, true);
    train->add_option("--stage", o.stage, "last stage to train")->check(CLI::IsMember({"1", "2", "3", "all"}));
    auto* eval = app.add_subcommand("evaluate", "frozen-policy evaluation against eves and baselines");
    common(eval, true);
    eval->add_option("run", o.path, "directory written by train (trains afresh when omitted)")->check(CLI::ExistingDirectory);
    auto* trend = app.add_subcommand("trend", "sweep one axis across seeds");
    common(trend, true);
    trend->add_option("axis", o.axis, "reliability, ue_count or eve_kind")
        ->required()
        ->check(CLI::IsMember({"reliability", "ue_count", "eve_kind"}));
    auto* inspect = app.add_subcommand("inspect-checkpoint", "describe a checkpoint file");
    inspect->add_option("path", o.path, "checkpoint")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*validate) return cmd_validate(o);
        if (*fig3) return cmd_fig3(o);
        if (*train) return cmd_train(o);
        if (*eval) return cmd_evaluate(o);
        if (*trend) return cmd_trend(o);
        if (*inspect) return cmd_inspect(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const TrainingError& e) {
        std::cerr << e.stage() << " diverged: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 2;
}
