// SPDX-License-Identifier: Apache-2.0
//
// nomamimo: code-domain NOMA on top of multicell massive MIMO
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

#include "nomamimo/channel.hpp"
#include "nomamimo/grouping.hpp"
#include "nomamimo/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

using namespace noma;

namespace
{
    ExperimentSpec load_spec(const std::string &source, bool full_scale)
    {
        if (auto preset = find_preset(source, full_scale))
            return *preset;
        if (!std::filesystem::exists(source))
            throw ConfigError("'" + source + "' is neither a preset name nor a readable spec file");
        std::ifstream in(source);
        nlohmann::json j;
        try
        {
            in >> j;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw ConfigError("cannot parse " + source + ": " + e.what());
        }
        return experiment_spec_from_json(j);
    }

    struct Overrides
    {
        std::optional<std::uint64_t> seed;
        std::optional<int> trials;
        std::optional<int> drops;

        void apply(ExperimentSpec &spec) const
        {
            if (seed)
                spec.seed = *seed;
            if (trials)
            {
                spec.trials = *trials;
                spec.dl_min_trials = std::min(spec.dl_min_trials, *trials);
            }
            if (drops)
                spec.drops = *drops;
        }
    };
}

int main(int argc, char **argv)
{
    CLI::App app{"nomamimo: code-domain NOMA with massive MIMO, simulation harness"};
    app.set_version_flag("--version", library_version());
    app.require_subcommand(1);

    bool full_scale = false;
    Overrides overrides;
    std::string out_dir = "results";
    int threads = 1;

    auto *run = app.add_subcommand("run", "run a preset or a JSON experiment spec");
    std::string run_source;
    run->add_option("experiment", run_source, "preset name or spec file")->required();
    run->add_option("--seed", overrides.seed, "master seed");
    run->add_option("--trials", overrides.trials, "channel realizations per drop");
    run->add_option("--drops", overrides.drops, "UE drops");
    run->add_option("--out", out_dir, "output root directory");
    run->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    run->add_flag("--full-scale", full_scale, "publication-size sweeps and trial counts");

    auto *list = app.add_subcommand("list-presets", "list the named presets");
    list->add_flag("--full-scale", full_scale, "show full-scale settings");

    auto *show = app.add_subcommand("show", "print a preset or spec as JSON");
    std::string show_source;
    show->add_option("experiment", show_source, "preset name or spec file")->required();
    show->add_flag("--full-scale", full_scale, "full-scale settings");

    auto *validate = app.add_subcommand("validate", "check a spec and list every violated constraint");
    std::string validate_source;
    validate->add_option("experiment", validate_source, "preset name or spec file")->required();

    auto *dump = app.add_subcommand("corr-dump", "write the correlation matrices of one drop to CSV");
    std::string dump_source;
    std::string dump_out = "correlations.csv";
    int dump_cell = 0;
    dump->add_option("experiment", dump_source, "preset name or spec file (network kind)")->required();
    dump->add_option("--cell", dump_cell, "cell whose own UEs are dumped, seen from its BS");
    dump->add_option("--seed", overrides.seed, "master seed");
    dump->add_option("--out", dump_out, "output CSV");

    auto *group = app.add_subcommand("group", "group UEs from dumped correlation matrices");
    std::string group_source;
    std::string group_out = "groups.csv";
    int groups = 4;
    int dim = 6;
    std::uint64_t group_seed = 1;
    bool balanced = false;
    group->add_option("corr-dump", group_source, "CSV written by corr-dump")->required()->check(CLI::ExistingFile);
    group->add_option("--groups", groups, "number of groups G")->check(CLI::PositiveNumber);
    group->add_option("--p", dim, "eigenspace dimension")->check(CLI::PositiveNumber);
    group->add_option("--seed", group_seed, "seed for the k-means initialization");
    group->add_flag("--balanced", balanced, "force exactly K / G UEs per group");
    group->add_option("--out", group_out, "output CSV");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run)
        {
            ExperimentSpec spec = load_spec(run_source, full_scale);
            overrides.apply(spec);
            const auto result = run_experiment(spec, RunOptions{out_dir, threads});
            for (const auto &f : result.files)
                std::cout << f.string() << '\n';
            std::cerr << spec.id << ": " << result.rows.size() << " rows in " << result.wall_seconds << " s\n";
        }
        else if (*list)
        {
            for (const auto &spec : preset_catalog(full_scale))
                std::cout << spec.id << "  [" << spec.runtime_budget << "]\n    " << spec.description << '\n';
        }
        else if (*show)
        {
            std::cout << to_json(load_spec(show_source, full_scale)).dump(2) << '\n';
        }
        else if (*validate)
        {
            const auto spec = load_spec(validate_source, false);
            const auto v = spec.violations();
            if (v.empty())
            {
                std::cout << spec.id << ": valid\n";
                return 0;
            }
            std::cout << spec.id << ": " << v.size() << " violation(s)\n";
            for (const auto &s : v)
                std::cout << "  - " << s << '\n';
            return 2;
        }
        else if (*dump)
        {
            ExperimentSpec spec = load_spec(dump_source, false);
            overrides.apply(spec);
            spec.validate();
            if (spec.kind != ExperimentKind::network)
                throw ConfigError("corr-dump needs a network experiment");
            const auto points = expand_sweep(spec);
            const auto &setup = points.front().setup;
            if (dump_cell < 0 || dump_cell >= setup.config.cells)
                throw ConfigError("--cell out of range");
            const Drop drop = drop_ues(setup.config, setup.scenario, spec.seed);
            const auto R = correlations_for_drop(setup, drop);
            const int K = setup.config.ues_per_cell;
            const auto &at_bs = R[static_cast<std::size_t>(dump_cell)];
            std::vector<CorrelationMatrix> own(at_bs.begin() + dump_cell * K, at_bs.begin() + (dump_cell + 1) * K);
            std::ofstream out(dump_out);
            write_correlation_csv(out, own);
            std::cout << dump_out << '\n';
        }
        else if (*group)
        {
            std::ifstream in(group_source);
            std::vector<CMat> R;
            for (auto &c : read_correlation_csv(in))
                R.push_back(std::move(c.R));
            Rng rng = make_stream(group_seed);
            const auto result =
                balanced ? balanced_group(R, groups, dim, rng) : kmeans_group(R, groups, dim, rng);
            std::ofstream out(group_out);
            write_groups_csv(out, result);
            std::cout << group_out << '\n';
        }
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
