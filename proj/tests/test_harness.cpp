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

#include "nomamimo/harness.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

using namespace noma;

namespace
{
    ExperimentSpec tiny_network()
    {
        ExperimentSpec s;
        s.id = "tiny";
        s.config = NetworkConfig::reference(2, 4, 4, 2, 4);
        s.model = ChannelModel::one_ring_2d;
        s.schemes = {"mMIMO", "NOMA-orthogonal", "NOMA-random", "NOMA-grouped"};
        s.grouping_dim = 2;
        s.trials = 8;
        s.drops = 2;
        s.dl_min_trials = 8;
        s.seed = 99;
        return s;
    }

    std::string csv(const std::vector<ResultRow> &rows)
    {
        std::ostringstream out;
        write_results_csv(out, rows);
        return out.str();
    }
}

TEST_CASE("every preset validates and survives a JSON round trip", "[harness]")
{
    for (bool full : {false, true})
    {
        const auto presets = preset_catalog(full);
        CHECK(presets.size() >= 8);
        for (const auto &p : presets)
        {
            INFO(p.id);
            CHECK(p.violations().empty());
            CHECK_FALSE(p.runtime_budget.empty());
            const auto back = experiment_spec_from_json(to_json(p));
            CHECK(to_json(back) == to_json(p));
            REQUIRE(find_preset(p.id, full).has_value());
        }
    }
    CHECK_FALSE(find_preset("no-such-preset").has_value());
}

TEST_CASE("violations are listed together", "[harness]")
{
    auto s = tiny_network();
    s.trials = 0;
    s.sweep_parameter = "colour";
    s.schemes.push_back("TDMA");
    s.grouping_dim = 40;
    const auto v = s.violations();
    CHECK(v.size() >= 4);
    CHECK_THROWS_AS(s.validate(), ConfigError);

    auto odd = tiny_network();
    odd.config = NetworkConfig::reference(2, 4, 5, 2, 4);
    CHECK_FALSE(odd.violations().empty());

    auto cube = tiny_network();
    cube.model = ChannelModel::one_ring_3d;
    cube.config = NetworkConfig::reference(2, 8, 4, 2, 4);
    CHECK_FALSE(cube.violations().empty());

    CHECK_THROWS_AS(experiment_spec_from_json(nlohmann::json{{"kind", "hologram"}}), ConfigError);
}

TEST_CASE("override sweeps", "[harness]")
{
    auto s = tiny_network();
    s.sweep_parameter = "overrides";
    s.sweep_values = {"K=8;N=4;tau_p=8", "M=9;signature=sparse"};
    const auto points = expand_sweep(s);
    REQUIRE(points.size() == 2);
    const auto &a = points[0].setup.config;
    CHECK(a.ues_per_cell == 8);
    CHECK(a.signature_length == 4);
    CHECK(a.tau_p == 8);
    CHECK(a.tau_p + a.tau_u + a.tau_d == a.tau_c);
    CHECK(a.p_ul.size() == 16);
    CHECK(points[1].setup.config.antennas == 9);
    CHECK(points[1].setup.signature_kind == SignatureKind::sparse);

    s.fixed_tau_u = true;
    s.sweep_parameter = "tau_p";
    s.sweep_values = {"1", "32"};
    const auto pilots = expand_sweep(s);
    CHECK(pilots[0].setup.config.tau_u == s.config.tau_u);
    CHECK(pilots[1].setup.config.tau_u == s.config.tau_u);
    CHECK(pilots[1].setup.config.tau_d == s.config.tau_c - 32 - s.config.tau_u);

    s.sweep_parameter = "overrides";
    s.sweep_values = {"Q=3"};
    CHECK_FALSE(s.violations().empty());
    s.sweep_values = {"K=abc"};
    CHECK_FALSE(s.violations().empty());
}

TEST_CASE("network runs are reproducible and thread independent", "[harness]")
{
    const auto s = tiny_network();
    const auto a = run_rows(s, 1);
    const auto b = run_rows(s, 1);
    const auto c = run_rows(s, 3);
    CHECK(csv(a) == csv(b));
    CHECK(csv(a) == csv(c));

    // four schemes, UL and DL, MR and MMSE, per UE plus one sum row
    CHECK(a.size() == 4u * 2u * 2u * (8u + 1u));
    std::map<std::string, double> sum;
    std::map<std::string, double> per_ue;
    for (const auto &r : a)
    {
        CHECK(std::isfinite(r.se_bits));
        CHECK(r.se_bits >= 0.0);
        CHECK(r.trials == 16);
        if (r.cell < 0)
            sum[r.scheme] = r.se_bits;
        else
            per_ue[r.scheme] += r.se_bits;
    }
    // the sum row is the per-cell average of the network sum
    for (const auto &[scheme, total] : per_ue)
        CHECK_THAT(sum[scheme], Catch::Matchers::WithinRel(total / 2.0, 1e-9));
    for (const auto &[scheme, total] : sum)
        if (scheme.find("-MMSE") != std::string::npos && scheme.rfind("UL/", 0) == 0)
        {
            const std::string mr = scheme.substr(0, scheme.size() - 4) + "MR";
            CHECK(total >= sum[mr]);
        }

    auto other = s;
    other.seed = 100;
    CHECK(csv(run_rows(other, 1)) != csv(a));

    const std::string header = csv(a).substr(0, csv(a).find('\n'));
    CHECK(header == "scenario_id,cell,ue,scheme,N,M,K,se_bits,sinr_mean,ci_halfwidth,trials,seed");
}

TEST_CASE("run_experiment writes results and a manifest", "[harness]")
{
    const auto dir = std::filesystem::temp_directory_path() / "nomamimo_harness_test";
    std::filesystem::remove_all(dir);
    auto s = tiny_network();
    s.trials = 4;
    s.dl_min_trials = 4;
    s.drops = 1;
    s.schemes = {"mMIMO"};
    const auto out = run_experiment(s, RunOptions{dir, 1});
    REQUIRE(out.files.size() == 2);
    for (const auto &f : out.files)
        CHECK(std::filesystem::exists(f));
    std::ifstream manifest(out.directory / "manifest.json");
    const auto j = nlohmann::json::parse(manifest);
    CHECK(j.at("version") == library_version());
    CHECK(j.at("rows") == out.rows.size());
    std::filesystem::remove_all(dir);
}

TEST_CASE("case-study preset rows", "[harness]")
{
    auto s = *find_preset("fig1-case-study");
    s.sweep_values = {"0", "10"};
    const auto rows = run_rows(s, 1);
    int seen = 0;
    for (const auto &r : rows)
        if (r.scheme.find("NOMA-orthogonal") != std::string::npos)
        {
            CHECK_THAT(r.se_bits, Catch::Matchers::WithinAbs(0.5 * std::log2(129.0), 1e-12));
            ++seen;
        }
    CHECK(seen == 4);
}

TEST_CASE("offline grouping of a sector forms azimuth bins", "[harness]")
{
    const auto spec = *find_preset("fig5-offline-grouping");
    const auto map = compute_grouping_map(spec);
    const auto &g = map.assignment;
    REQUIRE(g.group_of.size() == 1000);

    // UEs away from the BS: each group covers an azimuth interval, and
    // neighbouring intervals barely overlap
    std::map<int, std::vector<double>> far;
    int far_count = 0;
    for (std::size_t k = 0; k < g.group_of.size(); ++k)
        if (std::hypot(map.position[k].x, map.position[k].y) > 60.0)
        {
            far[g.group_of[k]].push_back(rad_to_deg(map.azimuth[k]));
            ++far_count;
        }
    std::vector<std::pair<double, double>> ranges;
    for (auto &[id, az] : far)
        if (static_cast<int>(az.size()) >= far_count / 20)
        {
            std::sort(az.begin(), az.end());
            ranges.emplace_back(az.front(), az.back());
        }
    CHECK(ranges.size() >= 5);
    std::sort(ranges.begin(), ranges.end());
    for (std::size_t i = 1; i < ranges.size(); ++i)
        CHECK(ranges[i - 1].second - ranges[i].first < 3.0);

    std::ostringstream out;
    write_grouping_map_csv(out, map);
    CHECK(out.str().rfind("ue_id,group_id,distance_to_center,azimuth_deg,x_m,y_m\n", 0) == 0);
}
