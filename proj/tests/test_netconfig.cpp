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

#include "nomamimo/netconfig.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

using namespace noma;
using Catch::Matchers::WithinRel;

TEST_CASE("large-scale fading follows the log-distance law", "[netconfig]")
{
    LinkGeometry g;
    g.distance_m = 1000.0;
    CHECK_THAT(large_scale_fading(g), WithinRel(std::pow(10.0, -14.81), 1e-12));

    g.distance_m = 100.0;
    CHECK_THAT(large_scale_fading(g), WithinRel(std::pow(10.0, (-148.1 + 37.6) / 10.0), 1e-12));

    // evaluated offline with an independent calculator
    g.distance_m = 250.0;
    g.shadow_db = 3.0;
    CHECK_THAT(large_scale_fading(g), WithinRel(5.672122052316427e-13, 1e-12));

    g.distance_m = 0.0;
    CHECK_THROWS_AS(large_scale_fading(g), DomainError);
    g.distance_m = -5.0;
    CHECK_THROWS_AS(large_scale_fading(g), DomainError);
}

TEST_CASE("large-scale fading decreases with distance", "[netconfig]")
{
    LinkGeometry g;
    g.shadow_db = -2.0;
    double previous = std::numeric_limits<double>::infinity();
    for (double d = 10.0; d < 2000.0; d *= 1.3)
    {
        g.distance_m = d;
        const double beta = large_scale_fading(g);
        CHECK(beta < previous);
        previous = beta;
    }
}

TEST_CASE("reference configuration and its invariants", "[netconfig]")
{
    auto c = NetworkConfig::reference(4, 64, 16, 4, 16);
    CHECK(c.violations().empty());
    CHECK(c.tau_p + c.tau_u + c.tau_d == c.tau_c);
    CHECK(c.p_ul.size() == 64);
    CHECK_THAT(c.p_ul.front(), WithinRel(0.1, 1e-12));
    CHECK_THAT(c.sigma2_ul, WithinRel(std::pow(10.0, -12.4), 1e-12));
    CHECK(c.flat(2, 3) == 35);

    auto bad = c;
    bad.tau_d += 1;
    bad.antennas = 0;
    bad.p_ul[3] = 0.0;
    const auto v = bad.violations();
    CHECK(v.size() >= 3);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sector drop keeps every UE inside the sector", "[netconfig]")
{
    const auto c = NetworkConfig::reference(4, 64, 16, 1, 16);
    Scenario s;
    s.type = DropType::sector;
    s.sector_half_angle = deg_to_rad(15.0);
    s.sector_radius_m = 100.0;
    s.sector_orientation = 0.3;
    const Drop d = drop_ues(c, s, 7);
    REQUIRE(d.positions.size() == 4);
    for (int l = 0; l < 4; ++l)
    {
        REQUIRE(d.positions[l].size() == 16);
        for (int k = 0; k < 16; ++k)
        {
            const auto &g = d.link(l, l, k);
            CHECK(g.distance_m <= 100.0 + 1e-9);
            CHECK(g.distance_m >= min_bs_distance_m - 1e-9);
            CHECK(std::abs(std::remainder(g.azimuth - 0.3, 2.0 * pi)) <= deg_to_rad(15.0) + 1e-12);
            CHECK(g.elevation < 0.0);
        }
    }
}

TEST_CASE("cluster drop splits UEs equally between clusters", "[netconfig]")
{
    auto c = NetworkConfig::reference(4, 64, 8, 1, 8);
    Scenario s;
    s.type = DropType::circle_clusters;
    s.cluster_count = 4;
    const Drop d = drop_ues(c, s, 3);
    for (int l = 0; l < 4; ++l)
    {
        std::vector<int> count(4, 0);
        for (int k = 0; k < 8; ++k)
            ++count[d.cluster[l][k]];
        CHECK(count == std::vector<int>{2, 2, 2, 2});

        // members of a cluster lie within one diameter of each other
        for (int a = 0; a < 8; ++a)
            for (int b = 0; b < 8; ++b)
                if (d.cluster[l][a] == d.cluster[l][b])
                    CHECK(std::hypot(d.positions[l][a].x - d.positions[l][b].x,
                                     d.positions[l][a].y - d.positions[l][b].y) <= 2.0 * s.cluster_radius_m + 1e-9);
    }

    c = NetworkConfig::reference(4, 64, 10, 1, 10);
    CHECK_THROWS_AS(drop_ues(c, s, 3), ConfigError);
    CHECK_FALSE(scenario_violations(c, s).empty());
}

TEST_CASE("uniform drop stays inside the cell", "[netconfig]")
{
    const auto c = NetworkConfig::reference(4, 64, 20, 1, 20);
    const Drop d = drop_ues(c, Scenario{}, 11);
    for (int l = 0; l < 4; ++l)
        for (const auto &p : d.positions[l])
        {
            CHECK(std::abs(p.x - d.bs[l].x) <= c.cell_side_m / 2.0);
            CHECK(std::abs(p.y - d.bs[l].y) <= c.cell_side_m / 2.0);
        }
}

TEST_CASE("drops are reproducible from the seed", "[netconfig]")
{
    const auto c = NetworkConfig::reference(4, 64, 16, 1, 16);
    Scenario s;
    const Drop a = drop_ues(c, s, 42);
    const Drop b = drop_ues(c, s, 42);
    const Drop other = drop_ues(c, s, 43);
    REQUIRE(a.links.size() == b.links.size());
    bool differs = false;
    for (std::size_t i = 0; i < a.links.size(); ++i)
    {
        CHECK(a.links[i].distance_m == b.links[i].distance_m);
        CHECK(a.links[i].shadow_db == b.links[i].shadow_db);
        CHECK(a.links[i].azimuth == b.links[i].azimuth);
        differs = differs || a.links[i].distance_m != other.links[i].distance_m;
    }
    CHECK(differs);
}

TEST_CASE("shadow fading has the configured spread", "[netconfig]")
{
    const auto c = NetworkConfig::reference(4, 64, 100, 1, 100);
    const Drop d = drop_ues(c, Scenario{}, 5);
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto &g : d.links)
    {
        sum += g.shadow_db;
        sum_sq += g.shadow_db * g.shadow_db;
    }
    const double n = static_cast<double>(d.links.size());
    const double var = sum_sq / n - (sum / n) * (sum / n);
    CHECK(std::abs(sum / n) < 0.3);
    CHECK_THAT(var, WithinRel(10.0, 0.1));
}

TEST_CASE("config and scenario survive a JSON round trip", "[netconfig]")
{
    auto c = NetworkConfig::reference(2, 16, 4, 2, 4);
    c.p_ul[1] = dbm_to_watt(10.0);
    const auto c2 = network_config_from_json(to_json(c));
    CHECK(c2.cells == 2);
    CHECK(c2.antennas == 16);
    CHECK(c2.ues_per_cell == 4);
    CHECK(c2.signature_length == 2);
    CHECK(c2.tau_u == c.tau_u);
    REQUIRE(c2.p_ul.size() == c.p_ul.size());
    CHECK_THAT(c2.p_ul[1], WithinRel(c.p_ul[1], 1e-12));
    CHECK_THAT(c2.sigma2_dl, WithinRel(c.sigma2_dl, 1e-12));

    Scenario s;
    s.type = DropType::sector;
    s.sector_orientation = deg_to_rad(12.0);
    const auto s2 = scenario_from_json(to_json(s));
    CHECK(s2.type == DropType::sector);
    REQUIRE(s2.sector_orientation.has_value());
    CHECK_THAT(*s2.sector_orientation, WithinRel(deg_to_rad(12.0), 1e-12));
    CHECK_THROWS_AS(drop_type_from_string("hexagon"), ConfigError);
}
