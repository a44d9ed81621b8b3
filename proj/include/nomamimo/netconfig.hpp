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

#ifndef NOMAMIMO_NETCONFIG_HPP
#define NOMAMIMO_NETCONFIG_HPP

#include "nomamimo/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace noma
{
    inline constexpr double bs_height_m = 25.0;
    inline constexpr double ue_height_m = 1.5;
    inline constexpr double min_bs_distance_m = 10.0;

    // Network-wide parameters. Powers and noise are linear (W); per-UE
    // vectors are indexed cell * K + ue.
    struct NetworkConfig
    {
        int cells = 4;
        int antennas = 64;
        int ues_per_cell = 16;
        int signature_length = 1; // N
        int tau_c = 200;
        int tau_p = 16;
        int tau_u = 92;
        int tau_d = 92;
        std::vector<double> p_ul;
        std::vector<double> rho_dl;
        double sigma2_ul = dbm_to_watt(-94.0);
        double sigma2_dl = dbm_to_watt(-94.0);
        double cell_side_m = 250.0;

        // Parameters of the reference network: 20 dBm UL/DL power, -94 dBm
        // noise, tau_c = 200 and the data part split evenly between UL and DL.
        static NetworkConfig reference(int cells, int antennas, int ues_per_cell, int signature_length, int tau_p);

        int total_ues() const { return cells * ues_per_cell; }
        int flat(int cell, int ue) const { return cell * ues_per_cell + ue; }
        double ul_power(int cell, int ue) const { return p_ul[static_cast<std::size_t>(flat(cell, ue))]; }
        double dl_power(int cell, int ue) const { return rho_dl[static_cast<std::size_t>(flat(cell, ue))]; }

        // Every violated constraint, empty when valid.
        std::vector<std::string> violations() const;
        // Throws ConfigError listing all violations.
        void validate() const;
    };

    struct LinkGeometry
    {
        double distance_m = 100.0; // horizontal BS-UE distance
        double shadow_db = 0.0;
        double azimuth = 0.0;   // rad, measured from the array broadside
        double elevation = 0.0; // rad, negative below the array
        double angular_spread = 0.0;
    };

    // Linear gain of -148.1 - 37.6 log10(d / 1 km) + F dB.
    double large_scale_fading(const LinkGeometry &geometry);

    enum class DropType
    {
        uniform_cell,
        sector,
        circle_clusters
    };

    std::string to_string(DropType type);
    DropType drop_type_from_string(const std::string &name);

    struct Scenario
    {
        DropType type = DropType::uniform_cell;
        double sector_half_angle = deg_to_rad(15.0);
        double sector_radius_m = 100.0;
        std::optional<double> sector_orientation; // rad; drawn per cell when unset
        int cluster_count = 4;
        double cluster_radius_m = 20.0;
        double angular_spread = deg_to_rad(2.0);
        double shadow_std_db = 3.1622776601683795; // variance 10 dB^2
    };

    struct Point
    {
        double x = 0.0;
        double y = 0.0;
    };

    // One realization of UE positions and all BS-UE link geometries.
    struct Drop
    {
        int cells = 0;
        int ues_per_cell = 0;
        std::vector<Point> bs;                     // [cell]
        std::vector<std::vector<Point>> positions; // [cell][ue]
        std::vector<std::vector<int>> cluster;     // [cell][ue]; -1 outside cluster drops
        std::vector<LinkGeometry> links;           // [(bs * cells + cell) * K + ue]

        const LinkGeometry &link(int bs_index, int cell, int ue) const
        {
            return links[static_cast<std::size_t>((bs_index * cells + cell) * ues_per_cell + ue)];
        }
    };

    // BS positions of a square-ish grid of cells without wrap-around.
    std::vector<Point> bs_positions(int cells, double cell_side_m);

    LinkGeometry link_geometry(Point bs, Point ue, double shadow_db, double angular_spread);

    // Reproducible UE drop for every cell; shadow fading drawn independently per link.
    // Every constraint the scenario breaks for this config (empty if valid).
    std::vector<std::string> scenario_violations(const NetworkConfig &config, const Scenario &scenario);

    Drop drop_ues(const NetworkConfig &config, const Scenario &scenario, std::uint64_t seed);

    // Structured config files (JSON). Angles are in degrees, powers in dBm.
    NetworkConfig network_config_from_json(const nlohmann::json &j);
    nlohmann::json to_json(const NetworkConfig &config);
    Scenario scenario_from_json(const nlohmann::json &j);
    nlohmann::json to_json(const Scenario &scenario);
}

#endif
