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

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>
#include <sstream>

namespace noma
{
    namespace
    {
        WarningSink &warning_sink()
        {
            static WarningSink sink = [](const std::string &m)
            { std::clog << "warning: " << m << '\n'; };
            return sink;
        }
        std::mutex warning_mutex;
    }

    void set_warning_sink(WarningSink sink)
    {
        std::lock_guard lock(warning_mutex);
        warning_sink() = std::move(sink);
    }

    void warn(const std::string &message)
    {
        std::lock_guard lock(warning_mutex);
        if (warning_sink())
            warning_sink()(message);
    }

    NetworkConfig NetworkConfig::reference(int cells, int antennas, int ues_per_cell, int signature_length, int tau_p)
    {
        NetworkConfig c;
        c.cells = cells;
        c.antennas = antennas;
        c.ues_per_cell = ues_per_cell;
        c.signature_length = signature_length;
        c.tau_c = 200;
        c.tau_p = tau_p;
        c.tau_u = (c.tau_c - tau_p) / 2;
        c.tau_d = c.tau_c - tau_p - c.tau_u;
        const auto n = static_cast<std::size_t>(std::max(0, cells * ues_per_cell));
        c.p_ul.assign(n, dbm_to_watt(20.0));
        c.rho_dl.assign(n, dbm_to_watt(20.0));
        c.sigma2_ul = dbm_to_watt(-94.0);
        c.sigma2_dl = dbm_to_watt(-94.0);
        c.cell_side_m = 250.0;
        return c;
    }

    std::vector<std::string> NetworkConfig::violations() const
    {
        std::vector<std::string> v;
        if (cells < 1)
            v.emplace_back("cells must be >= 1");
        if (antennas < 1)
            v.emplace_back("antennas must be >= 1");
        if (ues_per_cell < 1)
            v.emplace_back("ues_per_cell must be >= 1");
        if (signature_length < 1)
            v.emplace_back("signature_length must be >= 1");
        if (tau_p < 1 || tau_u < 0 || tau_d < 0)
            v.emplace_back("tau_p must be >= 1 and tau_u, tau_d >= 0");
        if (tau_c != tau_p + tau_u + tau_d)
        {
            std::ostringstream s;
            s << "tau_c (" << tau_c << ") != tau_p + tau_u + tau_d (" << tau_p + tau_u + tau_d << ")";
            v.push_back(s.str());
        }
        const auto n = static_cast<std::size_t>(std::max(0, cells * ues_per_cell));
        if (p_ul.size() != n)
            v.emplace_back("p_ul must hold cells * ues_per_cell entries");
        if (rho_dl.size() != n)
            v.emplace_back("rho_dl must hold cells * ues_per_cell entries");
        if (std::any_of(p_ul.begin(), p_ul.end(), [](double p) { return !(p > 0.0); }))
            v.emplace_back("all UL powers must be > 0");
        if (std::any_of(rho_dl.begin(), rho_dl.end(), [](double p) { return !(p > 0.0); }))
            v.emplace_back("all DL powers must be > 0");
        if (!(sigma2_ul > 0.0) || !(sigma2_dl > 0.0))
            v.emplace_back("noise powers must be > 0");
        if (!(cell_side_m > 2.0 * min_bs_distance_m))
            v.emplace_back("cell_side_m too small");
        return v;
    }

    void NetworkConfig::validate() const
    {
        const auto v = violations();
        if (v.empty())
            return;
        std::string msg = "invalid network config:";
        for (const auto &s : v)
            msg += "\n  - " + s;
        throw ConfigError(msg);
    }

    double large_scale_fading(const LinkGeometry &geometry)
    {
        if (!(geometry.distance_m > 0.0))
            throw DomainError("large_scale_fading: distance must be positive");
        const double db = -148.1 - 37.6 * std::log10(geometry.distance_m / 1000.0) + geometry.shadow_db;
        return db_to_linear(db);
    }

    std::string to_string(DropType type)
    {
        switch (type)
        {
        case DropType::uniform_cell:
            return "uniform-cell";
        case DropType::sector:
            return "sector";
        case DropType::circle_clusters:
            return "circle-clusters";
        }
        return "?";
    }

    DropType drop_type_from_string(const std::string &name)
    {
        if (name == "uniform-cell")
            return DropType::uniform_cell;
        if (name == "sector")
            return DropType::sector;
        if (name == "circle-clusters")
            return DropType::circle_clusters;
        throw ConfigError("unknown drop type '" + name + "'");
    }

    std::vector<Point> bs_positions(int cells, double cell_side_m)
    {
        const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cells))));
        std::vector<Point> out;
        out.reserve(static_cast<std::size_t>(cells));
        for (int c = 0; c < cells; ++c)
            out.push_back({(c % cols + 0.5) * cell_side_m, (c / cols + 0.5) * cell_side_m});
        return out;
    }

    LinkGeometry link_geometry(Point bs, Point ue, double shadow_db, double angular_spread)
    {
        const double dx = ue.x - bs.x;
        const double dy = ue.y - bs.y;
        LinkGeometry g;
        g.distance_m = std::max(std::hypot(dx, dy), min_bs_distance_m);
        g.shadow_db = shadow_db;
        g.azimuth = std::atan2(dy, dx);
        g.elevation = -std::atan((bs_height_m - ue_height_m) / g.distance_m);
        g.angular_spread = angular_spread;
        return g;
    }

    namespace
    {
        double uniform(Rng &rng, double lo, double hi)
        {
            return std::uniform_real_distribution<double>(lo, hi)(rng);
        }

        // Area-uniform radius in the annulus [r_min, r_max].
        double annulus_radius(Rng &rng, double r_min, double r_max)
        {
            const double u = uniform(rng, 0.0, 1.0);
            return std::sqrt(u * (r_max * r_max - r_min * r_min) + r_min * r_min);
        }
    }

    std::vector<std::string> scenario_violations(const NetworkConfig &config, const Scenario &s)
    {
        std::vector<std::string> v;
        const double half = config.cell_side_m / 2.0;
        if (s.type == DropType::sector)
        {
            if (!(s.sector_half_angle > 0.0) || s.sector_half_angle > pi)
                v.emplace_back("sector half angle must lie in (0, 180] degrees");
            if (!(s.sector_radius_m > min_bs_distance_m) || s.sector_radius_m > half)
                v.emplace_back("sector radius must lie in (10 m, cell_side / 2]");
        }
        if (s.type == DropType::circle_clusters)
        {
            if (s.cluster_count < 1)
                v.emplace_back("cluster_count must be >= 1");
            else if (config.ues_per_cell % s.cluster_count != 0)
                v.emplace_back("ues_per_cell must be divisible by cluster_count");
            if (!(s.cluster_radius_m > 0.0) || 2.0 * s.cluster_radius_m + 2.0 * min_bs_distance_m >= half)
                v.emplace_back("cluster radius too large for the cell");
        }
        if (s.angular_spread < 0.0)
            v.emplace_back("angular spread must be >= 0");
        if (s.shadow_std_db < 0.0)
            v.emplace_back("shadow fading std must be >= 0");
        return v;
    }

    Drop drop_ues(const NetworkConfig &config, const Scenario &scenario, std::uint64_t seed)
    {
        config.validate();
        if (const auto v = scenario_violations(config, scenario); !v.empty())
        {
            std::string msg = "invalid scenario:";
            for (const auto &s : v)
                msg += "\n  - " + s;
            throw ConfigError(msg);
        }

        const int L = config.cells;
        const int K = config.ues_per_cell;
        const double side = config.cell_side_m;
        Rng rng = make_stream(seed, {0x64726f70}); // "drop"

        Drop d;
        d.cells = L;
        d.ues_per_cell = K;
        d.bs = bs_positions(L, side);
        d.positions.assign(static_cast<std::size_t>(L), std::vector<Point>(static_cast<std::size_t>(K)));
        d.cluster.assign(static_cast<std::size_t>(L), std::vector<int>(static_cast<std::size_t>(K), -1));

        for (int c = 0; c < L; ++c)
        {
            const Point bs = d.bs[static_cast<std::size_t>(c)];
            const double x0 = bs.x - side / 2.0;
            const double y0 = bs.y - side / 2.0;
            auto &pos = d.positions[static_cast<std::size_t>(c)];

            switch (scenario.type)
            {
            case DropType::uniform_cell:
                for (int k = 0; k < K; ++k)
                {
                    Point p;
                    do
                    {
                        p = {uniform(rng, x0, x0 + side), uniform(rng, y0, y0 + side)};
                    } while (std::hypot(p.x - bs.x, p.y - bs.y) < min_bs_distance_m);
                    pos[static_cast<std::size_t>(k)] = p;
                }
                break;
            case DropType::sector:
            {
                const double centre = scenario.sector_orientation ? *scenario.sector_orientation : uniform(rng, -pi, pi);
                for (int k = 0; k < K; ++k)
                {
                    const double a = centre + uniform(rng, -scenario.sector_half_angle, scenario.sector_half_angle);
                    const double r = annulus_radius(rng, min_bs_distance_m, scenario.sector_radius_m);
                    pos[static_cast<std::size_t>(k)] = {bs.x + r * std::cos(a), bs.y + r * std::sin(a)};
                }
                break;
            }
            case DropType::circle_clusters:
            {
                const int per = K / scenario.cluster_count;
                const double rc = scenario.cluster_radius_m;
                for (int g = 0; g < scenario.cluster_count; ++g)
                {
                    Point centre;
                    do
                    {
                        centre = {uniform(rng, x0 + rc, x0 + side - rc), uniform(rng, y0 + rc, y0 + side - rc)};
                    } while (std::hypot(centre.x - bs.x, centre.y - bs.y) < min_bs_distance_m + rc);
                    for (int m = 0; m < per; ++m)
                    {
                        const int k = g * per + m;
                        const double a = uniform(rng, -pi, pi);
                        const double r = rc * std::sqrt(uniform(rng, 0.0, 1.0));
                        pos[static_cast<std::size_t>(k)] = {centre.x + r * std::cos(a), centre.y + r * std::sin(a)};
                        d.cluster[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)] = g;
                    }
                }
                break;
            }
            }
        }

        std::normal_distribution<double> shadow(0.0, scenario.shadow_std_db);
        d.links.resize(static_cast<std::size_t>(L * L * K));
        for (int j = 0; j < L; ++j)
            for (int l = 0; l < L; ++l)
                for (int k = 0; k < K; ++k)
                {
                    const double f = scenario.shadow_std_db > 0.0 ? shadow(rng) : 0.0;
                    d.links[static_cast<std::size_t>((j * L + l) * K + k)] =
                        link_geometry(d.bs[static_cast<std::size_t>(j)],
                                      d.positions[static_cast<std::size_t>(l)][static_cast<std::size_t>(k)], f,
                                      scenario.angular_spread);
                }
        return d;
    }

    namespace
    {
        std::vector<double> power_vector(const nlohmann::json &j, const char *key, double default_dbm, std::size_t n)
        {
            if (!j.contains(key))
                return std::vector<double>(n, dbm_to_watt(default_dbm));
            const auto &v = j.at(key);
            if (v.is_number())
                return std::vector<double>(n, dbm_to_watt(v.get<double>()));
            std::vector<double> out;
            for (const auto &x : v)
                out.push_back(dbm_to_watt(x.get<double>()));
            return out;
        }
    }

    NetworkConfig network_config_from_json(const nlohmann::json &j)
    {
        NetworkConfig c = NetworkConfig::reference(j.value("cells", 4), j.value("antennas", 64), j.value("ues_per_cell", 16),
                                                   j.value("signature_length", 1), j.value("tau_p", 16));
        c.tau_c = j.value("tau_c", c.tau_c);
        if (j.contains("tau_u") || j.contains("tau_d") || j.contains("tau_c"))
        {
            c.tau_u = j.value("tau_u", (c.tau_c - c.tau_p) / 2);
            c.tau_d = j.value("tau_d", c.tau_c - c.tau_p - c.tau_u);
        }
        const auto n = static_cast<std::size_t>(std::max(0, c.total_ues()));
        c.p_ul = power_vector(j, "ul_power_dbm", 20.0, n);
        c.rho_dl = power_vector(j, "dl_power_dbm", 20.0, n);
        c.sigma2_ul = dbm_to_watt(j.value("ul_noise_dbm", -94.0));
        c.sigma2_dl = dbm_to_watt(j.value("dl_noise_dbm", -94.0));
        c.cell_side_m = j.value("cell_side_m", 250.0);
        return c;
    }

    nlohmann::json to_json(const NetworkConfig &c)
    {
        auto to_dbm = [](const std::vector<double> &w)
        {
            nlohmann::json a = nlohmann::json::array();
            for (double x : w)
                a.push_back(linear_to_db(x) + 30.0);
            return a;
        };
        return {{"cells", c.cells},
                {"antennas", c.antennas},
                {"ues_per_cell", c.ues_per_cell},
                {"signature_length", c.signature_length},
                {"tau_c", c.tau_c},
                {"tau_p", c.tau_p},
                {"tau_u", c.tau_u},
                {"tau_d", c.tau_d},
                {"ul_power_dbm", to_dbm(c.p_ul)},
                {"dl_power_dbm", to_dbm(c.rho_dl)},
                {"ul_noise_dbm", linear_to_db(c.sigma2_ul) + 30.0},
                {"dl_noise_dbm", linear_to_db(c.sigma2_dl) + 30.0},
                {"cell_side_m", c.cell_side_m}};
    }

    Scenario scenario_from_json(const nlohmann::json &j)
    {
        Scenario s;
        s.type = drop_type_from_string(j.value("drop", std::string("uniform-cell")));
        s.sector_half_angle = deg_to_rad(j.value("sector_half_angle_deg", 15.0));
        s.sector_radius_m = j.value("sector_radius_m", 100.0);
        if (j.contains("sector_orientation_deg"))
            s.sector_orientation = deg_to_rad(j.at("sector_orientation_deg").get<double>());
        s.cluster_count = j.value("cluster_count", 4);
        s.cluster_radius_m = j.value("cluster_radius_m", 20.0);
        s.angular_spread = deg_to_rad(j.value("angular_spread_deg", 2.0));
        s.shadow_std_db = j.value("shadow_std_db", s.shadow_std_db);
        return s;
    }

    nlohmann::json to_json(const Scenario &s)
    {
        nlohmann::json j = {{"drop", to_string(s.type)},
                            {"sector_half_angle_deg", rad_to_deg(s.sector_half_angle)},
                            {"sector_radius_m", s.sector_radius_m},
                            {"cluster_count", s.cluster_count},
                            {"cluster_radius_m", s.cluster_radius_m},
                            {"angular_spread_deg", rad_to_deg(s.angular_spread)},
                            {"shadow_std_db", s.shadow_std_db}};
        if (s.sector_orientation)
            j["sector_orientation_deg"] = rad_to_deg(*s.sector_orientation);
        return j;
    }
}
