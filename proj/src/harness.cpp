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

#include "nomamimo/estimation.hpp"
#include "nomamimo/grouping.hpp"
#include "nomamimo/se.hpp"
#include "nomamimo/transceive.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#ifndef NOMAMIMO_VERSION
#define NOMAMIMO_VERSION "0.1.0-unknown"
#endif

namespace noma
{
    std::string library_version() { return NOMAMIMO_VERSION; }

    std::string to_string(ChannelModel model)
    {
        switch (model)
        {
        case ChannelModel::one_ring_2d:
            return "2D";
        case ChannelModel::one_ring_3d:
            return "3D";
        case ChannelModel::uncorrelated:
            return "uncorrelated";
        }
        return "?";
    }

    ChannelModel channel_model_from_string(const std::string &name)
    {
        if (name == "2D" || name == "2d")
            return ChannelModel::one_ring_2d;
        if (name == "3D" || name == "3d")
            return ChannelModel::one_ring_3d;
        if (name == "uncorrelated")
            return ChannelModel::uncorrelated;
        throw ConfigError("unknown channel model '" + name + "' (expected 2D, 3D or uncorrelated)");
    }

    std::string to_string(ExperimentKind kind)
    {
        switch (kind)
        {
        case ExperimentKind::network:
            return "network";
        case ExperimentKind::case_study:
            return "case-study";
        case ExperimentKind::two_ue:
            return "two-ue";
        case ExperimentKind::favorable:
            return "favorable";
        case ExperimentKind::grouping_map:
            return "grouping-map";
        }
        return "?";
    }

    ExperimentKind experiment_kind_from_string(const std::string &name)
    {
        for (auto k : {ExperimentKind::network, ExperimentKind::case_study, ExperimentKind::two_ue,
                       ExperimentKind::favorable, ExperimentKind::grouping_map})
            if (to_string(k) == name)
                return k;
        throw ConfigError("unknown experiment kind '" + name + "'");
    }

    SchemeSpec scheme_from_string(const std::string &name)
    {
        if (name == "mMIMO")
            return {name, Assignment::none};
        if (name == "NOMA-orthogonal")
            return {name, Assignment::cyclic};
        if (name == "NOMA-random")
            return {name, Assignment::random};
        if (name == "NOMA-grouped")
            return {name, Assignment::grouped};
        throw ConfigError("unknown scheme '" + name +
                          "' (expected mMIMO, NOMA-orthogonal, NOMA-random or NOMA-grouped)");
    }

    namespace
    {
        const std::array<std::string, 8> sweep_parameters = {"none", "N", "M", "K", "tau_p", "signature", "angle",
                                                             "overrides"};

        int parse_int(const std::string &key, const std::string &value)
        {
            std::size_t used = 0;
            int v = 0;
            try
            {
                v = std::stoi(value, &used);
            }
            catch (const std::exception &)
            {
                used = 0;
            }
            if (used == 0 || used != value.size())
                throw ConfigError("sweep value '" + value + "' for " + key + " is not an integer");
            return v;
        }

        double parse_double(const std::string &key, const std::string &value)
        {
            std::size_t used = 0;
            double v = 0.0;
            try
            {
                v = std::stod(value, &used);
            }
            catch (const std::exception &)
            {
                used = 0;
            }
            if (used == 0 || used != value.size())
                throw ConfigError("sweep value '" + value + "' for " + key + " is not a number");
            return v;
        }

        std::vector<std::pair<std::string, std::string>> split_overrides(const std::string &text)
        {
            std::vector<std::pair<std::string, std::string>> out;
            std::stringstream ss(text);
            std::string item;
            while (std::getline(ss, item, ';'))
            {
                if (item.empty())
                    continue;
                const auto eq = item.find('=');
                if (eq == std::string::npos || eq == 0 || eq + 1 == item.size())
                    throw ConfigError("override '" + item + "' is not of the form key=value");
                out.emplace_back(item.substr(0, eq), item.substr(eq + 1));
            }
            if (out.empty())
                throw ConfigError("empty override list");
            return out;
        }

        void resize_powers(NetworkConfig &c)
        {
            const auto n = static_cast<std::size_t>(std::max(0, c.total_ues()));
            const double p = c.p_ul.empty() ? dbm_to_watt(20.0) : c.p_ul.front();
            const double rho = c.rho_dl.empty() ? dbm_to_watt(20.0) : c.rho_dl.front();
            c.p_ul.assign(n, p);
            c.rho_dl.assign(n, rho);
        }

        void set_tau_p(NetworkConfig &c, int tau_p, bool fixed_tau_u)
        {
            c.tau_p = tau_p;
            if (!fixed_tau_u)
                c.tau_u = (c.tau_c - tau_p) / 2;
            c.tau_d = c.tau_c - c.tau_p - c.tau_u;
        }

        void apply_override(SimulationSetup &s, const std::string &key, const std::string &value, bool fixed_tau_u)
        {
            if (key == "N")
                s.config.signature_length = parse_int(key, value);
            else if (key == "M")
                s.config.antennas = parse_int(key, value);
            else if (key == "K")
            {
                s.config.ues_per_cell = parse_int(key, value);
                resize_powers(s.config);
            }
            else if (key == "L")
            {
                s.config.cells = parse_int(key, value);
                resize_powers(s.config);
            }
            else if (key == "tau_p")
                set_tau_p(s.config, parse_int(key, value), fixed_tau_u);
            else if (key == "signature")
                s.signature_kind = signature_kind_from_string(value);
            else
                throw ConfigError("cannot sweep or override '" + key + "'");
        }

        SimulationSetup base_setup(const ExperimentSpec &spec)
        {
            SimulationSetup s;
            s.config = spec.config;
            s.scenario = spec.scenario;
            s.model = spec.model;
            s.elevation_spread = spec.elevation_spread;
            s.signature_kind = spec.signature_kind;
            for (const auto &name : spec.schemes)
                s.schemes.push_back(scheme_from_string(name));
            s.grouping_dim = spec.grouping_dim;
            s.trials = spec.trials;
            s.dl_min_trials = spec.dl_min_trials;
            return s;
        }

        bool is_square(int m)
        {
            const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
            return m > 0 && s * s == m;
        }

        void setup_violations(const SimulationSetup &s, const std::string &where, const ExperimentSpec &spec,
                              std::vector<std::string> &v)
        {
            auto add = [&](const std::string &msg) { v.push_back(where + msg); };
            for (const auto &msg : s.config.violations())
                add(msg);
            if (spec.kind == ExperimentKind::network)
                for (const auto &msg : scenario_violations(s.config, s.scenario))
                    add(msg);
            if (s.model == ChannelModel::one_ring_3d && !is_square(s.config.antennas))
                add("the 3D model needs a square planar array, M = " + std::to_string(s.config.antennas) +
                    " is not a perfect square");
            const int N = s.config.signature_length;
            for (const auto &scheme : s.schemes)
            {
                if (scheme.assignment == Assignment::grouped && N > 0 && s.config.ues_per_cell % N != 0)
                    add("NOMA-grouped needs K divisible by N (K = " + std::to_string(s.config.ues_per_cell) +
                        ", N = " + std::to_string(N) + ")");
                if (scheme.assignment == Assignment::grouped &&
                    (s.grouping_dim < 1 || s.grouping_dim > s.config.antennas))
                    add("grouping_dim must lie in [1, M]");
            }
            if (s.dl_min_trials > s.trials)
                add("dl_min_trials (" + std::to_string(s.dl_min_trials) + ") exceeds trials (" +
                    std::to_string(s.trials) + ")");
            if (s.config.antennas * s.config.signature_length > 4096)
                add("M N = " + std::to_string(s.config.antennas * s.config.signature_length) +
                    " exceeds the supported combiner dimension 4096");
        }
    }

    std::vector<SweepPoint> expand_sweep(const ExperimentSpec &spec)
    {
        const SimulationSetup base = base_setup(spec);
        std::vector<SweepPoint> points;
        if (spec.sweep_parameter == "none")
        {
            points.push_back({"", base});
            return points;
        }
        for (const auto &value : spec.sweep_values)
        {
            SweepPoint p{value, base};
            if (spec.sweep_parameter == "angle")
                parse_double("angle", value);
            else if (spec.sweep_parameter == "overrides")
                for (const auto &[k, val] : split_overrides(value))
                    apply_override(p.setup, k, val, spec.fixed_tau_u);
            else
                apply_override(p.setup, spec.sweep_parameter, value, spec.fixed_tau_u);
            points.push_back(std::move(p));
        }
        return points;
    }

    std::vector<std::string> ExperimentSpec::violations() const
    {
        std::vector<std::string> v;
        if (id.empty())
            v.emplace_back("id must not be empty");
        if (std::find(sweep_parameters.begin(), sweep_parameters.end(), sweep_parameter) == sweep_parameters.end())
            v.push_back("unknown sweep parameter '" + sweep_parameter + "'");
        else if (sweep_parameter != "none" && sweep_values.empty())
            v.emplace_back("sweep values must not be empty");
        if (sweep_parameter == "none" && !sweep_values.empty())
            v.emplace_back("sweep values given without a sweep parameter");
        const bool angular = kind == ExperimentKind::case_study || kind == ExperimentKind::two_ue ||
                             kind == ExperimentKind::favorable;
        if (angular && sweep_parameter != "angle")
            v.push_back(to_string(kind) + " experiments sweep the angle");
        if (!angular && sweep_parameter == "angle")
            v.push_back("angle sweeps apply to case-study, two-ue and favorable experiments only");
        if (trials < 1)
            v.emplace_back("trials must be >= 1");
        if (drops < 1)
            v.emplace_back("drops must be >= 1");
        if (elevation_spread < 0.0)
            v.emplace_back("elevation spread must be >= 0");
        if (schemes.empty() && (kind == ExperimentKind::network || kind == ExperimentKind::two_ue))
            v.emplace_back("at least one scheme is required");
        for (const auto &name : schemes)
        {
            try
            {
                scheme_from_string(name);
            }
            catch (const ConfigError &e)
            {
                v.emplace_back(e.what());
            }
        }

        switch (kind)
        {
        case ExperimentKind::network:
        case ExperimentKind::two_ue:
        {
            if (kind == ExperimentKind::two_ue && (config.cells != 1 || config.ues_per_cell != 2))
                v.emplace_back("two-ue experiments need one cell with K = 2");
            std::vector<SweepPoint> points;
            try
            {
                points = expand_sweep(*this);
            }
            catch (const ConfigError &e)
            {
                v.emplace_back(e.what());
            }
            for (const auto &p : points)
            {
                const std::string where = p.value.empty() ? "" : "[" + sweep_parameter + " " + p.value + "] ";
                setup_violations(p.setup, where, *this, v);
            }
            break;
        }
        case ExperimentKind::case_study:
            if (config.antennas < 1 || config.signature_length < 1)
                v.emplace_back("case study needs M >= 1 and N >= 1");
            if (config.signature_length > 30)
                v.emplace_back("case study random-code expectation supports N <= 30");
            break;
        case ExperimentKind::favorable:
            if (!is_square(config.antennas))
                v.emplace_back("favorable-propagation sweep includes the 3D model, M must be a perfect square");
            break;
        case ExperimentKind::grouping_map:
            if (!is_square(config.antennas))
                v.emplace_back("grouping maps use the 3D model, M must be a perfect square");
            if (config.cells != 1)
                v.emplace_back("grouping maps use a single cell");
            if (groups < 1 || groups > config.ues_per_cell)
                v.emplace_back("groups must lie in [1, K]");
            if (grouping_dim < 1 || grouping_dim > config.antennas)
                v.emplace_back("grouping_dim must lie in [1, M]");
            for (const auto &msg : config.violations())
                v.push_back(msg);
            for (const auto &msg : scenario_violations(config, scenario))
                v.push_back(msg);
            break;
        }
        if (angular)
            for (const auto &value : sweep_values)
            {
                try
                {
                    parse_double("angle", value);
                }
                catch (const ConfigError &e)
                {
                    v.emplace_back(e.what());
                }
            }
        return v;
    }

    void ExperimentSpec::validate() const
    {
        const auto v = violations();
        if (v.empty())
            return;
        std::string msg = "invalid experiment '" + id + "':";
        for (const auto &s : v)
            msg += "\n  - " + s;
        throw ConfigError(msg);
    }

    ExperimentSpec experiment_spec_from_json(const nlohmann::json &j)
    {
        try
        {
            ExperimentSpec s;
            s.id = j.value("id", std::string());
            s.description = j.value("description", std::string());
            s.kind = experiment_kind_from_string(j.value("kind", std::string("network")));
            if (j.contains("network"))
                s.config = network_config_from_json(j.at("network"));
            if (j.contains("scenario"))
                s.scenario = scenario_from_json(j.at("scenario"));
            s.model = channel_model_from_string(j.value("channel_model", std::string("3D")));
            s.elevation_spread = deg_to_rad(j.value("elevation_spread_deg", 2.0));
            s.signature_kind = signature_kind_from_string(j.value("signature_kind", std::string("orthogonal")));
            if (j.contains("schemes"))
                s.schemes = j.at("schemes").get<std::vector<std::string>>();
            if (j.contains("sweep"))
            {
                const auto &sw = j.at("sweep");
                s.sweep_parameter = sw.value("parameter", std::string("none"));
                s.sweep_values.clear();
                if (sw.contains("values"))
                    for (const auto &val : sw.at("values"))
                        s.sweep_values.push_back(val.is_string() ? val.get<std::string>() : val.dump());
            }
            s.grouping_dim = j.value("grouping_dim", s.grouping_dim);
            s.groups = j.value("groups", s.groups);
            s.trials = j.value("trials", s.trials);
            s.drops = j.value("drops", s.drops);
            s.dl_min_trials = j.value("dl_min_trials", s.dl_min_trials);
            s.seed = j.value("seed", s.seed);
            s.fixed_tau_u = j.value("fixed_tau_u", s.fixed_tau_u);
            s.reference_angle = deg_to_rad(j.value("reference_angle_deg", 30.0));
            s.snr_db = j.value("snr_db", s.snr_db);
            s.ue_distance_m = j.value("ue_distance_m", s.ue_distance_m);
            s.runtime_budget = j.value("runtime_budget", std::string());
            return s;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw ConfigError(std::string("malformed experiment spec: ") + e.what());
        }
    }

    nlohmann::json to_json(const ExperimentSpec &spec)
    {
        nlohmann::json j;
        j["id"] = spec.id;
        j["description"] = spec.description;
        j["kind"] = to_string(spec.kind);
        j["network"] = to_json(spec.config);
        j["scenario"] = to_json(spec.scenario);
        j["channel_model"] = to_string(spec.model);
        j["elevation_spread_deg"] = rad_to_deg(spec.elevation_spread);
        j["signature_kind"] = to_string(spec.signature_kind);
        j["schemes"] = spec.schemes;
        j["sweep"] = {{"parameter", spec.sweep_parameter}, {"values", spec.sweep_values}};
        j["grouping_dim"] = spec.grouping_dim;
        j["groups"] = spec.groups;
        j["trials"] = spec.trials;
        j["drops"] = spec.drops;
        j["dl_min_trials"] = spec.dl_min_trials;
        j["seed"] = spec.seed;
        j["fixed_tau_u"] = spec.fixed_tau_u;
        j["reference_angle_deg"] = rad_to_deg(spec.reference_angle);
        j["snr_db"] = spec.snr_db;
        j["ue_distance_m"] = spec.ue_distance_m;
        j["runtime_budget"] = spec.runtime_budget;
        return j;
    }

    namespace
    {
        std::vector<std::string> angle_grid(double lo, double hi, double step)
        {
            std::vector<std::string> out;
            const int n = static_cast<int>(std::lround((hi - lo) / step));
            for (int i = 0; i <= n; ++i)
            {
                std::ostringstream s;
                s << lo + i * step;
                out.push_back(s.str());
            }
            return out;
        }

        ExperimentSpec clustered(const std::string &id, int K, int N)
        {
            ExperimentSpec s;
            s.id = id;
            s.config = NetworkConfig::reference(4, 64, K, N, K);
            s.scenario.type = DropType::circle_clusters;
            s.scenario.cluster_count = 4;
            s.scenario.cluster_radius_m = 20.0;
            return s;
        }
    }

    std::vector<ExperimentSpec> preset_catalog(bool full_scale)
    {
        std::vector<ExperimentSpec> out;

        {
            ExperimentSpec s;
            s.id = "fig1-case-study";
            s.description = "Two-UE LoS case study, M = 64, N = 2, SNR 0 dB, UE 1 at 30 deg; SE of UE 1 vs the "
                            "azimuth of UE 2 for mMIMO and NOMA (orthogonal and random codes) with MR and MMSE";
            s.kind = ExperimentKind::case_study;
            s.config = NetworkConfig::reference(1, 64, 2, 2, 2);
            s.schemes = {"mMIMO", "NOMA-orthogonal", "NOMA-random"};
            s.sweep_parameter = "angle";
            s.sweep_values = angle_grid(-60.0, 60.0, full_scale ? 0.25 : 1.0);
            s.trials = 1;
            s.drops = 1;
            s.dl_min_trials = 1;
            s.runtime_budget = "< 1 s";
            out.push_back(s);
        }
        for (auto model : {ChannelModel::one_ring_2d, ChannelModel::one_ring_3d})
        {
            ExperimentSpec s;
            s.id = model == ChannelModel::one_ring_2d ? "fig2-angle-2d" : "fig2-angle-3d";
            s.description = "Single cell, two UEs at equal distance, ASD 2 deg, M = 64, N = 2; UL SE of UE 1 at "
                            "30 deg vs the azimuth of UE 2 with estimated channels";
            s.kind = ExperimentKind::two_ue;
            s.model = model;
            s.config = NetworkConfig::reference(1, 64, 2, 2, 2);
            s.schemes = {"mMIMO", "NOMA-orthogonal"};
            s.sweep_parameter = "angle";
            s.sweep_values = angle_grid(-90.0, 90.0, full_scale ? 1.0 : 5.0);
            s.trials = full_scale ? 1000 : 200;
            s.drops = 1;
            s.dl_min_trials = 50;
            s.runtime_budget = full_scale ? "~1 min" : "~5 s";
            out.push_back(s);
        }
        {
            ExperimentSpec s;
            s.id = "fig3-favorable";
            s.description = "Favorable-propagation variance delta between UE 1 at 30 deg and UE 2 vs its azimuth "
                            "for the 2D, 3D and uncorrelated models (se_bits column holds delta)";
            s.kind = ExperimentKind::favorable;
            s.config = NetworkConfig::reference(1, 64, 2, 1, 2);
            s.schemes = {};
            s.sweep_parameter = "angle";
            s.sweep_values = angle_grid(-90.0, 90.0, full_scale ? 0.5 : 1.0);
            s.trials = 1;
            s.drops = 1;
            s.dl_min_trials = 1;
            s.runtime_budget = "~2 s";
            out.push_back(s);
        }
        {
            ExperimentSpec s;
            s.id = "fig4-sector";
            s.description = "K = 16 UEs per cell in a 30 deg sector at up to 100 m; UL and DL SE vs N (M = 64, "
                            "G = K / N) and vs M (N = 4)";
            s.config = NetworkConfig::reference(4, 64, 16, 4, 16);
            s.scenario.type = DropType::sector;
            s.scenario.sector_half_angle = deg_to_rad(15.0);
            s.scenario.sector_radius_m = 100.0;
            s.sweep_parameter = "overrides";
            s.sweep_values = {"N=1", "N=2", "N=4", "N=8", "N=16", "M=16;N=4", "M=36;N=4", "M=100;N=4"};
            s.trials = full_scale ? 500 : 100;
            s.drops = full_scale ? 50 : 10;
            s.runtime_budget = full_scale ? "~2 h" : "~10 min";
            out.push_back(s);
        }
        {
            ExperimentSpec s;
            s.id = "fig5-offline-grouping";
            s.description = "Offline k-means grouping of 1000 UEs in a 120 deg sector of radius 125 m into G = 8 "
                            "groups of p = 6 dimensions, 3D model, 8 x 8 array";
            s.kind = ExperimentKind::grouping_map;
            s.config = NetworkConfig::reference(1, 64, 1000, 1, 1);
            s.scenario.type = DropType::sector;
            s.scenario.sector_half_angle = deg_to_rad(60.0);
            s.scenario.sector_radius_m = 125.0;
            s.scenario.sector_orientation = 0.0;
            s.schemes = {};
            s.groups = 8;
            s.grouping_dim = 6;
            s.trials = 1;
            s.drops = 1;
            s.dl_min_trials = 1;
            s.runtime_budget = "~5 s";
            out.push_back(s);
        }
        {
            ExperimentSpec s = clustered("fig6-clusters", 32, 8);
            s.description = "Four clusters of radius 20 m per cell, N = K / 4, G = 4; UL and DL SE vs K for "
                            "mMIMO and NOMA with random or grouped signature assignment";
            s.sweep_parameter = "overrides";
            s.sweep_values = {"K=16;N=4;tau_p=16", "K=32;N=8;tau_p=32", "K=64;N=16;tau_p=64"};
            if (full_scale)
                s.sweep_values.emplace_back("K=128;N=32;tau_p=128");
            s.trials = full_scale ? 500 : 100;
            s.drops = full_scale ? 50 : 10;
            s.runtime_budget = full_scale ? "several hours" : "~15 min";
            out.push_back(s);
        }
        {
            ExperimentSpec s = clustered("fig7-signatures", 32, 4);
            s.description = "Clustered setup with N = 4 and grouped assignment; UL SE vs K for orthogonal, "
                            "random and sparse signatures";
            s.schemes = {"NOMA-grouped"};
            s.sweep_parameter = "overrides";
            for (int K : full_scale ? std::vector<int>{16, 32, 64, 128} : std::vector<int>{16, 32})
                for (const char *kind : {"orthogonal", "random", "sparse"})
                    s.sweep_values.push_back("K=" + std::to_string(K) + ";tau_p=" + std::to_string(K) +
                                             ";signature=" + kind);
            s.trials = full_scale ? 500 : 50;
            s.drops = full_scale ? 50 : 10;
            s.runtime_budget = full_scale ? "several hours" : "~20 min";
            out.push_back(s);
        }
        {
            ExperimentSpec s = clustered("fig8-pilots", 32, 8);
            s.description = "Clustered setup with K = 32 and N = 8; SE vs the number of pilots with tau_u fixed";
            s.schemes = {"mMIMO", "NOMA-grouped"};
            s.fixed_tau_u = true;
            s.config.tau_u = 84;
            s.config.tau_d = s.config.tau_c - s.config.tau_p - s.config.tau_u;
            s.sweep_parameter = "tau_p";
            s.sweep_values = {"1", "2", "4", "8", "16", "32"};
            s.trials = full_scale ? 500 : 100;
            s.drops = full_scale ? 50 : 10;
            s.runtime_budget = full_scale ? "~1 h" : "~10 min";
            out.push_back(s);
        }
        return out;
    }

    std::optional<ExperimentSpec> find_preset(const std::string &name, bool full_scale)
    {
        for (auto &s : preset_catalog(full_scale))
            if (s.id == name)
                return s;
        return std::nullopt;
    }

    void write_results_csv(std::ostream &out, const std::vector<ResultRow> &rows)
    {
        out << "scenario_id,cell,ue,scheme,N,M,K,se_bits,sinr_mean,ci_halfwidth,trials,seed\n";
        const auto flags = out.flags();
        const auto precision = out.precision();
        out << std::setprecision(10);
        for (const auto &r : rows)
            out << r.scenario_id << ',' << r.cell << ',' << r.ue << ',' << r.scheme << ',' << r.N << ',' << r.M
                << ',' << r.K << ',' << r.se_bits << ',' << r.sinr_mean << ',' << r.ci_halfwidth << ','
                << r.trials << ',' << r.seed << '\n';
        out.flags(flags);
        out.precision(precision);
    }

    std::vector<std::vector<CorrelationMatrix>> correlations_for_drop(const SimulationSetup &setup, const Drop &drop)
    {
        const int L = drop.cells;
        const int K = drop.ues_per_cell;
        const int M = setup.config.antennas;
        std::vector<std::vector<CorrelationMatrix>> out(static_cast<std::size_t>(L));
        for (int j = 0; j < L; ++j)
            for (int l = 0; l < L; ++l)
                for (int k = 0; k < K; ++k)
                {
                    const auto &g = drop.link(j, l, k);
                    const double beta = large_scale_fading(g);
                    switch (setup.model)
                    {
                    case ChannelModel::one_ring_2d:
                        out[static_cast<std::size_t>(j)].push_back(
                            corr_2d_one_ring(beta, g.azimuth, g.angular_spread, M));
                        break;
                    case ChannelModel::one_ring_3d:
                        out[static_cast<std::size_t>(j)].push_back(corr_3d_one_ring(
                            beta, g.azimuth, g.elevation, g.angular_spread, setup.elevation_spread, M));
                        break;
                    case ChannelModel::uncorrelated:
                        out[static_cast<std::size_t>(j)].push_back(
                            make_correlation(beta * CMat::Identity(M, M)));
                        break;
                    }
                }
        return out;
    }

    Drop two_ue_drop(const NetworkConfig &config, double azimuth1, double azimuth2, double distance_m,
                     double angular_spread)
    {
        if (config.cells != 1 || config.ues_per_cell != 2)
            throw ConfigError("two_ue_drop: needs one cell with K = 2");
        if (!(distance_m >= min_bs_distance_m))
            throw DomainError("two_ue_drop: distance below the minimum BS distance");
        Drop d;
        d.cells = 1;
        d.ues_per_cell = 2;
        d.bs = {Point{}};
        d.positions.resize(1);
        d.cluster = {{-1, -1}};
        for (double az : {azimuth1, azimuth2})
        {
            const Point p{distance_m * std::cos(az), distance_m * std::sin(az)};
            d.positions[0].push_back(p);
            LinkGeometry g;
            g.distance_m = distance_m;
            g.azimuth = az;
            g.elevation = -std::atan((bs_height_m - ue_height_m) / distance_m);
            g.angular_spread = angular_spread;
            d.links.push_back(g);
        }
        return d;
    }

    namespace
    {
        constexpr std::array<CombinerScheme, 2> combiners = {CombinerScheme::mr, CombinerScheme::mmse};

        struct SchemeRun
        {
            std::string name;
            SignatureAssignment signatures;
            NetworkConfig config;
            bool orthogonal = false;
            std::vector<CVec> u;                       // [flat]
            std::vector<std::vector<int>> cosets;      // [signature index] flat UEs
            std::vector<std::vector<CMat>> z_bar;      // [bs][signature index]
            std::vector<CMat> Z;                       // [bs]
            std::array<std::vector<std::vector<double>>, 2> ul; // [combiner][flat][trial]
            std::vector<HardeningAccumulator> dl;      // [combiner]
        };

        SignatureAssignment assign_for_scheme(const SchemeSpec &scheme, const SimulationSetup &setup,
                                              const std::vector<std::vector<CorrelationMatrix>> &R, Rng &rng)
        {
            const int L = setup.config.cells;
            const int K = setup.config.ues_per_cell;
            const int N = setup.config.signature_length;
            switch (scheme.assignment)
            {
            case Assignment::none:
            {
                SignatureSet single;
                single.vectors = {CVec::Ones(1)};
                return assign_cyclic(single, L, K);
            }
            case Assignment::cyclic:
                return assign_cyclic(make_set(setup.signature_kind, N, N, rng), L, K);
            case Assignment::random:
                return assign_random(make_set(setup.signature_kind, N, N, rng), L, K, rng);
            case Assignment::grouped:
            {
                SignatureSet set = make_set(setup.signature_kind, N, N, rng);
                std::vector<std::vector<std::vector<int>>> groups;
                for (int l = 0; l < L; ++l)
                {
                    std::vector<CMat> own;
                    for (int k = 0; k < K; ++k)
                        own.push_back(R[static_cast<std::size_t>(l)][static_cast<std::size_t>(l * K + k)].R);
                    groups.push_back(balanced_group(own, K / N, setup.grouping_dim, rng).groups);
                }
                return assign_grouped(std::move(set), groups, K);
            }
            }
            throw ContractViolation("unhandled assignment");
        }

        double sq(double x) { return x * x; }
    }

    DropOutcome simulate_drop(const SimulationSetup &setup, const Drop &drop, std::uint64_t seed,
                              std::uint64_t drop_index)
    {
        const NetworkConfig &cfg = setup.config;
        cfg.validate();
        if (drop.cells != cfg.cells || drop.ues_per_cell != cfg.ues_per_cell)
            throw ConfigError("simulate_drop: drop does not match the configuration");
        const int L = cfg.cells;
        const int K = cfg.ues_per_cell;
        const int T = cfg.total_ues();
        const int M = cfg.antennas;
        const auto Ls = static_cast<std::size_t>(L);
        const auto Ts = static_cast<std::size_t>(T);
        auto cell_of = [K](int t) { return t / K; };

        const auto R = correlations_for_drop(setup, drop);
        std::vector<std::vector<ChannelSampler>> samplers(Ls);
        for (std::size_t j = 0; j < Ls; ++j)
            for (const auto &c : R[j])
                samplers[j].emplace_back(c);

        const auto pilots = assign_cyclic(orthogonal_set(cfg.tau_p), L, K).per_ue();
        std::vector<PilotEstimator> estimators;
        for (std::size_t j = 0; j < Ls; ++j)
        {
            std::vector<CMat> corr;
            for (const auto &c : R[j])
                corr.push_back(c.R);
            estimators.emplace_back(pilots, cfg.p_ul, std::move(corr), cfg.sigma2_ul);
        }

        std::vector<SchemeRun> runs;
        for (std::size_t si = 0; si < setup.schemes.size(); ++si)
        {
            const auto &scheme = setup.schemes[si];
            Rng rng = make_stream(seed, {drop_index, 0x736368656d65ULL, si}); // "scheme"
            SchemeRun run;
            run.name = scheme.name;
            run.signatures = assign_for_scheme(scheme, setup, R, rng);
            run.config = cfg;
            run.config.signature_length = run.signatures.set.length();
            run.u = run.signatures.per_ue();
            run.orthogonal = is_mutually_orthogonal(run.signatures.set.vectors);
            const int N = run.config.signature_length;
            if (run.orthogonal)
            {
                run.cosets.resize(static_cast<std::size_t>(run.signatures.set.size()));
                for (int t = 0; t < T; ++t)
                    run.cosets[static_cast<std::size_t>(run.signatures.index[static_cast<std::size_t>(t)])]
                        .push_back(t);
                for (std::size_t j = 0; j < Ls; ++j)
                {
                    std::vector<CMat> errors;
                    for (int t = 0; t < T; ++t)
                        errors.push_back(estimators[j].C(t));
                    auto &per_sig = run.z_bar.emplace_back();
                    for (const auto &coset : run.cosets)
                        per_sig.push_back(coset.empty() ? CMat()
                                                        : build_Z_bar(coset, cfg.p_ul, errors, cfg.sigma2_ul, N));
                }
            }
            else
                for (std::size_t j = 0; j < Ls; ++j)
                {
                    std::vector<CMat> errors;
                    for (int t = 0; t < T; ++t)
                        errors.push_back(estimators[j].C(t));
                    run.Z.push_back(build_Z(run.u, cfg.p_ul, errors, cfg.sigma2_ul));
                }
            for (auto &per : run.ul)
                per.assign(Ts, std::vector<double>(static_cast<std::size_t>(setup.trials)));
            run.dl.assign(2, HardeningAccumulator(T));
            runs.push_back(std::move(run));
        }

        std::vector<std::vector<CVec>> h(Ls, std::vector<CVec>(Ts));
        std::vector<std::vector<CVec>> h_hat(Ls);
        std::vector<double> norm2(Ts);
        std::vector<cd> own(Ts);
        RMat cross(T, T);
        for (int trial = 0; trial < setup.trials; ++trial)
        {
            Rng rng = make_stream(seed, {drop_index, static_cast<std::uint64_t>(trial)});
            for (std::size_t j = 0; j < Ls; ++j)
                for (std::size_t t = 0; t < Ts; ++t)
                    h[j][t] = samplers[j][t].draw(rng);
            for (std::size_t j = 0; j < Ls; ++j)
                h_hat[j] = estimators[j].estimate_all(observe_pilots(pilots, cfg.p_ul, h[j], cfg.sigma2_ul, rng));

            for (auto &run : runs)
            {
                // combiners[c][t]: the combiner of UE t at its own BS
                std::array<std::vector<CVec>, 2> v;
                v[0].resize(Ts);
                v[1].resize(Ts);
                if (run.orthogonal)
                {
                    for (int l = 0; l < L; ++l)
                    {
                        const auto &hh = h_hat[static_cast<std::size_t>(l)];
                        for (std::size_t s = 0; s < run.cosets.size(); ++s)
                        {
                            const auto &coset = run.cosets[s];
                            if (std::none_of(coset.begin(), coset.end(), [&](int t) { return cell_of(t) == l; }))
                                continue;
                            const CMat &zb = run.z_bar[static_cast<std::size_t>(l)][s];
                            const OrthogonalMmseSystem sys(coset, hh, cfg.p_ul, zb);
                            for (int t : coset)
                            {
                                if (cell_of(t) != l)
                                    continue;
                                const auto ts = static_cast<std::size_t>(t);
                                const CVec &g = hh[ts];
                                double interference = g.dot(zb * g).real();
                                for (int i : coset)
                                    if (i != t)
                                        interference += cfg.p_ul[static_cast<std::size_t>(i)] *
                                                        std::norm(g.dot(hh[static_cast<std::size_t>(i)]));
                                run.ul[0][ts][static_cast<std::size_t>(trial)] =
                                    cfg.p_ul[ts] * sq(g.squaredNorm()) / interference;
                                run.ul[1][ts][static_cast<std::size_t>(trial)] =
                                    mmse_sinr_from_quadratic_form(sys.quadratic_form(t));
                                v[0][ts] = g;
                                v[1][ts] = sys.combiner(t);
                            }
                        }
                    }
                    for (std::size_t c = 0; c < 2; ++c)
                    {
                        cross.setZero();
                        for (int t = 0; t < T; ++t)
                        {
                            const auto ts = static_cast<std::size_t>(t);
                            const auto &hl = h[static_cast<std::size_t>(cell_of(t))];
                            const CVec &w = v[c][ts];
                            norm2[ts] = w.squaredNorm();
                            own[ts] = w.dot(hl[ts]);
                            const auto sig = static_cast<std::size_t>(run.signatures.index[ts]);
                            for (int s : run.cosets[sig])
                                cross(t, s) = std::norm(w.dot(hl[static_cast<std::size_t>(s)]));
                        }
                        run.dl[c].add(trial, norm2, own, cross);
                    }
                }
                else
                {
                    const Eigen::Index MN = static_cast<Eigen::Index>(M) * run.config.signature_length;
                    for (int l = 0; l < L; ++l)
                    {
                        const auto ls = static_cast<std::size_t>(l);
                        std::vector<CVec> g_hat(Ts);
                        CMat G(MN, T);
                        for (std::size_t t = 0; t < Ts; ++t)
                        {
                            g_hat[t] = effective_channel(run.u[t], h_hat[ls][t]);
                            G.col(static_cast<Eigen::Index>(t)) = g_hat[t];
                        }
                        const NmmseSystem sys(g_hat, cfg.p_ul, run.Z[ls]);
                        const CMat gram = G.adjoint() * G.middleCols(l * K, K);
                        for (int k = 0; k < K; ++k)
                        {
                            const int t = l * K + k;
                            const auto ts = static_cast<std::size_t>(t);
                            double interference = g_hat[ts].dot(run.Z[ls] * g_hat[ts]).real();
                            for (int i = 0; i < T; ++i)
                                if (i != t)
                                    interference += cfg.p_ul[static_cast<std::size_t>(i)] * std::norm(gram(i, k));
                            run.ul[0][ts][static_cast<std::size_t>(trial)] =
                                cfg.p_ul[ts] * std::norm(gram(t, k)) / interference;
                            run.ul[1][ts][static_cast<std::size_t>(trial)] =
                                mmse_sinr_from_quadratic_form(sys.quadratic_form(t));
                            v[0][ts] = g_hat[ts];
                            v[1][ts] = sys.combiner(t);
                        }
                    }
                    // cross(t, s) = |v_t^H g_s|^2 with g_s the true channel at t's BS
                    std::array<RMat, 2> crosses = {RMat(T, T), RMat(T, T)};
                    for (int l = 0; l < L; ++l)
                    {
                        const auto ls = static_cast<std::size_t>(l);
                        CMat G_true(MN, T);
                        for (std::size_t s = 0; s < Ts; ++s)
                            G_true.col(static_cast<Eigen::Index>(s)) = effective_channel(run.u[s], h[ls][s]);
                        for (std::size_t c = 0; c < 2; ++c)
                        {
                            CMat W(MN, K);
                            for (int k = 0; k < K; ++k)
                                W.col(k) = v[c][static_cast<std::size_t>(l * K + k)];
                            crosses[c].middleRows(l * K, K) = (W.adjoint() * G_true).cwiseAbs2();
                        }
                    }
                    for (std::size_t c = 0; c < 2; ++c)
                    {
                        for (int t = 0; t < T; ++t)
                        {
                            const auto ts = static_cast<std::size_t>(t);
                            const auto &hl = h[static_cast<std::size_t>(cell_of(t))];
                            norm2[ts] = v[c][ts].squaredNorm();
                            own[ts] = v[c][ts].dot(effective_channel(run.u[ts], hl[ts]));
                        }
                        run.dl[c].add(trial, norm2, own, crosses[c]);
                    }
                }
            }
        }

        DropOutcome out;
        for (auto &run : runs)
        {
            for (std::size_t c = 0; c < 2; ++c)
            {
                const std::string suffix = run.name + "-" + to_string(combiners[c]);
                const auto ul = ul_se(run.config, run.ul[c]);
                const std::string ul_label = "UL/" + suffix;
                out.labels.push_back(ul_label);
                out.se[ul_label] = ul.se;
                out.sinr[ul_label] = ul.sinr_mean;
                out.std_error[ul_label] = ul.std_error;
                out.signature_length[ul_label] = run.config.signature_length;

                const double noise =
                    run.orthogonal ? run.config.sigma2_dl / run.config.signature_length : run.config.sigma2_dl;
                const auto dl = dl_se_hardening(run.config, run.dl[c], noise, setup.dl_min_trials);
                const std::string dl_label = "DL/" + suffix;
                out.labels.push_back(dl_label);
                out.se[dl_label] = dl.se;
                out.sinr[dl_label] = dl.sinr_mean;
                out.std_error[dl_label] = dl.std_error;
                out.signature_length[dl_label] = run.config.signature_length;
            }
        }
        return out;
    }
}

namespace noma
{
    namespace
    {
        struct Moments
        {
            double mean = 0.0;
            double sd = 0.0;
        };

        Moments moments(const std::vector<double> &x)
        {
            Moments m;
            if (x.empty())
                return m;
            m.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
            if (x.size() > 1)
            {
                double ss = 0.0;
                for (double v : x)
                    ss += (v - m.mean) * (v - m.mean);
                m.sd = std::sqrt(ss / static_cast<double>(x.size() - 1));
            }
            return m;
        }

        constexpr double z95 = 1.959963984540054;

        // Runs tasks on up to `threads` workers; the first exception is rethrown.
        void run_tasks(std::vector<std::function<void()>> &tasks, int threads)
        {
            const int workers = std::max(1, std::min<int>(threads, static_cast<int>(tasks.size())));
            std::atomic<std::size_t> next{0};
            std::exception_ptr failure;
            std::mutex failure_lock;
            auto work = [&] {
                for (;;)
                {
                    const std::size_t i = next++;
                    if (i >= tasks.size())
                        return;
                    try
                    {
                        tasks[i]();
                    }
                    catch (...)
                    {
                        std::lock_guard<std::mutex> lock(failure_lock);
                        if (!failure)
                            failure = std::current_exception();
                        next = tasks.size();
                    }
                }
            };
            if (workers == 1)
                work();
            else
            {
                std::vector<std::thread> pool;
                for (int w = 0; w < workers; ++w)
                    pool.emplace_back(work);
                for (auto &t : pool)
                    t.join();
            }
            if (failure)
                std::rethrow_exception(failure);
        }

        std::string point_id(const ExperimentSpec &spec, const std::string &value)
        {
            if (spec.sweep_parameter == "none")
                return spec.id;
            if (spec.sweep_parameter == "overrides")
                return spec.id + "@" + value;
            return spec.id + "@" + spec.sweep_parameter + "=" + value;
        }

        std::uint64_t drop_seed(std::uint64_t seed, int drop)
        {
            Rng rng = make_stream(seed, {0x64726f70ULL, static_cast<std::uint64_t>(drop)});
            return rng();
        }

        std::vector<ResultRow> network_rows(const ExperimentSpec &spec, int threads)
        {
            const auto points = expand_sweep(spec);
            const auto P = points.size();
            const auto D = static_cast<std::size_t>(spec.drops);
            std::vector<DropOutcome> outcomes(P * D);
            std::vector<std::function<void()>> tasks;
            for (std::size_t p = 0; p < P; ++p)
                for (std::size_t d = 0; d < D; ++d)
                    tasks.emplace_back([&, p, d] {
                        const auto &setup = points[p].setup;
                        const Drop drop =
                            spec.kind == ExperimentKind::two_ue
                                ? two_ue_drop(setup.config, spec.reference_angle,
                                              deg_to_rad(std::stod(points[p].value)), spec.ue_distance_m,
                                              setup.scenario.angular_spread)
                                : drop_ues(setup.config, setup.scenario, drop_seed(spec.seed, static_cast<int>(d)));
                        outcomes[p * D + d] = simulate_drop(setup, drop, spec.seed, d);
                    });
            run_tasks(tasks, threads);

            std::vector<ResultRow> rows;
            for (std::size_t p = 0; p < P; ++p)
            {
                const auto &cfg = points[p].setup.config;
                const int K = cfg.ues_per_cell;
                const int T = cfg.total_ues();
                const auto &first = outcomes[p * D];
                for (const auto &label : first.labels)
                {
                    ResultRow base;
                    base.scenario_id = point_id(spec, points[p].value);
                    base.scheme = label;
                    base.N = first.signature_length.at(label);
                    base.M = cfg.antennas;
                    base.K = K;
                    base.trials = spec.trials * spec.drops;
                    base.seed = spec.seed;

                    std::vector<double> sums(D, 0.0);
                    std::vector<double> sum_sinr(D, 0.0);
                    double sum_var = 0.0;
                    for (int t = 0; t < T; ++t)
                    {
                        const auto ts = static_cast<std::size_t>(t);
                        std::vector<double> se(D);
                        std::vector<double> sinr(D);
                        for (std::size_t d = 0; d < D; ++d)
                        {
                            const auto &o = outcomes[p * D + d];
                            se[d] = o.se.at(label)[ts];
                            sinr[d] = o.sinr.at(label)[ts];
                            sums[d] += se[d] / cfg.cells;
                            sum_sinr[d] += sinr[d] / T;
                        }
                        const double within = outcomes[p * D].std_error.at(label)[ts];
                        sum_var += within * within;
                        const auto m = moments(se);
                        ResultRow r = base;
                        r.cell = t / K;
                        r.ue = t % K;
                        r.se_bits = m.mean;
                        r.sinr_mean = moments(sinr).mean;
                        r.ci_halfwidth = D > 1 ? z95 * m.sd / std::sqrt(static_cast<double>(D)) : z95 * within;
                        rows.push_back(r);
                    }
                    // average sum SE per cell
                    const auto m = moments(sums);
                    ResultRow r = base;
                    r.cell = -1;
                    r.ue = -1;
                    r.se_bits = m.mean;
                    r.sinr_mean = moments(sum_sinr).mean;
                    r.ci_halfwidth = D > 1 ? z95 * m.sd / std::sqrt(static_cast<double>(D))
                                           : z95 * std::sqrt(sum_var) / cfg.cells;
                    rows.push_back(r);
                }
            }
            return rows;
        }

        // E{f(|u1^H u2 / N|^2)} over independent +-1 pairs: the number of
        // disagreeing chips is Binomial(N, 1/2).
        template <class F>
        double random_code_expectation(int N, F f)
        {
            double total = 0.0;
            for (int b = 0; b <= N; ++b)
            {
                const double weight = std::exp(std::lgamma(N + 1.0) - std::lgamma(b + 1.0) -
                                               std::lgamma(N - b + 1.0) - N * std::log(2.0));
                const double c = static_cast<double>(N - 2 * b) / N;
                total += weight * f(c * c);
            }
            return total;
        }

        std::vector<ResultRow> case_study_rows(const ExperimentSpec &spec)
        {
            const int M = spec.config.antennas;
            const int N = spec.config.signature_length;
            const double snr = db_to_linear(spec.snr_db);
            const double phi1 = spec.reference_angle;
            std::vector<ResultRow> rows;
            for (const auto &value : spec.sweep_values)
            {
                const double phi2 = deg_to_rad(std::stod(value));
                for (const auto &name : spec.schemes)
                {
                    const auto scheme = scheme_from_string(name);
                    for (auto comb : combiners)
                    {
                        ResultRow r;
                        r.scenario_id = point_id(spec, value);
                        r.scheme = "UL/" + name + "-" + to_string(comb);
                        r.M = M;
                        r.K = 2;
                        r.seed = spec.seed;
                        switch (scheme.assignment)
                        {
                        case Assignment::none:
                            r.N = 1;
                            r.se_bits = case_study_se(M, 1, snr, phi1, phi2, CaseStudyCode::none, comb);
                            r.sinr_mean = case_study_sinr(M, 1, snr, phi1, phi2, 1.0, comb);
                            break;
                        case Assignment::cyclic:
                            r.N = N;
                            r.se_bits = case_study_se(M, N, snr, phi1, phi2, CaseStudyCode::orthogonal, comb);
                            r.sinr_mean = case_study_sinr(M, N, snr, phi1, phi2, 0.0, comb);
                            break;
                        case Assignment::random:
                        case Assignment::grouped:
                            r.N = N;
                            r.se_bits = case_study_se(M, N, snr, phi1, phi2, CaseStudyCode::random, comb);
                            r.sinr_mean = random_code_expectation(
                                N, [&](double w) { return case_study_sinr(M, N, snr, phi1, phi2, w, comb); });
                            break;
                        }
                        rows.push_back(r);
                    }
                }
            }
            return rows;
        }

        std::vector<ResultRow> favorable_rows(const ExperimentSpec &spec)
        {
            const int M = spec.config.antennas;
            const double spread = spec.scenario.angular_spread;
            const double el = -std::atan((bs_height_m - ue_height_m) / spec.ue_distance_m);
            const double phi1 = spec.reference_angle;
            const auto R1_2d = corr_2d_one_ring(1.0, phi1, spread, M);
            const auto R1_3d = corr_3d_one_ring(1.0, phi1, el, spread, spec.elevation_spread, M);
            const CMat I = CMat::Identity(M, M);
            std::vector<ResultRow> rows;
            for (const auto &value : spec.sweep_values)
            {
                const double phi2 = deg_to_rad(std::stod(value));
                const std::array<std::pair<std::string, double>, 3> deltas = {
                    std::pair{std::string("delta-2D"),
                              favorable_variance(R1_2d.R, corr_2d_one_ring(1.0, phi2, spread, M).R)},
                    std::pair{std::string("delta-3D"),
                              favorable_variance(R1_3d.R,
                                                 corr_3d_one_ring(1.0, phi2, el, spread, spec.elevation_spread, M).R)},
                    std::pair{std::string("delta-uncorrelated"), favorable_variance(I, I)}};
                for (const auto &[name, delta] : deltas)
                {
                    ResultRow r;
                    r.scenario_id = point_id(spec, value);
                    r.scheme = name;
                    r.M = M;
                    r.K = 2;
                    r.se_bits = delta;
                    r.seed = spec.seed;
                    rows.push_back(r);
                }
            }
            return rows;
        }
    }

    GroupingMap compute_grouping_map(const ExperimentSpec &spec)
    {
        spec.validate();
        if (spec.kind != ExperimentKind::grouping_map)
            throw ConfigError("compute_grouping_map: not a grouping-map experiment");
        const Drop drop = drop_ues(spec.config, spec.scenario, drop_seed(spec.seed, 0));
        const int M = spec.config.antennas;
        GroupingMap map;
        std::vector<CMat> R;
        for (int k = 0; k < drop.ues_per_cell; ++k)
        {
            const auto &g = drop.link(0, 0, k);
            R.push_back(corr_3d_one_ring(large_scale_fading(g), g.azimuth, g.elevation, g.angular_spread,
                                         spec.elevation_spread, M)
                            .R);
            map.azimuth.push_back(g.azimuth);
            const auto &p = drop.positions[0][static_cast<std::size_t>(k)];
            map.position.push_back({p.x - drop.bs[0].x, p.y - drop.bs[0].y});
        }
        Rng rng = make_stream(spec.seed, {0x67726f7570ULL}); // "group"
        map.assignment = kmeans_group(R, spec.groups, spec.grouping_dim, rng);
        return map;
    }

    void write_grouping_map_csv(std::ostream &out, const GroupingMap &map)
    {
        out << "ue_id,group_id,distance_to_center,azimuth_deg,x_m,y_m\n";
        const auto flags = out.flags();
        const auto precision = out.precision();
        out << std::setprecision(10);
        const auto &a = map.assignment;
        for (std::size_t k = 0; k < a.group_of.size(); ++k)
            out << k << ',' << a.group_of[k] << ',' << a.distance[k] << ',' << rad_to_deg(map.azimuth[k]) << ','
                << map.position[k].x << ',' << map.position[k].y << '\n';
        out.flags(flags);
        out.precision(precision);
    }

    std::vector<ResultRow> run_rows(const ExperimentSpec &spec, int threads)
    {
        spec.validate();
        switch (spec.kind)
        {
        case ExperimentKind::network:
        case ExperimentKind::two_ue:
            return network_rows(spec, threads);
        case ExperimentKind::case_study:
            return case_study_rows(spec);
        case ExperimentKind::favorable:
            return favorable_rows(spec);
        case ExperimentKind::grouping_map:
            return {};
        }
        return {};
    }

    RunOutput run_experiment(const ExperimentSpec &spec, const RunOptions &options)
    {
        spec.validate();
        const auto start = std::chrono::steady_clock::now();
        RunOutput out;
        out.directory = options.out_dir / spec.id / std::to_string(spec.seed);
        std::filesystem::create_directories(out.directory);

        if (spec.kind == ExperimentKind::grouping_map)
        {
            const auto map = compute_grouping_map(spec);
            const auto path = out.directory / "groups.csv";
            std::ofstream f(path);
            write_grouping_map_csv(f, map);
            if (!f)
                throw std::runtime_error("cannot write " + path.string());
            out.files.push_back(path);
        }
        else
        {
            out.rows = run_rows(spec, options.threads);
            const auto path = out.directory / "results.csv";
            std::ofstream f(path);
            write_results_csv(f, out.rows);
            if (!f)
                throw std::runtime_error("cannot write " + path.string());
            out.files.push_back(path);
        }
        out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        nlohmann::json manifest;
        manifest["experiment"] = to_json(spec);
        manifest["version"] = library_version();
        manifest["wall_seconds"] = out.wall_seconds;
        manifest["threads"] = options.threads;
        manifest["rows"] = out.rows.size();
        std::vector<std::string> files;
        for (const auto &p : out.files)
            files.push_back(p.filename().string());
        manifest["files"] = files;
        const auto path = out.directory / "manifest.json";
        std::ofstream f(path);
        f << manifest.dump(2) << '\n';
        if (!f)
            throw std::runtime_error("cannot write " + path.string());
        out.files.push_back(path);
        return out;
    }
}
