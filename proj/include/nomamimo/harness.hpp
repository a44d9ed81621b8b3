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

#ifndef NOMAMIMO_HARNESS_HPP
#define NOMAMIMO_HARNESS_HPP

#include "nomamimo/channel.hpp"
#include "nomamimo/grouping.hpp"
#include "nomamimo/netconfig.hpp"
#include "nomamimo/signatures.hpp"
#include "nomamimo/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace noma
{
    enum class ChannelModel
    {
        one_ring_2d,
        one_ring_3d,
        uncorrelated
    };

    std::string to_string(ChannelModel model);
    ChannelModel channel_model_from_string(const std::string &name);

    enum class ExperimentKind
    {
        network,      // multicell Monte Carlo over drops and trials
        case_study,   // two-UE LoS closed forms
        two_ue,       // two-UE single cell with estimated correlated channels
        favorable,    // favorable-propagation variance vs angle
        grouping_map  // offline grouping of a large UE population
    };

    std::string to_string(ExperimentKind kind);
    ExperimentKind experiment_kind_from_string(const std::string &name);

    // How a scheme maps UEs to spreading signatures.
    enum class Assignment
    {
        none,    // classical mMIMO, N = 1
        cyclic,  // UE k gets signature k mod N
        random,  // uniform random signature index
        grouped  // balanced grouping, position in group = signature index
    };

    struct SchemeSpec
    {
        std::string name;
        Assignment assignment = Assignment::none;
    };

    // "mMIMO", "NOMA-orthogonal", "NOMA-random", "NOMA-grouped"
    SchemeSpec scheme_from_string(const std::string &name);

    struct ExperimentSpec
    {
        std::string id;
        std::string description;
        ExperimentKind kind = ExperimentKind::network;
        NetworkConfig config = NetworkConfig::reference(4, 64, 32, 8, 32);
        Scenario scenario;
        ChannelModel model = ChannelModel::one_ring_3d;
        double elevation_spread = deg_to_rad(2.0);
        SignatureKind signature_kind = SignatureKind::orthogonal;
        std::vector<std::string> schemes = {"mMIMO", "NOMA-random", "NOMA-grouped"};
        // one of none, N, M, K, tau_p, signature, angle, overrides
        // ("overrides" values look like "K=16;N=4;tau_p=16")
        std::string sweep_parameter = "none";
        std::vector<std::string> sweep_values;
        int grouping_dim = 6;
        int groups = 8; // grouping maps only; network schemes use K / N
        int trials = 200;
        int drops = 20;
        int dl_min_trials = 50;
        std::uint64_t seed = 1;
        // keep tau_u when sweeping tau_p and let tau_d absorb the change
        bool fixed_tau_u = false;
        // case study, two-UE and favorable-propagation setups
        double reference_angle = deg_to_rad(30.0);
        double snr_db = 0.0;
        double ue_distance_m = 100.0;
        // documented desk-scale runtime on one core
        std::string runtime_budget;

        std::vector<std::string> violations() const;
        void validate() const;
    };

    ExperimentSpec experiment_spec_from_json(const nlohmann::json &j);
    nlohmann::json to_json(const ExperimentSpec &spec);

    // Named presets. full_scale restores publication-size sweeps and trials.
    std::vector<ExperimentSpec> preset_catalog(bool full_scale = false);
    std::optional<ExperimentSpec> find_preset(const std::string &name, bool full_scale = false);

    struct ResultRow
    {
        std::string scenario_id;
        int cell = 0;
        int ue = 0;
        std::string scheme;
        int N = 1;
        int M = 0;
        int K = 0;
        double se_bits = 0.0;
        double sinr_mean = 0.0;
        double ci_halfwidth = 0.0;
        int trials = 0;
        std::uint64_t seed = 0;
    };

    void write_results_csv(std::ostream &out, const std::vector<ResultRow> &rows);

    // The network for one sweep point of a network or two-UE experiment.
    struct SimulationSetup
    {
        NetworkConfig config;
        Scenario scenario;
        ChannelModel model = ChannelModel::one_ring_3d;
        double elevation_spread = deg_to_rad(2.0);
        SignatureKind signature_kind = SignatureKind::orthogonal;
        std::vector<SchemeSpec> schemes;
        int grouping_dim = 6;
        int trials = 200;
        int dl_min_trials = 50;
    };

    // Per-UE outcome of one drop, keyed by "UL/NOMA-grouped-MMSE" style labels.
    struct DropOutcome
    {
        std::vector<std::string> labels;
        std::map<std::string, std::vector<double>> se;
        std::map<std::string, std::vector<double>> sinr;
        std::map<std::string, std::vector<double>> std_error;
        std::map<std::string, int> signature_length;
    };

    // Spatial correlation R_{li}^j for BS j and every UE, flat order.
    std::vector<std::vector<CorrelationMatrix>> correlations_for_drop(const SimulationSetup &setup, const Drop &drop);

    // Runs every scheme of `setup` with MR and MMSE on one drop, using common
    // random numbers across schemes (and across sweep points).
    DropOutcome simulate_drop(const SimulationSetup &setup, const Drop &drop, std::uint64_t seed,
                              std::uint64_t drop_index);

    // Two UEs in a single cell at equal distance and the given azimuths.
    Drop two_ue_drop(const NetworkConfig &config, double azimuth1, double azimuth2, double distance_m,
                     double angular_spread);

    struct GroupingMap
    {
        GroupAssignment assignment;
        std::vector<double> azimuth; // rad
        std::vector<Point> position; // relative to the BS
    };

    // Offline grouping of a grouping_map experiment.
    GroupingMap compute_grouping_map(const ExperimentSpec &spec);

    // ue_id,group_id,distance_to_center,azimuth_deg,x_m,y_m
    void write_grouping_map_csv(std::ostream &out, const GroupingMap &map);

    struct SweepPoint
    {
        std::string value;
        SimulationSetup setup;
    };

    // Applies the sweep of a network or two-UE experiment.
    std::vector<SweepPoint> expand_sweep(const ExperimentSpec &spec);

    // Computes all result rows; threads share nothing and results are merged
    // in sweep order, so the output does not depend on `threads`.
    std::vector<ResultRow> run_rows(const ExperimentSpec &spec, int threads = 1);

    struct RunOptions
    {
        std::filesystem::path out_dir = "results";
        int threads = 1;
    };

    struct RunOutput
    {
        std::filesystem::path directory;
        std::vector<std::filesystem::path> files;
        std::vector<ResultRow> rows;
        double wall_seconds = 0.0;
    };

    // Writes <out_dir>/<id>/<seed>/results.csv (or groups.csv for grouping
    // maps) and manifest.json.
    RunOutput run_experiment(const ExperimentSpec &spec, const RunOptions &options);

    std::string library_version();
}

#endif
