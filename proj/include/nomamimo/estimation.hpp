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

#ifndef NOMAMIMO_ESTIMATION_HPP
#define NOMAMIMO_ESTIMATION_HPP

#include "nomamimo/types.hpp"

#include <span>
#include <vector>

namespace noma
{
    // Received pilot block at one BS, M x tau_p:
    //   Y_p = sum_i sqrt(p_i) h_i phi_i^T + N.
    // vec() stacks columns, so vec(Y_p) = sum_i sqrt(p_i) (phi_i (x) h_i) + vec(N).
    struct PilotObservation
    {
        CMat Y;
    };

    struct ChannelEstimate
    {
        CVec h_hat;
        CMat Phi;
        CMat C;
    };

    // Q = sum_i p_i (phi_i phi_i^H) (x) R_i + sigma2 I, of size M tau_p.
    CMat build_Q(std::span<const CVec> pilots, std::span<const double> powers, std::span<const CMat> correlations,
                 double sigma2);

    // Synthesizes Y_p from channels and a noise draw.
    PilotObservation observe_pilots(std::span<const CVec> pilots, std::span<const double> powers,
                                    std::span<const CVec> channels, double sigma2, Rng &rng);

    // General MMSE estimate of UE `target`:
    //   h_hat = sqrt(p) (phi^H (x) R) Q^{-1} vec(Y_p),
    //   Phi = p (phi^H (x) R) Q^{-1} (phi (x) R).
    ChannelEstimate mmse_estimate(const PilotObservation &obs, int target, std::span<const CVec> pilots,
                                  std::span<const CMat> correlations, std::span<const double> powers, double sigma2);

    // Shortcut for pilot sets where any two pilots are identical or orthogonal:
    //   h_hat = sqrt(p) R Qbar^{-1} Y_p conj(phi),  Qbar = sum_{shared} p tau_p R + sigma2 I.
    ChannelEstimate classical_estimate(const PilotObservation &obs, int target, std::span<const CVec> pilots,
                                       std::span<const CMat> correlations, std::span<const double> powers,
                                       double sigma2);

    // C = R - Phi; throws NumericalError when C has an eigenvalue below
    // -1e-9 tr(R)/M.
    CMat error_covariance(const CMat &R, const CMat &Phi);

    enum class EstimatorRoute
    {
        automatic,
        general,
        classical
    };

    // All estimates at one BS. Gains and covariances are computed once per
    // large-scale realization and reused for every pilot observation.
    class PilotEstimator
    {
    public:
        PilotEstimator(std::vector<CVec> pilots, std::vector<double> powers, std::vector<CMat> correlations,
                       double sigma2, EstimatorRoute route = EstimatorRoute::automatic);

        bool classical() const { return classical_; }
        int ues() const { return static_cast<int>(pilots_.size()); }
        int antennas() const { return static_cast<int>(correlations_.front().rows()); }

        CVec estimate(const PilotObservation &obs, int ue) const;
        std::vector<CVec> estimate_all(const PilotObservation &obs) const;

        const CMat &Phi(int ue) const { return phi_[static_cast<std::size_t>(ue)]; }
        const CMat &C(int ue) const { return error_[static_cast<std::size_t>(ue)]; }
        const CMat &R(int ue) const { return correlations_[static_cast<std::size_t>(ue)]; }

        // E{h_hat_a h_b^H} for two UEs observed at this BS.
        CMat cross_covariance(int a, int b) const;

        // Rough lower bound on cond(Q) from the Cholesky diagonal.
        double condition_estimate() const { return condition_; }

    private:
        std::vector<CVec> pilots_;
        std::vector<double> powers_;
        std::vector<CMat> correlations_;
        double sigma2_;
        bool classical_ = false;
        std::vector<CMat> gain_;
        std::vector<CMat> phi_;
        std::vector<CMat> error_;
        double condition_ = 1.0;
    };
}

#endif
