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

#ifndef NOMAMIMO_SE_HPP
#define NOMAMIMO_SE_HPP

#include "nomamimo/estimation.hpp"
#include "nomamimo/netconfig.hpp"
#include "nomamimo/signatures.hpp"
#include "nomamimo/transceive.hpp"
#include "nomamimo/types.hpp"

#include <span>
#include <vector>

namespace noma
{
    // Per-UE spectral efficiency in bit/s/Hz, prelog included.
    struct SEResult
    {
        std::vector<double> se;
        std::vector<double> sinr_mean;
        // Monte Carlo standard error of se (zero for closed forms).
        std::vector<double> std_error;
        int trials = 0;

        double sum() const;
    };

    // log2(1 + gamma), accurate for small gamma
    double log2_1p(double gamma);

    // (1 / N) (tau / tau_c)
    double prelog(int tau, int tau_c, int signature_length);

    // p_k |v^H g_k|^2 / (v^H (sum_{i != k} p_i g_i g_i^H + Z) v)
    double ul_sinr(const CVec &v, std::span<const CVec> g_hat_all, std::span<const double> powers, const CMat &Z,
                   int k);

    // SINR of the MMSE combiner from a = p_k g_k^H A^{-1} g_k.
    inline double mmse_sinr_from_quadratic_form(double a) { return a / (1.0 - a); }

    // sinr_samples[ue][trial]; prelog uses tau_u and the config's N.
    SEResult ul_se(const NetworkConfig &config, const std::vector<std::vector<double>> &sinr_samples);

    // Sums of the hardening-bound terms for a set of precoders t and
    // receivers s. Trials are spread over batches so that a standard error
    // can be formed from batch means.
    class HardeningAccumulator
    {
    public:
        explicit HardeningAccumulator(int ues, int batches = 20);

        // norm2[t] = ||v_t||^2, own[t] = v_t^H g_t (at t's own BS) and
        // cross(t, s) = |v_t^H g_s|^2 with g_s seen from t's BS.
        void add(int trial, std::span<const double> norm2, std::span<const cd> own, const RMat &cross);

        int ues() const { return ues_; }
        int trials() const { return trials_; }
        int batches() const { return static_cast<int>(batches_.size()); }

        // Hardening SINR of every receiver using the trials of `batch`
        // (or all trials when batch < 0).
        std::vector<double> sinr(std::span<const double> rho, double noise, int batch = -1) const;

    private:
        struct Sums
        {
            RVec norm2;
            CVec own;
            RMat cross;
            int trials = 0;
        };
        int ues_;
        int trials_ = 0;
        std::vector<Sums> batches_;
    };

    // SE = (1/N)(tau_d/tau_c) log2(1 + gamma) with gamma from the sample
    // means. `noise` is sigma2_dl for MN-form precoders and sigma2_dl / N for
    // the reduced orthogonal-signature form. Throws DomainError when fewer
    // than `min_trials` trials were accumulated.
    SEResult dl_se_hardening(const NetworkConfig &config, const HardeningAccumulator &acc, double noise,
                             int min_trials = 100);

    // Closed-form hardening bound with MR precoding w = g_hat / sqrt(E||g_hat||^2)
    // for arbitrary signatures and pilots. estimators[l] holds the estimates
    // at BS l for every UE in flat order.
    SEResult dl_mr_closed_form(const NetworkConfig &config, const SignatureAssignment &signatures,
                               std::span<const PilotEstimator> estimators);

    // Closed form for mutually orthogonal signatures and pilots, written in
    // terms of coherent and non-coherent interference within the co-signature
    // set, with noise sigma2_dl / N.
    SEResult dl_mr_orth_closed_form(const NetworkConfig &config, const SignatureAssignment &signatures,
                                    const SignatureAssignment &pilots, std::span<const PilotEstimator> estimators);

    // tr(R1 R2) / (M^2 beta1 beta2)
    double favorable_variance(const CMat &R1, const CMat &R2);

    enum class CaseStudyCode
    {
        none,
        orthogonal,
        random
    };

    // Two-UE single-cell LoS link with perfect CSI and equal gains.
    // code_overlap = |u1^H u2 / N|^2.
    double case_study_sinr(int antennas, int signature_length, double snr, double phi1, double phi2,
                           double code_overlap, CombinerScheme scheme);

    // SE of UE 1 with prelog 1/N. `none` is classical mMIMO (N = 1); `random`
    // averages exactly over independent +-1 signature pairs.
    double case_study_se(int antennas, int signature_length, double snr, double phi1, double phi2,
                         CaseStudyCode code, CombinerScheme scheme);

    // Same, for an explicit signature pair.
    double case_study_se(int antennas, double snr, double phi1, double phi2, const CVec &u1, const CVec &u2,
                         CombinerScheme scheme);
}

#endif
