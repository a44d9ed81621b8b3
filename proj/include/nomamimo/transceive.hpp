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

#ifndef NOMAMIMO_TRANSCEIVE_HPP
#define NOMAMIMO_TRANSCEIVE_HPP

#include "nomamimo/signatures.hpp"
#include "nomamimo/types.hpp"

#include <functional>
#include <span>
#include <vector>

namespace noma
{
    enum class CombinerScheme
    {
        mr,
        mmse
    };

    std::string to_string(CombinerScheme scheme);

    // g = u (x) h; entry n * M + m is u_n h_m.
    CVec effective_channel(const CVec &u, const CVec &h);

    // (u u^H) (x) R
    CMat effective_covariance(const CVec &u, const CMat &R);

    // Z = sum_i p_i (u_i u_i^H) (x) C_i + sigma2 I
    CMat build_Z(std::span<const CVec> signatures, std::span<const double> powers, std::span<const CMat> error_covs,
                 double sigma2);

    // v = g_hat
    inline CVec mr_combiner(const CVec &g_hat) { return g_hat; }

    // The MN x MN matrix sum_i p_i g_hat_i g_hat_i^H + Z, factored once and
    // shared by every combiner of the BS.
    class NmmseSystem
    {
    public:
        NmmseSystem(std::span<const CVec> g_hat_all, std::span<const double> powers, const CMat &Z);

        // v_k = p_k A^{-1} g_hat_k
        CVec combiner(int k) const;
        // p_k g_hat_k^H A^{-1} g_hat_k; the N-MMSE SINR is a / (1 - a).
        double quadratic_form(int k) const;
        // ||A v - p_k g_hat_k|| / ||p_k g_hat_k||
        double residual(int k, const CVec &v) const;

        const CMat &matrix() const { return A_; }

    private:
        std::vector<CVec> g_hat_;
        std::vector<double> powers_;
        CMat A_;
        Eigen::LLT<CMat> llt_;
    };

    CVec n_mmse_combiner(std::span<const CVec> g_hat_all, std::span<const double> powers, const CMat &Z, int k);

    // Zbar = sum_{coset} p_i C_i + (sigma2 / N) I, where the coset holds every
    // UE sharing the signature (including the UE itself).
    CMat build_Z_bar(std::span<const int> coset, std::span<const double> powers, std::span<const CMat> error_covs,
                     double sigma2, int signature_length);

    // M-vector combiner vbar = p (sum_{coset} p h_hat h_hat^H + Zbar)^{-1} h_hat
    // for UE `flat`. The MN-form combiner is u (x) vbar. Requires mutually
    // orthogonal signatures.
    CVec orthogonal_mmse_combiner(const SignatureAssignment &assignment, int flat, std::span<const CVec> h_hat_all,
                                  std::span<const double> powers, std::span<const CMat> error_covs, double sigma2);

    // Same as above, one factorization per signature coset; used by the
    // Monte Carlo engine.
    class OrthogonalMmseSystem
    {
    public:
        // z_bar is the (trial-independent) Zbar of the coset.
        OrthogonalMmseSystem(std::span<const int> coset, std::span<const CVec> h_hat_all,
                             std::span<const double> powers, const CMat &z_bar);

        CVec combiner(int flat) const;
        double quadratic_form(int flat) const;

    private:
        std::size_t slot(int flat) const;

        std::vector<int> coset_;
        std::vector<CVec> h_hat_;
        std::vector<double> powers_;
        Eigen::LLT<CMat> llt_;
    };

    // w = v / sqrt(E{||v||^2})
    CVec precoder_from_combiner(const CVec &v, double mean_squared_norm);

    // E{||g_hat||^2} = tr((u u^H) (x) Phi) = ||u||^2 tr(Phi)
    double mr_mean_squared_norm(const CVec &u, const CMat &Phi);

    // Sample mean of ||v||^2 over `samples` draws.
    double empirical_mean_squared_norm(const std::function<CVec(Rng &)> &draw, int samples, Rng &rng);

    // Multicell MMSE combining without spreading:
    //   v = p_k (sum_i p_i (h_hat_i h_hat_i^H + C_i) + sigma2 I)^{-1} h_hat_k.
    CVec classical_mmse_combiner(std::span<const CVec> h_hat_all, std::span<const double> powers,
                                 std::span<const CMat> error_covs, double sigma2, int k);
}

#endif
