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

#include "nomamimo/se.hpp"
#include "nomamimo/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace noma
{
    double SEResult::sum() const { return std::accumulate(se.begin(), se.end(), 0.0); }

    double log2_1p(double gamma) { return std::log1p(gamma) / std::numbers::ln2; }

    double prelog(int tau, int tau_c, int signature_length)
    {
        return static_cast<double>(tau) / static_cast<double>(tau_c) / static_cast<double>(signature_length);
    }

    double ul_sinr(const CVec &v, std::span<const CVec> g_hat_all, std::span<const double> powers, const CMat &Z,
                   int k)
    {
        const auto self = static_cast<std::size_t>(k);
        const double signal = powers[self] * std::norm(v.dot(g_hat_all[self]));
        double interference = 0.0;
        for (std::size_t i = 0; i < g_hat_all.size(); ++i)
            if (i != self)
                interference += powers[i] * std::norm(v.dot(g_hat_all[i]));
        const double noise = v.dot(Z * v).real();
        return signal / (interference + noise);
    }

    SEResult ul_se(const NetworkConfig &config, const std::vector<std::vector<double>> &sinr_samples)
    {
        const double factor = prelog(config.tau_u, config.tau_c, config.signature_length);
        SEResult out;
        out.trials = sinr_samples.empty() ? 0 : static_cast<int>(sinr_samples.front().size());
        for (const auto &samples : sinr_samples)
        {
            if (samples.empty())
                throw DomainError("ul_se: no SINR samples");
            const double n = static_cast<double>(samples.size());
            double sum = 0.0;
            double sum_sq = 0.0;
            double sinr = 0.0;
            for (double g : samples)
            {
                const double s = factor * log2_1p(g);
                sum += s;
                sum_sq += s * s;
                sinr += g;
            }
            const double mean = sum / n;
            const double var = samples.size() > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
            out.se.push_back(mean);
            out.sinr_mean.push_back(sinr / n);
            out.std_error.push_back(std::sqrt(var / n));
        }
        return out;
    }

    HardeningAccumulator::HardeningAccumulator(int ues, int batches) : ues_(ues)
    {
        if (ues < 1 || batches < 1)
            throw DomainError("HardeningAccumulator: need at least one UE and one batch");
        batches_.resize(static_cast<std::size_t>(batches));
        for (auto &b : batches_)
        {
            b.norm2 = RVec::Zero(ues);
            b.own = CVec::Zero(ues);
            b.cross = RMat::Zero(ues, ues);
        }
    }

    void HardeningAccumulator::add(int trial, std::span<const double> norm2, std::span<const cd> own,
                                   const RMat &cross)
    {
        if (static_cast<int>(norm2.size()) != ues_ || static_cast<int>(own.size()) != ues_ || cross.rows() != ues_ ||
            cross.cols() != ues_)
            throw ConfigError("HardeningAccumulator: wrong term dimensions");
        auto &b = batches_[static_cast<std::size_t>(trial) % batches_.size()];
        for (int t = 0; t < ues_; ++t)
        {
            b.norm2(t) += norm2[static_cast<std::size_t>(t)];
            b.own(t) += own[static_cast<std::size_t>(t)];
        }
        b.cross += cross;
        ++b.trials;
        ++trials_;
    }

    std::vector<double> HardeningAccumulator::sinr(std::span<const double> rho, double noise, int batch) const
    {
        RVec norm2 = RVec::Zero(ues_);
        CVec own = CVec::Zero(ues_);
        RMat cross = RMat::Zero(ues_, ues_);
        int n = 0;
        for (std::size_t b = 0; b < batches_.size(); ++b)
        {
            if (batch >= 0 && static_cast<std::size_t>(batch) != b)
                continue;
            norm2 += batches_[b].norm2;
            own += batches_[b].own;
            cross += batches_[b].cross;
            n += batches_[b].trials;
        }
        if (n == 0)
            throw DomainError("HardeningAccumulator: no trials in the requested batch");
        norm2 /= n;
        own /= static_cast<double>(n);
        cross /= n;

        std::vector<double> out(static_cast<std::size_t>(ues_));
        for (int s = 0; s < ues_; ++s)
        {
            const double signal = rho[static_cast<std::size_t>(s)] * std::norm(own(s)) / norm2(s);
            double total = 0.0;
            for (int t = 0; t < ues_; ++t)
                if (norm2(t) > 0.0)
                    total += rho[static_cast<std::size_t>(t)] * cross(t, s) / norm2(t);
            out[static_cast<std::size_t>(s)] = signal / (total - signal + noise);
        }
        return out;
    }

    SEResult dl_se_hardening(const NetworkConfig &config, const HardeningAccumulator &acc, double noise,
                             int min_trials)
    {
        if (acc.trials() < min_trials)
        {
            std::ostringstream msg;
            msg << "dl_se_hardening: " << acc.trials() << " trials accumulated, at least " << min_trials
                << " are required; the hardening terms are sample means and need many realizations";
            throw DomainError(msg.str());
        }
        if (static_cast<int>(config.rho_dl.size()) != acc.ues())
            throw ConfigError("dl_se_hardening: DL power vector does not match the accumulator");
        const double factor = prelog(config.tau_d, config.tau_c, config.signature_length);
        SEResult out;
        out.trials = acc.trials();
        const auto gamma = acc.sinr(config.rho_dl, noise);
        for (double g : gamma)
        {
            out.sinr_mean.push_back(g);
            out.se.push_back(factor * log2_1p(std::max(g, 0.0)));
        }

        // standard error from batch means
        const int batches = std::min(acc.batches(), acc.trials());
        std::vector<std::vector<double>> per_batch;
        for (int b = 0; b < batches; ++b)
            per_batch.push_back(acc.sinr(config.rho_dl, noise, b));
        out.std_error.assign(gamma.size(), 0.0);
        if (batches > 1)
            for (std::size_t s = 0; s < gamma.size(); ++s)
            {
                double sum = 0.0;
                double sum_sq = 0.0;
                for (const auto &pb : per_batch)
                {
                    const double v = factor * log2_1p(std::max(pb[s], 0.0));
                    sum += v;
                    sum_sq += v * v;
                }
                const double mean = sum / batches;
                const double var = std::max(0.0, (sum_sq - batches * mean * mean) / (batches - 1.0));
                out.std_error[s] = std::sqrt(var / batches);
            }
        return out;
    }

    namespace
    {
        int cell_of(const NetworkConfig &config, int flat) { return flat / config.ues_per_cell; }
    }

    SEResult dl_mr_closed_form(const NetworkConfig &config, const SignatureAssignment &signatures,
                               std::span<const PilotEstimator> estimators)
    {
        const int T = config.total_ues();
        if (static_cast<int>(estimators.size()) != config.cells || signatures.total() != T)
            throw ConfigError("dl_mr_closed_form: inconsistent inputs");
        const double factor = prelog(config.tau_d, config.tau_c, config.signature_length);
        SEResult out;
        for (int s = 0; s < T; ++s)
        {
            const int js = cell_of(config, s);
            const CVec &us = signatures.of(s);
            const double rho_s = config.rho_dl[static_cast<std::size_t>(s)];
            // |E{w^H g}|^2 = ||u||^2 tr(Phi)
            const double signal = rho_s * us.squaredNorm() * estimators[static_cast<std::size_t>(js)].Phi(s).trace().real();
            double total = 0.0;
            for (int t = 0; t < T; ++t)
            {
                const double rho_t = config.rho_dl[static_cast<std::size_t>(t)];
                if (rho_t == 0.0)
                    continue;
                const auto &est = estimators[static_cast<std::size_t>(cell_of(config, t))];
                const CVec &ut = signatures.of(t);
                const double code = std::norm(ut.dot(us));
                if (code == 0.0)
                    continue;
                const double norm = ut.squaredNorm() * est.Phi(t).trace().real();
                const double noncoherent = (est.R(s) * est.Phi(t)).trace().real();
                const double coherent = std::norm(est.cross_covariance(t, s).trace());
                total += rho_t * code * (noncoherent + coherent) / norm;
            }
            const double gamma = signal / (total - signal + config.sigma2_dl);
            out.sinr_mean.push_back(gamma);
            out.se.push_back(factor * log2_1p(std::max(gamma, 0.0)));
            out.std_error.push_back(0.0);
        }
        return out;
    }

    SEResult dl_mr_orth_closed_form(const NetworkConfig &config, const SignatureAssignment &signatures,
                                    const SignatureAssignment &pilots, std::span<const PilotEstimator> estimators)
    {
        const int T = config.total_ues();
        if (!is_mutually_orthogonal(signatures.set.vectors))
            throw ContractViolation("dl_mr_orth_closed_form: spreading signatures are not mutually orthogonal");
        if (!is_identical_or_orthogonal(pilots.set.vectors))
            throw ContractViolation("dl_mr_orth_closed_form: pilots are not mutually orthogonal");
        for (const auto &est : estimators)
            if (!est.classical())
                throw ContractViolation("dl_mr_orth_closed_form: estimates must come from the classical route");
        const int N = signatures.set.length();
        const double factor = prelog(config.tau_d, config.tau_c, N);
        SEResult out;
        for (int s = 0; s < T; ++s)
        {
            const double rho_s = config.rho_dl[static_cast<std::size_t>(s)];
            const double signal = rho_s * estimators[static_cast<std::size_t>(cell_of(config, s))].Phi(s).trace().real();
            double noncoherent = 0.0;
            double coherent = 0.0;
            const auto copilot = co_signature_index(pilots, s, false);
            for (int t : co_signature_index(signatures, s, true))
            {
                const double rho_t = config.rho_dl[static_cast<std::size_t>(t)];
                const auto &est = estimators[static_cast<std::size_t>(cell_of(config, t))];
                const double tr_phi = est.Phi(t).trace().real();
                noncoherent += rho_t * (est.R(s) * est.Phi(t)).trace().real() / tr_phi;
                if (std::find(copilot.begin(), copilot.end(), t) != copilot.end())
                    coherent += rho_t * std::norm(est.cross_covariance(t, s).trace()) / tr_phi;
            }
            const double gamma = signal / (noncoherent + coherent + config.sigma2_dl / N);
            out.sinr_mean.push_back(gamma);
            out.se.push_back(factor * log2_1p(gamma));
            out.std_error.push_back(0.0);
        }
        return out;
    }

    double favorable_variance(const CMat &R1, const CMat &R2)
    {
        const double M = static_cast<double>(R1.rows());
        const double beta1 = R1.trace().real() / M;
        const double beta2 = R2.trace().real() / M;
        if (!(beta1 > 0.0) || !(beta2 > 0.0))
            throw DomainError("favorable_variance: correlation matrices must have positive trace");
        return (R1 * R2).trace().real() / (M * M * beta1 * beta2);
    }

    double case_study_sinr(int antennas, int signature_length, double snr, double phi1, double phi2,
                           double code_overlap, CombinerScheme scheme)
    {
        const double MN = static_cast<double>(antennas) * signature_length;
        const double loss = std::norm(los_inner_product(phi1, phi2, antennas)) * code_overlap;
        if (scheme == CombinerScheme::mr)
            return 1.0 / (loss + 1.0 / (MN * snr));
        return MN * snr * (1.0 - loss / (1.0 + 1.0 / (MN * snr)));
    }

    double case_study_se(int antennas, int signature_length, double snr, double phi1, double phi2,
                         CaseStudyCode code, CombinerScheme scheme)
    {
        switch (code)
        {
        case CaseStudyCode::none:
            return log2_1p(case_study_sinr(antennas, 1, snr, phi1, phi2, 1.0, scheme));
        case CaseStudyCode::orthogonal:
            return log2_1p(case_study_sinr(antennas, signature_length, snr, phi1, phi2, 0.0, scheme)) /
                   signature_length;
        case CaseStudyCode::random:
        {
            // u1^H u2 = N - 2b with b ~ Binomial(N, 1/2)
            const int N = signature_length;
            double expectation = 0.0;
            double weight = std::pow(0.5, N);
            for (int b = 0; b <= N; ++b)
            {
                const double overlap = std::pow(static_cast<double>(N - 2 * b) / N, 2);
                expectation += weight * log2_1p(case_study_sinr(antennas, N, snr, phi1, phi2, overlap, scheme));
                weight *= static_cast<double>(N - b) / (b + 1);
            }
            return expectation / N;
        }
        }
        throw ConfigError("case_study_se: unknown code");
    }

    double case_study_se(int antennas, double snr, double phi1, double phi2, const CVec &u1, const CVec &u2,
                         CombinerScheme scheme)
    {
        const int N = static_cast<int>(u1.size());
        const double overlap = std::norm(u1.dot(u2) / static_cast<double>(N));
        return log2_1p(case_study_sinr(antennas, N, snr, phi1, phi2, overlap, scheme)) / N;
    }
}
