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

#include "nomamimo/estimation.hpp"
#include "nomamimo/signatures.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <sstream>

namespace noma
{
    namespace
    {
        void check_inputs(std::span<const CVec> pilots, std::span<const double> powers,
                          std::span<const CMat> correlations)
        {
            if (pilots.empty())
                throw ConfigError("estimation: no UEs");
            if (pilots.size() != powers.size() || pilots.size() != correlations.size())
                throw ConfigError("estimation: pilots, powers and correlations differ in length");
            const auto tau = pilots.front().size();
            const auto M = correlations.front().rows();
            for (const auto &phi : pilots)
                if (phi.size() != tau)
                    throw ConfigError("estimation: pilots differ in length");
            for (const auto &R : correlations)
                if (R.rows() != M || R.cols() != M)
                    throw ConfigError("estimation: correlation matrices differ in size");
        }

        // phi (x) R, an M tau_p x M block column
        CMat pilot_block(const CVec &phi, const CMat &R)
        {
            return Eigen::kroneckerProduct(CMat(phi), R).eval();
        }

        CVec vec(const CMat &Y) { return Eigen::Map<const CVec>(Y.data(), Y.size()); }

        bool same_pilot(const CVec &a, const CVec &b) { return (a - b).cwiseAbs().maxCoeff() <= 1e-12; }

        CMat hermitian_part(const CMat &A) { return (A + A.adjoint()) / 2.0; }

        double cholesky_condition(const Eigen::LLT<CMat> &llt)
        {
            const RVec d = llt.matrixLLT().diagonal().real();
            const double ratio = d.maxCoeff() / d.minCoeff();
            return ratio * ratio;
        }

        Eigen::LLT<CMat> factor(const CMat &Q, double &condition)
        {
            Eigen::LLT<CMat> llt(Q);
            if (llt.info() != Eigen::Success)
                throw NumericalError("estimation: Q is not positive definite");
            condition = cholesky_condition(llt);
            if (condition > 1e12)
            {
                std::ostringstream msg;
                msg << "estimation: Q is ill-conditioned (condition estimate " << condition << ", size " << Q.rows()
                    << "); proceeding with the Cholesky solve";
                warn(msg.str());
            }
            return llt;
        }
    }

    CMat build_Q(std::span<const CVec> pilots, std::span<const double> powers, std::span<const CMat> correlations,
                 double sigma2)
    {
        check_inputs(pilots, powers, correlations);
        const auto tau = pilots.front().size();
        const auto M = correlations.front().rows();
        CMat Q = sigma2 * CMat::Identity(M * tau, M * tau);
        for (std::size_t i = 0; i < pilots.size(); ++i)
        {
            if (powers[i] == 0.0)
                continue;
            const CMat outer = pilots[i] * pilots[i].adjoint();
            Q += powers[i] * Eigen::kroneckerProduct(outer, correlations[i]).eval();
        }
        return Q;
    }

    PilotObservation observe_pilots(std::span<const CVec> pilots, std::span<const double> powers,
                                    std::span<const CVec> channels, double sigma2, Rng &rng)
    {
        if (pilots.size() != powers.size() || pilots.size() != channels.size() || pilots.empty())
            throw ConfigError("observe_pilots: inconsistent inputs");
        const auto M = channels.front().size();
        const auto tau = pilots.front().size();
        PilotObservation obs;
        obs.Y = CMat::Zero(M, tau);
        for (std::size_t i = 0; i < pilots.size(); ++i)
            obs.Y.noalias() += std::sqrt(powers[i]) * channels[i] * pilots[i].transpose();
        const double s = std::sqrt(sigma2);
        for (Eigen::Index t = 0; t < tau; ++t)
            for (Eigen::Index m = 0; m < M; ++m)
                obs.Y(m, t) += s * complex_normal(rng);
        return obs;
    }

    ChannelEstimate mmse_estimate(const PilotObservation &obs, int target, std::span<const CVec> pilots,
                                  std::span<const CMat> correlations, std::span<const double> powers, double sigma2)
    {
        check_inputs(pilots, powers, correlations);
        const auto t = static_cast<std::size_t>(target);
        double condition = 1.0;
        const auto llt = factor(build_Q(pilots, powers, correlations, sigma2), condition);
        const CMat B = pilot_block(pilots[t], correlations[t]);
        const CMat X = llt.solve(B);
        const double sp = std::sqrt(powers[t]);
        ChannelEstimate e;
        e.h_hat = sp * X.adjoint() * vec(obs.Y);
        e.Phi = hermitian_part(powers[t] * B.adjoint() * X);
        e.C = error_covariance(correlations[t], e.Phi);
        return e;
    }

    ChannelEstimate classical_estimate(const PilotObservation &obs, int target, std::span<const CVec> pilots,
                                       std::span<const CMat> correlations, std::span<const double> powers,
                                       double sigma2)
    {
        check_inputs(pilots, powers, correlations);
        if (!is_identical_or_orthogonal(pilots))
            throw ContractViolation("classical_estimate: pilots must be pairwise identical or orthogonal");
        const auto t = static_cast<std::size_t>(target);
        const CVec &phi = pilots[t];
        const double tau = phi.squaredNorm();
        const auto M = correlations.front().rows();
        CMat Qbar = sigma2 * CMat::Identity(M, M);
        for (std::size_t i = 0; i < pilots.size(); ++i)
            if (same_pilot(pilots[i], phi))
                Qbar += powers[i] * tau * correlations[i];
        double condition = 1.0;
        const auto llt = factor(Qbar, condition);
        const CMat X = llt.solve(correlations[t]);
        const double sp = std::sqrt(powers[t]);
        ChannelEstimate e;
        e.h_hat = sp * X.adjoint() * (obs.Y * phi.conjugate());
        e.Phi = hermitian_part(powers[t] * tau * correlations[t] * X);
        e.C = error_covariance(correlations[t], e.Phi);
        return e;
    }

    CMat error_covariance(const CMat &R, const CMat &Phi)
    {
        if (R.rows() != Phi.rows() || R.cols() != Phi.cols())
            throw ConfigError("error_covariance: dimension mismatch");
        CMat C = hermitian_part(R - Phi);
        const double scale = R.trace().real() / static_cast<double>(R.rows());
        const Eigen::SelfAdjointEigenSolver<CMat> eig(C, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < -1e-9 * scale)
        {
            std::ostringstream msg;
            msg << "error_covariance: R - Phi is indefinite (smallest eigenvalue " << eig.eigenvalues().minCoeff()
                << ")";
            throw NumericalError(msg.str());
        }
        return C;
    }

    PilotEstimator::PilotEstimator(std::vector<CVec> pilots, std::vector<double> powers,
                                   std::vector<CMat> correlations, double sigma2, EstimatorRoute route)
        : pilots_(std::move(pilots)), powers_(std::move(powers)), correlations_(std::move(correlations)),
          sigma2_(sigma2)
    {
        check_inputs(pilots_, powers_, correlations_);
        const bool structured = is_identical_or_orthogonal(pilots_);
        if (route == EstimatorRoute::classical && !structured)
            throw ContractViolation("PilotEstimator: classical route needs identical-or-orthogonal pilots");
        classical_ = route == EstimatorRoute::classical || (route == EstimatorRoute::automatic && structured);

        const std::size_t n = pilots_.size();
        const auto M = correlations_.front().rows();
        gain_.resize(n);
        phi_.resize(n);
        error_.resize(n);

        if (classical_)
        {
            std::vector<bool> done(n, false);
            for (std::size_t a = 0; a < n; ++a)
            {
                if (done[a])
                    continue;
                std::vector<std::size_t> members;
                for (std::size_t b = a; b < n; ++b)
                    if (!done[b] && same_pilot(pilots_[a], pilots_[b]))
                        members.push_back(b);
                const double tau = pilots_[a].squaredNorm();
                CMat Qbar = sigma2_ * CMat::Identity(M, M);
                for (auto b : members)
                    Qbar += powers_[b] * tau * correlations_[b];
                double condition = 1.0;
                const auto llt = factor(Qbar, condition);
                condition_ = std::max(condition_, condition);
                for (auto b : members)
                {
                    const CMat X = llt.solve(correlations_[b]);
                    gain_[b] = std::sqrt(powers_[b]) * X.adjoint();
                    phi_[b] = hermitian_part(powers_[b] * tau * correlations_[b] * X);
                    error_[b] = error_covariance(correlations_[b], phi_[b]);
                    done[b] = true;
                }
            }
        }
        else
        {
            const auto llt = factor(build_Q(pilots_, powers_, correlations_, sigma2_), condition_);
            for (std::size_t b = 0; b < n; ++b)
            {
                const CMat B = pilot_block(pilots_[b], correlations_[b]);
                const CMat X = llt.solve(B);
                gain_[b] = std::sqrt(powers_[b]) * X.adjoint();
                phi_[b] = hermitian_part(powers_[b] * B.adjoint() * X);
                error_[b] = error_covariance(correlations_[b], phi_[b]);
            }
        }
    }

    CVec PilotEstimator::estimate(const PilotObservation &obs, int ue) const
    {
        const auto u = static_cast<std::size_t>(ue);
        if (classical_)
            return gain_[u] * (obs.Y * pilots_[u].conjugate());
        return gain_[u] * vec(obs.Y);
    }

    std::vector<CVec> PilotEstimator::estimate_all(const PilotObservation &obs) const
    {
        std::vector<CVec> out(pilots_.size());
        if (classical_)
        {
            // Y_p conj(phi) once per distinct pilot
            std::vector<CVec> despread;
            std::vector<std::size_t> owner;
            for (std::size_t u = 0; u < pilots_.size(); ++u)
            {
                std::size_t slot = despread.size();
                for (std::size_t s = 0; s < owner.size(); ++s)
                    if (same_pilot(pilots_[owner[s]], pilots_[u]))
                    {
                        slot = s;
                        break;
                    }
                if (slot == despread.size())
                {
                    owner.push_back(u);
                    despread.push_back(obs.Y * pilots_[u].conjugate());
                }
                out[u] = gain_[u] * despread[slot];
            }
            return out;
        }
        const CVec y = vec(obs.Y);
        for (std::size_t u = 0; u < pilots_.size(); ++u)
            out[u] = gain_[u] * y;
        return out;
    }

    CMat PilotEstimator::cross_covariance(int a, int b) const
    {
        const auto ia = static_cast<std::size_t>(a);
        const auto ib = static_cast<std::size_t>(b);
        const double sp = std::sqrt(powers_[ib]);
        if (classical_)
            return gain_[ia] * (sp * pilots_[ia].dot(pilots_[ib])) * correlations_[ib];
        return sp * gain_[ia] * pilot_block(pilots_[ib], correlations_[ib]);
    }
}
