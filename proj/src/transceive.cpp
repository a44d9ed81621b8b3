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

#include "nomamimo/transceive.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

namespace noma
{
    std::string to_string(CombinerScheme scheme) { return scheme == CombinerScheme::mr ? "MR" : "MMSE"; }

    CVec effective_channel(const CVec &u, const CVec &h) { return Eigen::kroneckerProduct(u, h).eval(); }

    CMat effective_covariance(const CVec &u, const CMat &R)
    {
        const CMat outer = u * u.adjoint();
        return Eigen::kroneckerProduct(outer, R).eval();
    }

    CMat build_Z(std::span<const CVec> signatures, std::span<const double> powers, std::span<const CMat> error_covs,
                 double sigma2)
    {
        if (signatures.empty() || signatures.size() != powers.size() || signatures.size() != error_covs.size())
            throw ConfigError("build_Z: inconsistent inputs");
        const auto N = signatures.front().size();
        const auto M = error_covs.front().rows();
        CMat Z = sigma2 * CMat::Identity(M * N, M * N);
        for (std::size_t i = 0; i < signatures.size(); ++i)
            if (powers[i] != 0.0)
                Z += powers[i] * effective_covariance(signatures[i], error_covs[i]);
        return Z;
    }

    NmmseSystem::NmmseSystem(std::span<const CVec> g_hat_all, std::span<const double> powers, const CMat &Z)
        : g_hat_(g_hat_all.begin(), g_hat_all.end()), powers_(powers.begin(), powers.end()), A_(Z)
    {
        if (g_hat_.size() != powers_.size())
            throw ConfigError("NmmseSystem: channel and power counts differ");
        CMat G(A_.rows(), static_cast<Eigen::Index>(g_hat_.size()));
        for (std::size_t i = 0; i < g_hat_.size(); ++i)
        {
            if (g_hat_[i].size() != A_.rows())
                throw ConfigError("NmmseSystem: channel length does not match Z");
            G.col(static_cast<Eigen::Index>(i)) = std::sqrt(powers_[i]) * g_hat_[i];
        }
        A_.noalias() += G * G.adjoint();
        llt_.compute(A_);
        if (llt_.info() != Eigen::Success)
            throw NumericalError("NmmseSystem: system matrix is not positive definite");
    }

    CVec NmmseSystem::combiner(int k) const
    {
        const auto i = static_cast<std::size_t>(k);
        return powers_[i] * llt_.solve(g_hat_[i]);
    }

    double NmmseSystem::quadratic_form(int k) const
    {
        const auto i = static_cast<std::size_t>(k);
        return powers_[i] * g_hat_[i].dot(llt_.solve(g_hat_[i])).real();
    }

    double NmmseSystem::residual(int k, const CVec &v) const
    {
        const auto i = static_cast<std::size_t>(k);
        const CVec rhs = powers_[i] * g_hat_[i];
        return (A_ * v - rhs).norm() / rhs.norm();
    }

    CVec n_mmse_combiner(std::span<const CVec> g_hat_all, std::span<const double> powers, const CMat &Z, int k)
    {
        return NmmseSystem(g_hat_all, powers, Z).combiner(k);
    }

    CMat build_Z_bar(std::span<const int> coset, std::span<const double> powers, std::span<const CMat> error_covs,
                     double sigma2, int signature_length)
    {
        const auto M = error_covs.front().rows();
        CMat Z = (sigma2 / signature_length) * CMat::Identity(M, M);
        for (int f : coset)
            Z += powers[static_cast<std::size_t>(f)] * error_covs[static_cast<std::size_t>(f)];
        return Z;
    }

    CVec orthogonal_mmse_combiner(const SignatureAssignment &assignment, int flat, std::span<const CVec> h_hat_all,
                                  std::span<const double> powers, std::span<const CMat> error_covs, double sigma2)
    {
        if (!is_mutually_orthogonal(assignment.set.vectors))
            throw ContractViolation("orthogonal_mmse_combiner: signatures are not mutually orthogonal");
        const auto coset = co_signature_index(assignment, flat, true);
        const CMat z_bar = build_Z_bar(coset, powers, error_covs, sigma2, assignment.set.length());
        return OrthogonalMmseSystem(coset, h_hat_all, powers, z_bar).combiner(flat);
    }

    OrthogonalMmseSystem::OrthogonalMmseSystem(std::span<const int> coset, std::span<const CVec> h_hat_all,
                                               std::span<const double> powers, const CMat &z_bar)
        : coset_(coset.begin(), coset.end())
    {
        CMat G(z_bar.rows(), static_cast<Eigen::Index>(coset.size()));
        for (std::size_t c = 0; c < coset.size(); ++c)
        {
            const auto i = static_cast<std::size_t>(coset[c]);
            h_hat_.push_back(h_hat_all[i]);
            powers_.push_back(powers[i]);
            G.col(static_cast<Eigen::Index>(c)) = std::sqrt(powers[i]) * h_hat_all[i];
        }
        CMat A = z_bar;
        A.noalias() += G * G.adjoint();
        llt_.compute(A);
        if (llt_.info() != Eigen::Success)
            throw NumericalError("OrthogonalMmseSystem: system matrix is not positive definite");
    }

    std::size_t OrthogonalMmseSystem::slot(int flat) const
    {
        for (std::size_t c = 0; c < coset_.size(); ++c)
            if (coset_[c] == flat)
                return c;
        throw ContractViolation("OrthogonalMmseSystem: UE is not in this coset");
    }

    CVec OrthogonalMmseSystem::combiner(int flat) const
    {
        const auto c = slot(flat);
        return powers_[c] * llt_.solve(h_hat_[c]);
    }

    double OrthogonalMmseSystem::quadratic_form(int flat) const
    {
        const auto c = slot(flat);
        return powers_[c] * h_hat_[c].dot(llt_.solve(h_hat_[c])).real();
    }

    CVec precoder_from_combiner(const CVec &v, double mean_squared_norm)
    {
        if (!(mean_squared_norm > 0.0) || !std::isfinite(mean_squared_norm))
            throw DomainError("precoder_from_combiner: E{||v||^2} must be positive and finite");
        return v / std::sqrt(mean_squared_norm);
    }

    double mr_mean_squared_norm(const CVec &u, const CMat &Phi) { return u.squaredNorm() * Phi.trace().real(); }

    double empirical_mean_squared_norm(const std::function<CVec(Rng &)> &draw, int samples, Rng &rng)
    {
        if (samples < 1)
            throw DomainError("empirical_mean_squared_norm: need at least one sample");
        double sum = 0.0;
        for (int s = 0; s < samples; ++s)
            sum += draw(rng).squaredNorm();
        return sum / samples;
    }

    CVec classical_mmse_combiner(std::span<const CVec> h_hat_all, std::span<const double> powers,
                                 std::span<const CMat> error_covs, double sigma2, int k)
    {
        const auto M = h_hat_all.front().size();
        CMat A = sigma2 * CMat::Identity(M, M);
        for (std::size_t i = 0; i < h_hat_all.size(); ++i)
            A += powers[i] * (h_hat_all[i] * h_hat_all[i].adjoint() + error_covs[i]);
        const auto i = static_cast<std::size_t>(k);
        return powers[i] * A.ldlt().solve(h_hat_all[i]);
    }
}
