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

#include "nomamimo/channel.hpp"
#include "nomamimo/estimation.hpp"
#include "nomamimo/signatures.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace noma;

namespace
{
    struct Problem
    {
        std::vector<CVec> pilots;
        std::vector<double> powers;
        std::vector<CMat> R;
        double sigma2 = 0.2;
    };

    CMat random_psd(int M, Rng &rng)
    {
        CMat A(M, M);
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j)
                A(i, j) = complex_normal(rng);
        return A * A.adjoint() / static_cast<double>(M) + 0.05 * CMat::Identity(M, M);
    }

    // rows m + M t of the stacked observation hold sqrt(p) phi(t) h(m)
    CMat cross_with_observation(const CVec &phi, const CMat &R, double p)
    {
        const auto M = R.rows();
        const auto tau = phi.size();
        CMat out(M, M * tau);
        for (Eigen::Index t = 0; t < tau; ++t)
            out.middleCols(t * M, M) = std::sqrt(p) * std::conj(phi(t)) * R;
        return out;
    }

    CMat observation_covariance(const Problem &p)
    {
        const auto M = p.R.front().rows();
        const auto tau = p.pilots.front().size();
        CMat Q = p.sigma2 * CMat::Identity(M * tau, M * tau);
        for (std::size_t i = 0; i < p.pilots.size(); ++i)
            for (Eigen::Index s = 0; s < tau; ++s)
                for (Eigen::Index t = 0; t < tau; ++t)
                    Q.block(s * M, t * M, M, M) += p.powers[i] * p.pilots[i](s) * std::conj(p.pilots[i](t)) * p.R[i];
        return Q;
    }

    CVec stack(const CMat &Y)
    {
        return Eigen::Map<const CVec>(Y.data(), Y.size());
    }

    Problem random_problem(int M, int tau, int ues, Rng &rng)
    {
        Problem p;
        for (int i = 0; i < ues; ++i)
        {
            p.pilots.push_back(complex_normal_vector(tau, rng));
            p.powers.push_back(0.3 + 0.2 * i);
            p.R.push_back(random_psd(M, rng));
        }
        return p;
    }
}

TEST_CASE("Q on a hand-worked example", "[estimation]")
{
    std::vector<CVec> pilots = {CVec::Ones(2), CVec(2)};
    pilots[1] << 1.0, -1.0;
    std::vector<double> powers = {1.0, 0.5};
    std::vector<CMat> R = {CMat::Identity(2, 2), CMat::Zero(2, 2)};
    R[1](0, 0) = 2.0;
    R[1](1, 1) = 3.0;
    const CMat Q = build_Q(pilots, powers, R, 0.1);
    REQUIRE(Q.rows() == 4);
    CHECK(std::abs(Q(0, 0) - cd(2.1)) < 1e-14);
    CHECK(std::abs(Q(1, 1) - cd(2.6)) < 1e-14);
    CHECK(std::abs(Q(0, 2)) < 1e-14);
    CHECK(std::abs(Q(1, 3) - cd(-0.5)) < 1e-14);
    CHECK(std::abs(Q(0, 1)) < 1e-14);
    CHECK((Q - Q.adjoint()).norm() < 1e-14);

    // scalar case: Q = p R + sigma2
    std::vector<CVec> one = {CVec::Ones(1)};
    std::vector<double> p1 = {0.7};
    std::vector<CMat> r1 = {CMat::Constant(1, 1, cd(4.0))};
    CHECK(std::abs(build_Q(one, p1, r1, 0.2)(0, 0) - cd(3.0)) < 1e-14);
}

TEST_CASE("general estimate equals the Gaussian conditional mean", "[estimation]")
{
    Rng rng = make_stream(11);
    const Problem p = random_problem(3, 2, 3, rng);
    std::vector<CVec> h;
    for (const auto &R : p.R)
        h.push_back(sample_channel(make_correlation(R), rng));
    const auto obs = observe_pilots(p.pilots, p.powers, h, p.sigma2, rng);
    const CMat Cy = observation_covariance(p);
    CHECK((build_Q(p.pilots, p.powers, p.R, p.sigma2) - Cy).norm() < 1e-12 * Cy.norm());

    const CVec y = stack(obs.Y);
    for (int t = 0; t < 3; ++t)
    {
        const CMat G = cross_with_observation(p.pilots[t], p.R[t], p.powers[t]);
        const CVec mean = G * Cy.ldlt().solve(y);
        const CMat Phi = G * Cy.ldlt().solve(G.adjoint());
        const auto e = mmse_estimate(obs, t, p.pilots, p.R, p.powers, p.sigma2);
        CHECK((e.h_hat - mean).norm() < 1e-10 * (1.0 + mean.norm()));
        CHECK((e.Phi - Phi).norm() < 1e-10 * Phi.norm());
        CHECK((e.C - (p.R[t] - Phi)).norm() < 1e-10 * p.R[t].norm());

        const PilotEstimator est(p.pilots, p.powers, p.R, p.sigma2);
        CHECK_FALSE(est.classical());
        CHECK((est.estimate(obs, t) - mean).norm() < 1e-10 * (1.0 + mean.norm()));
        for (int b = 0; b < 3; ++b)
        {
            const CMat Gb = cross_with_observation(p.pilots[b], p.R[b], p.powers[b]);
            const CMat cross = G * Cy.ldlt().solve(Gb.adjoint());
            CHECK((est.cross_covariance(t, b) - cross).norm() < 1e-10 * (1.0 + cross.norm()));
        }
    }
}

TEST_CASE("classical and general estimators agree on orthogonal pilots", "[estimation]")
{
    Rng rng = make_stream(12);
    const auto set = orthogonal_set(4);
    Problem p;
    // two UEs share each of the first two pilots, one UE on the third
    for (int idx : {0, 0, 1, 1, 2})
    {
        p.pilots.push_back(set.vectors[idx]);
        p.R.push_back(random_psd(4, rng) * 1e-3);
        p.powers.push_back(0.1 * (1 + idx));
    }
    p.sigma2 = 1e-4;
    std::vector<CVec> h;
    for (const auto &R : p.R)
        h.push_back(sample_channel(make_correlation(R), rng));
    const auto obs = observe_pilots(p.pilots, p.powers, h, p.sigma2, rng);

    const PilotEstimator fast(p.pilots, p.powers, p.R, p.sigma2);
    const PilotEstimator slow(p.pilots, p.powers, p.R, p.sigma2, EstimatorRoute::general);
    CHECK(fast.classical());
    CHECK_FALSE(slow.classical());
    for (int t = 0; t < 5; ++t)
    {
        const auto c = classical_estimate(obs, t, p.pilots, p.R, p.powers, p.sigma2);
        const auto g = mmse_estimate(obs, t, p.pilots, p.R, p.powers, p.sigma2);
        CHECK((c.h_hat - g.h_hat).norm() <= 1e-10 * g.h_hat.norm());
        CHECK((c.Phi - g.Phi).norm() <= 1e-10 * g.Phi.norm());
        CHECK((fast.estimate(obs, t) - slow.estimate(obs, t)).norm() <= 1e-10 * g.h_hat.norm());
        CHECK((fast.C(t) - slow.C(t)).norm() <= 1e-10 * p.R[t].norm());
    }
}

TEST_CASE("UEs sharing a pilot and a covariance get identical estimates", "[estimation]")
{
    Rng rng = make_stream(13);
    const auto set = orthogonal_set(2);
    const CMat R = random_psd(4, rng);
    Problem p;
    p.pilots = {set.vectors[0], set.vectors[0], set.vectors[1]};
    p.powers = {0.5, 0.5, 0.5};
    p.R = {R, R, random_psd(4, rng)};
    std::vector<CVec> h;
    for (const auto &r : p.R)
        h.push_back(sample_channel(make_correlation(r), rng));
    const auto obs = observe_pilots(p.pilots, p.powers, h, p.sigma2, rng);
    const PilotEstimator est(p.pilots, p.powers, p.R, p.sigma2);
    const auto all = est.estimate_all(obs);
    CHECK((all[0] - all[1]).norm() < 1e-12 * all[0].norm());
    CHECK((all[0] - all[2]).norm() > 1e-3 * all[0].norm());
}

TEST_CASE("error covariance and the orthogonality principle", "[estimation]")
{
    Rng rng = make_stream(14);
    const Problem p = random_problem(2, 2, 2, rng);
    const PilotEstimator est(p.pilots, p.powers, p.R, p.sigma2);
    for (int t = 0; t < 2; ++t)
    {
        Eigen::SelfAdjointEigenSolver<CMat> eig(est.C(t));
        CHECK(eig.eigenvalues().minCoeff() > -1e-12);
        CHECK((est.C(t) - est.C(t).adjoint()).norm() < 1e-12);
    }

    // E{(h - h_hat) y^H} = 0 and E{h_hat h_hat^H} = Phi
    const int n = 40000;
    CMat corr = CMat::Zero(2, 4);
    CMat gram = CMat::Zero(2, 2);
    for (int i = 0; i < n; ++i)
    {
        std::vector<CVec> h;
        for (const auto &R : p.R)
            h.push_back(sample_channel(make_correlation(R), rng));
        const auto obs = observe_pilots(p.pilots, p.powers, h, p.sigma2, rng);
        const CVec hh = est.estimate(obs, 0);
        corr += (h[0] - hh) * stack(obs.Y).adjoint();
        gram += hh * hh.adjoint();
    }
    corr /= static_cast<double>(n);
    gram /= static_cast<double>(n);
    CHECK(corr.norm() < 0.03 * std::sqrt(p.R[0].norm() * observation_covariance(p).norm()));
    CHECK((gram - est.Phi(0)).norm() < 0.03 * est.Phi(0).norm());

    CMat R = CMat::Identity(2, 2);
    CMat Phi = 2.0 * CMat::Identity(2, 2);
    CHECK_THROWS_AS(error_covariance(R, Phi), NumericalError);
}
