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
#include "nomamimo/netconfig.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

using namespace noma;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace
{
    cd direct_inner_product(double phi1, double phi2, int M)
    {
        cd sum = 0.0;
        for (int m = 0; m < M; ++m)
            sum += std::polar(1.0, pi * m * (std::sin(phi2) - std::sin(phi1)));
        return sum / static_cast<double>(M);
    }

    // midpoint rule over the uniform density on [centre - spread, centre + spread]
    cd riemann_2d_entry(double azimuth, double delta, int lag, int nodes)
    {
        cd sum = 0.0;
        const double h = 2.0 * delta / nodes;
        for (int i = 0; i < nodes; ++i)
        {
            const double x = azimuth - delta + (i + 0.5) * h;
            sum += std::polar(1.0, pi * lag * std::sin(x));
        }
        return sum / static_cast<double>(nodes);
    }
}

TEST_CASE("ULA response", "[channel]")
{
    CHECK((ula_response(0.0, 7) - CVec::Ones(7)).norm() < 1e-15);

    const CVec a = ula_response(pi / 2.0, 2);
    CHECK(std::abs(a(0) - cd(1.0, 0.0)) < 1e-15);
    CHECK(std::abs(a(1) - cd(-1.0, 0.0)) < 1e-15);

    const CVec b = ula_response(deg_to_rad(30.0), 4);
    for (int m = 0; m < 4; ++m)
        CHECK(std::abs(b(m) - std::polar(1.0, pi * m / 2.0)) < 1e-14);
}

TEST_CASE("LoS inner product against the direct sum", "[channel]")
{
    CHECK(std::abs(los_inner_product(0.3, 0.3, 64) - cd(1.0, 0.0)) < 1e-12);
    CHECK(std::abs(los_inner_product(0.0, pi / 2.0, 2)) < 1e-15);
    CHECK(std::abs(los_inner_product(deg_to_rad(30.0), deg_to_rad(-10.0), 64) -
                   direct_inner_product(deg_to_rad(30.0), deg_to_rad(-10.0), 64)) < 1e-12);

    // sin(phi1) = sin(phi2) for supplementary angles
    CHECK(std::abs(los_inner_product(deg_to_rad(30.0), deg_to_rad(150.0), 16) - cd(1.0, 0.0)) < 1e-12);

    for (int M : {1, 3, 8, 33})
        for (double p1 = -1.5; p1 < 1.5; p1 += 0.37)
            for (double p2 = -1.5; p2 < 1.5; p2 += 0.29)
            {
                const cd v = los_inner_product(p1, p2, M);
                CHECK(std::abs(v - direct_inner_product(p1, p2, M)) < 1e-12);
                CHECK(std::abs(v) <= 1.0 + 1e-12);
            }
}

TEST_CASE("2D one-ring correlation", "[channel]")
{
    const double beta = 3e-11;
    const auto c = corr_2d_one_ring(beta, deg_to_rad(30.0), deg_to_rad(2.0), 16);
    CHECK(satisfies_invariants(c));
    CHECK_THAT(c.beta, WithinRel(beta, 1e-12));
    for (int m = 0; m < 16; ++m)
        CHECK_THAT(c.R(m, m).real(), WithinRel(beta, 1e-12));

    // Toeplitz
    for (int m1 = 1; m1 < 16; ++m1)
        for (int m2 = 1; m2 < 16; ++m2)
            CHECK(std::abs(c.R(m1, m2) - c.R(m1 - 1, m2 - 1)) < 1e-12 * beta);

    // Delta -> 0 collapses to the LoS outer product
    const auto los = corr_2d_one_ring(1.0, 0.4, 0.0, 8);
    const CVec a = ula_response(0.4, 8);
    CHECK((los.R - a * a.adjoint()).norm() < 1e-12);
    CHECK_THROWS_AS(corr_2d_one_ring(1.0, 0.4, -0.1, 8), DomainError);
}

TEST_CASE("2D one-ring matches a dense Riemann oracle", "[channel]")
{
    const double az = deg_to_rad(30.0);
    const double delta = deg_to_rad(2.0);
    const auto c = corr_2d_one_ring(1.0, az, delta, 4);
    // [R]_{1,2} = E{exp(j pi (1 - 2) sin(x))}
    const cd oracle = riemann_2d_entry(az, delta, -1, 1000000);
    CHECK(std::abs(c.R(0, 1) - oracle) < 1e-9);
    CHECK(std::abs(c.R(0, 3) - riemann_2d_entry(az, delta, -3, 1000000)) < 1e-9);
}

TEST_CASE("3D one-ring matches a dense Riemann oracle", "[channel]")
{
    const int M = 16;
    const int s = 4;
    const double az = deg_to_rad(20.0);
    const double spread = deg_to_rad(2.0);
    const double el = -std::atan((bs_height_m - ue_height_m) / 100.0);
    const auto c = corr_3d_one_ring(1.0, az, el, spread, spread, M);
    CHECK(satisfies_invariants(c));

    // E{exp(j pi (dc cos(t) sin(p) + dr sin(t)))} for every row/column lag
    const int n = 600;
    const int width = 2 * s - 1;
    std::vector<cd> table(static_cast<std::size_t>(width * width), cd(0.0));
    for (int i = 0; i < n; ++i)
    {
        const double t = el - spread + (i + 0.5) * 2.0 * spread / n;
        for (int k = 0; k < n; ++k)
        {
            const double p = az - spread + (k + 0.5) * 2.0 * spread / n;
            const double h = std::cos(t) * std::sin(p);
            const double v = std::sin(t);
            for (int dr = -(s - 1); dr < s; ++dr)
                for (int dc = -(s - 1); dc < s; ++dc)
                    table[static_cast<std::size_t>((dr + s - 1) * width + dc + s - 1)] +=
                        std::polar(1.0, pi * (dc * h + dr * v));
        }
    }
    double worst = 0.0;
    for (int m1 = 0; m1 < M; ++m1)
        for (int m2 = 0; m2 < M; ++m2)
        {
            const int dr = m1 / s - m2 / s;
            const int dc = m1 % s - m2 % s;
            const cd oracle = table[static_cast<std::size_t>((dr + s - 1) * width + dc + s - 1)] /
                              static_cast<double>(n * n);
            worst = std::max(worst, std::abs(c.R(m1, m2) - oracle));
        }
    CHECK(worst < 1e-6);

    const auto point = corr_3d_one_ring(2.0, az, el, 0.0, 0.0, M);
    const CVec a = upa_response(az, el, M);
    CHECK((point.R - 2.0 * a * a.adjoint()).norm() < 1e-12);
    CHECK_THROWS_AS(corr_3d_one_ring(1.0, az, el, spread, spread, 12), ConfigError);
}

TEST_CASE("quadrature rule integrates polynomials exactly", "[channel]")
{
    const auto &rule = gauss_legendre(quadrature_order);
    REQUIRE(rule.nodes.size() == static_cast<std::size_t>(quadrature_order));
    for (int degree : {0, 2, 10, 40, 126})
    {
        double sum = 0.0;
        for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            sum += rule.weights[i] * std::pow(rule.nodes[i], degree);
        CHECK_THAT(sum, WithinAbs(2.0 / (degree + 1), 1e-13));
    }
}

TEST_CASE("channel sampling", "[channel]")
{
    Rng rng = make_stream(17);

    // identity covariance: i.i.d. unit-variance entries
    const auto I = make_correlation(CMat::Identity(4, 4));
    double power = 0.0;
    const int n = 20000;
    for (int t = 0; t < n; ++t)
        power += sample_channel(I, rng).squaredNorm();
    CHECK_THAT(power / (4.0 * n), WithinRel(1.0, 0.03));

    // rank one: every draw is parallel to the steering vector
    const auto los = corr_los(1.0, 0.7, 8);
    const CVec a = ula_response(0.7, 8);
    const ChannelSampler rank_one(los);
    for (int t = 0; t < 20; ++t)
    {
        const CVec h = rank_one.draw(rng);
        CHECK(std::abs(std::abs(a.dot(h)) - a.norm() * h.norm()) < 1e-9 * (1.0 + h.norm()));
    }

    // sample covariance converges to R
    const auto c = corr_2d_one_ring(1.0, 0.2, deg_to_rad(10.0), 8);
    const ChannelSampler sampler(c);
    CMat S = CMat::Zero(8, 8);
    const int draws = 100000;
    for (int t = 0; t < draws; ++t)
    {
        const CVec h = sampler.draw(rng);
        S += h * h.adjoint();
    }
    S /= static_cast<double>(draws);
    CHECK((S - c.R).norm() / c.R.norm() < 0.02);

    CMat bad = CMat::Identity(3, 3);
    bad(2, 2) = -1.0;
    CHECK_THROWS_AS(ChannelSampler(make_correlation(bad)), NumericalError);
}

TEST_CASE("correlation CSV round trip", "[channel]")
{
    std::vector<CorrelationMatrix> in = {corr_2d_one_ring(2.0, 0.1, 0.05, 4), corr_los(0.5, -0.3, 4)};
    std::stringstream ss;
    write_correlation_csv(ss, in);
    const auto out = read_correlation_csv(ss);
    REQUIRE(out.size() == 2);
    for (std::size_t i = 0; i < 2; ++i)
    {
        CHECK((out[i].R - in[i].R).norm() == 0.0);
        CHECK(out[i].beta == in[i].beta);
    }
}
