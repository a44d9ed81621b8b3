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
#include "nomamimo/grouping.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

using namespace noma;

namespace
{
    Eigenspace unit_columns(int M, std::initializer_list<int> columns)
    {
        Eigenspace e;
        e.U = CMat::Zero(M, static_cast<Eigen::Index>(columns.size()));
        int c = 0;
        for (int m : columns)
            e.U(m, c++) = 1.0;
        return e;
    }

    Eigenspace random_space(int M, int p, Rng &rng)
    {
        CMat A(M, p);
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < p; ++j)
                A(i, j) = complex_normal(rng);
        Eigen::HouseholderQR<CMat> qr(A);
        return Eigenspace{qr.householderQ() * CMat::Identity(M, p)};
    }

    double brute_force_assignment(const RMat &cost)
    {
        std::vector<int> cols(static_cast<std::size_t>(cost.cols()));
        std::iota(cols.begin(), cols.end(), 0);
        double best = std::numeric_limits<double>::infinity();
        do
        {
            double sum = 0.0;
            for (Eigen::Index r = 0; r < cost.rows(); ++r)
                sum += cost(r, cols[static_cast<std::size_t>(r)]);
            best = std::min(best, sum);
        } while (std::next_permutation(cols.begin(), cols.end()));
        return best;
    }
}

TEST_CASE("chordal distance", "[grouping]")
{
    const auto a = unit_columns(6, {0, 1});
    const auto b = unit_columns(6, {2, 3});
    CHECK(chordal_distance(a, a) == 0.0);
    CHECK(chordal_distance(a, b) == 4.0);

    const auto c = unit_columns(8, {0, 1, 2});
    CHECK(chordal_distance(c, unit_columns(8, {5, 6, 7})) == 6.0);

    // rotating the basis leaves the subspace unchanged
    Eigenspace rotated = a;
    rotated.U.col(0) = (a.U.col(0) + a.U.col(1)) / std::sqrt(2.0);
    rotated.U.col(1) = cd(0.0, 1.0) * (a.U.col(0) - a.U.col(1)) / std::sqrt(2.0);
    CHECK(std::abs(chordal_distance(a, rotated)) < 1e-15);

    Rng rng = make_stream(50);
    for (int t = 0; t < 20; ++t)
    {
        const auto x = random_space(7, 3, rng);
        const auto y = random_space(7, 3, rng);
        const double oracle = (x.U * x.U.adjoint() - y.U * y.U.adjoint()).squaredNorm();
        CHECK_THAT(chordal_distance(x, y), Catch::Matchers::WithinAbs(oracle, 1e-12));
    }
}

TEST_CASE("dominant eigenspace", "[grouping]")
{
    RMat d = RMat::Zero(3, 3);
    d.diagonal() << 3.0, 1.0, 2.0;
    const auto e = p_dominant_eigenspace(d.cast<cd>(), 2);
    REQUIRE(e.dimension() == 2);
    CHECK((e.U.col(0) - unit_columns(3, {0}).U.col(0)).norm() < 1e-14);
    CHECK((e.U.col(1) - unit_columns(3, {2}).U.col(0)).norm() < 1e-14);

    Rng rng = make_stream(51);
    CMat A(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            A(i, j) = complex_normal(rng);
    const CMat H = A * A.adjoint();
    const auto f = p_dominant_eigenspace(H, 3);
    Eigen::SelfAdjointEigenSolver<CMat> eig(H);
    CHECK((f.U.adjoint() * f.U - CMat::Identity(3, 3)).norm() < 1e-12);
    for (int c = 0; c < 3; ++c)
    {
        const double lambda = eig.eigenvalues()(4 - c);
        CHECK((H * f.U.col(c) - lambda * f.U.col(c)).norm() < 1e-10 * lambda);
        Eigen::Index idx;
        f.U.col(c).cwiseAbs().maxCoeff(&idx);
        CHECK(std::abs(f.U(idx, c).imag()) < 1e-14);
        CHECK(f.U(idx, c).real() > 0.0);
    }
    CHECK_THROWS(p_dominant_eigenspace(H, 6));
}

TEST_CASE("k-means recovers orthogonal clusters", "[grouping]")
{
    // two clusters living in disjoint coordinate subspaces
    std::vector<Eigenspace> ues;
    for (int k = 0; k < 10; ++k)
        ues.push_back(k % 2 == 0 ? unit_columns(8, {0, 1}) : unit_columns(8, {4, 5}));
    Rng rng = make_stream(52);
    const auto g = kmeans_group(ues, 2, rng);
    CHECK(g.total_cost < 1e-12);
    for (int k = 0; k < 10; ++k)
        CHECK(g.group_of[k] == g.group_of[k % 2]);
    CHECK(g.group_of[0] != g.group_of[1]);
}

TEST_CASE("k-means separates well-spaced angular clusters", "[grouping]")
{
    std::vector<CMat> R;
    std::vector<int> truth;
    for (int k = 0; k < 12; ++k)
    {
        const int c = k % 3;
        const double az = deg_to_rad(-40.0 + 40.0 * c + 0.5 * (k / 3));
        R.push_back(corr_2d_one_ring(1.0, az, deg_to_rad(5.0), 32).R);
        truth.push_back(c);
    }
    Rng rng = make_stream(53);
    const auto g = kmeans_group(R, 3, 2, rng);
    for (int a = 0; a < 12; ++a)
        for (int b = 0; b < 12; ++b)
            CHECK((g.group_of[a] == g.group_of[b]) == (truth[a] == truth[b]));
    for (std::size_t k = 0; k < g.distance.size(); ++k)
        CHECK(std::abs(g.distance[k] - chordal_distance(p_dominant_eigenspace(R[k], 2), g.centers[g.group_of[k]])) <
              1e-9);
}

TEST_CASE("Hungarian solver matches exhaustive search", "[grouping]")
{
    Rng rng = make_stream(54);
    std::uniform_int_distribution<int> size(1, 8);
    std::uniform_real_distribution<double> value(0.0, 10.0);
    for (int t = 0; t < 200; ++t)
    {
        const int cols = size(rng);
        const int rows = std::uniform_int_distribution<int>(1, cols)(rng);
        RMat cost(rows, cols);
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < cols; ++c)
                cost(r, c) = t % 4 == 0 ? std::floor(value(rng) / 3.0) : value(rng);
        const auto a = hungarian_solve(cost);
        REQUIRE(static_cast<int>(a.size()) == rows);
        double sum = 0.0;
        std::vector<bool> used(static_cast<std::size_t>(cols), false);
        for (int r = 0; r < rows; ++r)
        {
            REQUIRE(a[r] >= 0);
            REQUIRE(a[r] < cols);
            CHECK_FALSE(used[a[r]]);
            used[a[r]] = true;
            sum += cost(r, a[r]);
        }
        CHECK_THAT(sum, Catch::Matchers::WithinAbs(brute_force_assignment(cost), 1e-9));
    }
}

TEST_CASE("balanced grouping matches a brute-force partition", "[grouping]")
{
    Rng rng = make_stream(55);
    for (int t = 0; t < 20; ++t)
    {
        std::vector<Eigenspace> ues;
        for (int k = 0; k < 6; ++k)
            ues.push_back(random_space(6, 2, rng));
        std::vector<Eigenspace> centers;
        for (int g = 0; g < 3; ++g)
            centers.push_back(random_space(6, 2, rng));
        const auto b = balance_against_centers(ues, centers);

        double best = std::numeric_limits<double>::infinity();
        for (int code = 0; code < 729; ++code)
        {
            int counts[3] = {0, 0, 0};
            double sum = 0.0;
            for (int k = 0, c = code; k < 6; ++k, c /= 3)
            {
                ++counts[c % 3];
                sum += chordal_distance(ues[k], centers[c % 3]);
            }
            if (counts[0] == 2 && counts[1] == 2 && counts[2] == 2)
                best = std::min(best, sum);
        }
        CHECK_THAT(b.total_cost, Catch::Matchers::WithinAbs(best, 1e-9));
        for (const auto &group : b.groups)
            CHECK(group.size() == 2);
    }

    std::vector<CMat> R;
    for (int k = 0; k < 12; ++k)
        R.push_back(corr_2d_one_ring(1.0, deg_to_rad(-50.0 + 9.0 * k), deg_to_rad(5.0), 16).R);
    const auto g = balanced_group(R, 4, 3, rng);
    REQUIRE(g.groups.size() == 4);
    for (const auto &group : g.groups)
        CHECK(group.size() == 3);
}

TEST_CASE("groups of a sector are contiguous in azimuth", "[grouping]")
{
    // UEs on an arc at equal distance, evenly spread over 120 degrees
    const int K = 60;
    std::vector<CMat> R;
    std::vector<double> az;
    for (int k = 0; k < K; ++k)
    {
        az.push_back(deg_to_rad(-60.0 + 120.0 * (k + 0.5) / K));
        R.push_back(corr_2d_one_ring(1.0, az.back(), deg_to_rad(5.0), 64).R);
    }
    Rng rng = make_stream(56);
    const auto g = kmeans_group(R, 4, 6, rng);
    // sorted by azimuth, the group label changes exactly G - 1 times
    int changes = 0;
    for (int k = 1; k < K; ++k)
        changes += g.group_of[k] != g.group_of[k - 1];
    CHECK(changes == 3);

    std::stringstream ss;
    write_groups_csv(ss, g);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "ue_id,group_id,distance_to_center");
    int lines = 0;
    for (std::string line; std::getline(ss, line);)
        ++lines;
    CHECK(lines == K);
}
