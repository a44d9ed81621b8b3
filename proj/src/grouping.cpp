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

#include "nomamimo/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace noma
{
    Eigenspace p_dominant_eigenspace(const CMat &A, int p)
    {
        const auto M = A.rows();
        if (A.cols() != M)
            throw ConfigError("p_dominant_eigenspace: matrix is not square");
        if (p < 1 || p > M)
            throw DomainError("p_dominant_eigenspace: p must lie in [1, M]");
        const Eigen::SelfAdjointEigenSolver<CMat> eig(A);
        if (eig.info() != Eigen::Success)
            throw NumericalError("p_dominant_eigenspace: eigendecomposition failed");
        Eigenspace e;
        e.U.resize(M, p);
        for (int c = 0; c < p; ++c)
        {
            CVec v = eig.eigenvectors().col(M - 1 - c);
            Eigen::Index peak = 0;
            v.cwiseAbs().maxCoeff(&peak);
            v *= std::conj(v(peak)) / std::abs(v(peak));
            e.U.col(c) = v;
        }
        return e;
    }

    double chordal_distance(const Eigenspace &A, const Eigenspace &B)
    {
        if (A.U.rows() != B.U.rows() || A.U.cols() != B.U.cols())
            throw ConfigError("chordal_distance: subspaces differ in shape");
        const double p = static_cast<double>(A.U.cols());
        const double d = 2.0 * p - 2.0 * (A.U.adjoint() * B.U).squaredNorm();
        return std::clamp(d, 0.0, 2.0 * p);
    }

    namespace
    {
        RMat distance_matrix(std::span<const Eigenspace> ues, std::span<const Eigenspace> centers)
        {
            RMat D(static_cast<Eigen::Index>(centers.size()), static_cast<Eigen::Index>(ues.size()));
            for (std::size_t g = 0; g < centers.size(); ++g)
                for (std::size_t k = 0; k < ues.size(); ++k)
                    D(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(k)) = chordal_distance(centers[g], ues[k]);
            return D;
        }

        Eigenspace group_mean(std::span<const Eigenspace> ues, const std::vector<int> &members)
        {
            const auto M = ues.front().U.rows();
            CMat S = CMat::Zero(M, M);
            for (int k : members)
            {
                const CMat &U = ues[static_cast<std::size_t>(k)].U;
                S.noalias() += U * U.adjoint();
            }
            return p_dominant_eigenspace(S, ues.front().dimension());
        }

        void fill_groups(GroupAssignment &a, int groups)
        {
            a.groups.assign(static_cast<std::size_t>(groups), {});
            a.total_cost = 0.0;
            for (std::size_t k = 0; k < a.group_of.size(); ++k)
            {
                a.groups[static_cast<std::size_t>(a.group_of[k])].push_back(static_cast<int>(k));
                a.total_cost += a.distance[k];
            }
        }

        std::vector<Eigenspace> subspaces(std::span<const CMat> correlations, int p)
        {
            std::vector<Eigenspace> out;
            out.reserve(correlations.size());
            for (const auto &R : correlations)
                out.push_back(p_dominant_eigenspace(R, p));
            return out;
        }
    }

    GroupAssignment assign_to_centers(std::span<const Eigenspace> ues, std::span<const Eigenspace> centers)
    {
        if (centers.empty())
            throw ConfigError("assign_to_centers: no centers");
        GroupAssignment a;
        a.centers.assign(centers.begin(), centers.end());
        const RMat D = distance_matrix(ues, centers);
        a.group_of.resize(ues.size());
        a.distance.resize(ues.size());
        for (std::size_t k = 0; k < ues.size(); ++k)
        {
            Eigen::Index best = 0;
            a.distance[k] = D.col(static_cast<Eigen::Index>(k)).minCoeff(&best);
            a.group_of[k] = static_cast<int>(best);
        }
        fill_groups(a, static_cast<int>(centers.size()));
        return a;
    }

    GroupAssignment kmeans_group(std::span<const Eigenspace> ues, int groups, Rng &rng, int max_iter)
    {
        const int K = static_cast<int>(ues.size());
        if (groups < 1 || groups > K)
            throw ConfigError("kmeans_group: need 1 <= G <= K");
        if (max_iter < 1)
            throw ConfigError("kmeans_group: max_iter must be positive");

        std::vector<int> order(static_cast<std::size_t>(K));
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<Eigenspace> centers;
        for (int g = 0; g < groups; ++g)
            centers.push_back(ues[static_cast<std::size_t>(order[static_cast<std::size_t>(g)])]);

        GroupAssignment a = assign_to_centers(ues, centers);
        double previous = std::numeric_limits<double>::infinity();
        const double tol = 1e-9 * (1.0 + 2.0 * ues.front().dimension() * K);
        for (int iter = 1; iter <= max_iter; ++iter)
        {
            a.iterations = iter;

            // re-seed empty groups from the UE farthest from its center
            for (int g = 0; g < groups; ++g)
            {
                if (!a.groups[static_cast<std::size_t>(g)].empty())
                    continue;
                std::size_t far = 0;
                for (std::size_t k = 1; k < a.distance.size(); ++k)
                    if (a.distance[k] > a.distance[far] &&
                        a.groups[static_cast<std::size_t>(a.group_of[k])].size() > 1)
                        far = k;
                if (a.groups[static_cast<std::size_t>(a.group_of[far])].size() <= 1)
                    throw NumericalError("kmeans_group: cannot re-seed an empty group");
                a.group_of[far] = g;
                a.distance[far] = 0.0;
                a.centers[static_cast<std::size_t>(g)] = ues[far];
                fill_groups(a, groups);
            }

            for (int g = 0; g < groups; ++g)
                a.centers[static_cast<std::size_t>(g)] = group_mean(ues, a.groups[static_cast<std::size_t>(g)]);
            for (std::size_t k = 0; k < ues.size(); ++k)
                a.distance[k] = chordal_distance(a.centers[static_cast<std::size_t>(a.group_of[k])], ues[k]);
            fill_groups(a, groups);
            const double after_update = a.total_cost;

            GroupAssignment next = assign_to_centers(ues, a.centers);
            next.iterations = iter;
            if (next.total_cost > after_update + tol || after_update > previous + tol)
            {
                std::ostringstream msg;
                msg << "kmeans_group: total cost increased at iteration " << iter;
                throw NumericalError(msg.str());
            }
            const bool stable = next.group_of == a.group_of;
            previous = next.total_cost;
            a = std::move(next);
            if (stable)
                break;
        }
        return a;
    }

    GroupAssignment kmeans_group(std::span<const CMat> correlations, int groups, int p, Rng &rng, int max_iter)
    {
        const auto ues = subspaces(correlations, p);
        return kmeans_group(ues, groups, rng, max_iter);
    }

    std::vector<int> hungarian_solve(const RMat &cost)
    {
        const int n = static_cast<int>(cost.rows());
        const int m = static_cast<int>(cost.cols());
        if (n > m)
            throw ConfigError("hungarian_solve: more rows than columns");
        if (n == 0)
            return {};
        if (!cost.allFinite())
            throw DomainError("hungarian_solve: costs must be finite");

        // potentials u (rows) and v (columns), 1-based with a virtual column 0
        const double inf = std::numeric_limits<double>::infinity();
        std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0), v(static_cast<std::size_t>(m + 1), 0.0);
        std::vector<int> match(static_cast<std::size_t>(m + 1), 0), way(static_cast<std::size_t>(m + 1), 0);
        for (int i = 1; i <= n; ++i)
        {
            match[0] = i;
            int j0 = 0;
            std::vector<double> minv(static_cast<std::size_t>(m + 1), inf);
            std::vector<char> used(static_cast<std::size_t>(m + 1), 0);
            do
            {
                used[static_cast<std::size_t>(j0)] = 1;
                const int i0 = match[static_cast<std::size_t>(j0)];
                double delta = inf;
                int j1 = 0;
                for (int j = 1; j <= m; ++j)
                {
                    if (used[static_cast<std::size_t>(j)])
                        continue;
                    const double cur = cost(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                    if (cur < minv[static_cast<std::size_t>(j)])
                    {
                        minv[static_cast<std::size_t>(j)] = cur;
                        way[static_cast<std::size_t>(j)] = j0;
                    }
                    if (minv[static_cast<std::size_t>(j)] < delta)
                    {
                        delta = minv[static_cast<std::size_t>(j)];
                        j1 = j;
                    }
                }
                for (int j = 0; j <= m; ++j)
                {
                    if (used[static_cast<std::size_t>(j)])
                    {
                        u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
                        v[static_cast<std::size_t>(j)] -= delta;
                    }
                    else
                        minv[static_cast<std::size_t>(j)] -= delta;
                }
                j0 = j1;
            } while (match[static_cast<std::size_t>(j0)] != 0);
            do
            {
                const int j1 = way[static_cast<std::size_t>(j0)];
                match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
                j0 = j1;
            } while (j0 != 0);
        }
        std::vector<int> result(static_cast<std::size_t>(n), -1);
        for (int j = 1; j <= m; ++j)
            if (match[static_cast<std::size_t>(j)] != 0)
                result[static_cast<std::size_t>(match[static_cast<std::size_t>(j)] - 1)] = j - 1;
        return result;
    }

    GroupAssignment balance_against_centers(std::span<const Eigenspace> ues, std::span<const Eigenspace> centers)
    {
        const int K = static_cast<int>(ues.size());
        const int G = static_cast<int>(centers.size());
        if (G < 1 || K % G != 0)
            throw ConfigError("balanced grouping: K must be a multiple of G");
        const int N = K / G;
        const RMat D = distance_matrix(ues, centers);
        RMat H(K, K);
        for (int r = 0; r < K; ++r)
            H.row(r) = D.row(r / N);
        const auto columns = hungarian_solve(H);

        GroupAssignment a;
        a.centers.assign(centers.begin(), centers.end());
        a.group_of.assign(static_cast<std::size_t>(K), -1);
        a.distance.assign(static_cast<std::size_t>(K), 0.0);
        for (int r = 0; r < K; ++r)
        {
            const int k = columns[static_cast<std::size_t>(r)];
            a.group_of[static_cast<std::size_t>(k)] = r / N;
            a.distance[static_cast<std::size_t>(k)] = D(r / N, k);
        }
        fill_groups(a, G);
        return a;
    }

    GroupAssignment balanced_group(std::span<const CMat> correlations, int groups, int p, Rng &rng, int max_iter)
    {
        const int K = static_cast<int>(correlations.size());
        if (groups < 1 || K % groups != 0)
            throw ConfigError("balanced_group: K must be a multiple of G");
        const auto ues = subspaces(correlations, p);
        const GroupAssignment clustered = kmeans_group(ues, groups, rng, max_iter);
        GroupAssignment a = balance_against_centers(ues, clustered.centers);
        a.iterations = clustered.iterations;
        return a;
    }

    void write_groups_csv(std::ostream &out, const GroupAssignment &assignment)
    {
        out << std::setprecision(std::numeric_limits<double>::max_digits10);
        out << "ue_id,group_id,distance_to_center\n";
        for (std::size_t k = 0; k < assignment.group_of.size(); ++k)
            out << k << ',' << assignment.group_of[k] << ',' << assignment.distance[k] << '\n';
    }
}
