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

#ifndef NOMAMIMO_GROUPING_HPP
#define NOMAMIMO_GROUPING_HPP

#include "nomamimo/types.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace noma
{
    // M x p matrix with orthonormal columns.
    struct Eigenspace
    {
        CMat U;

        int dimension() const { return static_cast<int>(U.cols()); }
    };

    // The p leading eigenvectors of a Hermitian matrix, in descending order of
    // eigenvalue. Each column is scaled so that its largest-magnitude entry is
    // real and positive.
    Eigenspace p_dominant_eigenspace(const CMat &A, int p);

    // ||A A^H - B B^H||_F^2 evaluated as 2p - 2 ||A^H B||_F^2.
    double chordal_distance(const Eigenspace &A, const Eigenspace &B);

    struct GroupAssignment
    {
        std::vector<std::vector<int>> groups;
        std::vector<Eigenspace> centers;
        std::vector<int> group_of;
        std::vector<double> distance;
        double total_cost = 0.0;
        int iterations = 0;
    };

    // Nearest-center assignment (ties go to the lowest group index).
    GroupAssignment assign_to_centers(std::span<const Eigenspace> ues, std::span<const Eigenspace> centers);

    // k-means on the Grassmannian. Seeds are G distinct random UEs; empty
    // groups are re-seeded with the UE farthest from its center. Throws
    // NumericalError if the total cost ever increases.
    GroupAssignment kmeans_group(std::span<const Eigenspace> ues, int groups, Rng &rng, int max_iter = 100);
    GroupAssignment kmeans_group(std::span<const CMat> correlations, int groups, int p, Rng &rng,
                                 int max_iter = 100);

    // Optimal linear assignment: result[row] = column, minimizing the sum of
    // cost(row, result[row]). Rows <= columns.
    std::vector<int> hungarian_solve(const RMat &cost);

    // Assigns exactly K / G UEs to each of the given centers with minimum total
    // chordal distance.
    GroupAssignment balance_against_centers(std::span<const Eigenspace> ues, std::span<const Eigenspace> centers);

    // k-means followed by the balancing step.
    GroupAssignment balanced_group(std::span<const CMat> correlations, int groups, int p, Rng &rng,
                                   int max_iter = 100);

    // ue_id,group_id,distance_to_center
    void write_groups_csv(std::ostream &out, const GroupAssignment &assignment);
}

#endif
