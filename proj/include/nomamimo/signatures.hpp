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

#ifndef NOMAMIMO_SIGNATURES_HPP
#define NOMAMIMO_SIGNATURES_HPP

#include "nomamimo/types.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace noma
{
    enum class SignatureKind
    {
        orthogonal,
        random,
        sparse
    };

    std::string to_string(SignatureKind kind);
    SignatureKind signature_kind_from_string(const std::string &name);

    // Spreading (or pilot) signatures of a common length N with ||u||^2 = N.
    struct SignatureSet
    {
        SignatureKind kind = SignatureKind::orthogonal;
        std::vector<CVec> vectors;

        int length() const { return vectors.empty() ? 0 : static_cast<int>(vectors.front().size()); }
        int size() const { return static_cast<int>(vectors.size()); }
    };

    // N mutually orthogonal vectors: Sylvester-Hadamard columns when N is a
    // power of two, DFT columns otherwise.
    SignatureSet orthogonal_set(int length);

    // Entries drawn independently from {+1, -1}.
    SignatureSet random_pm1_set(int length, int count, Rng &rng);

    // One nonzero of value sqrt(N) at a uniformly random position.
    SignatureSet sparse_set(int length, int count, Rng &rng);

    SignatureSet make_set(SignatureKind kind, int length, int count, Rng &rng);

    // |a^H b| <= tol * N for every pair of distinct vectors
    bool is_mutually_orthogonal(std::span<const CVec> vectors, double tol = 1e-12);

    // Every pair is either identical or orthogonal (the structure the
    // classical pilot-reuse estimator relies on).
    bool is_identical_or_orthogonal(std::span<const CVec> vectors, double tol = 1e-12);

    // Network-wide mapping UE -> signature. UEs are addressed by their flat
    // index cell * K + ue.
    struct SignatureAssignment
    {
        SignatureSet set;
        std::vector<int> index;
        int cells = 0;
        int ues_per_cell = 0;

        const CVec &of(int flat) const { return set.vectors[static_cast<std::size_t>(index[static_cast<std::size_t>(flat)])]; }
        const CVec &of(int cell, int ue) const { return of(cell * ues_per_cell + ue); }
        int total() const { return cells * ues_per_cell; }
        std::vector<CVec> per_ue() const;
    };

    // UE k in every cell gets signature k mod |set|. With an orthogonal set
    // of tau_p pilots this is the cyclic pilot reuse pattern.
    SignatureAssignment assign_cyclic(SignatureSet set, int cells, int ues_per_cell);

    // Each UE draws its signature index uniformly, ignoring any grouping.
    SignatureAssignment assign_random(SignatureSet set, int cells, int ues_per_cell, Rng &rng);

    // groups[cell][g] lists the UEs of group g; the m-th member of every group
    // gets signature m, so signatures are distinct inside a group and reused
    // across groups and cells.
    SignatureAssignment assign_grouped(SignatureSet set, const std::vector<std::vector<std::vector<int>>> &groups,
                                       int ues_per_cell);

    // Flat indices of all UEs that use the same signature vector as `flat`
    // (identical vectors, not merely identical indices). `include_self`
    // controls whether `flat` itself is part of the result.
    std::vector<int> co_signature_index(const SignatureAssignment &assignment, int flat, bool include_self);

    // CSV: header "kind,length,count", then one line per vector with
    // real/imag interleaved.
    void write_signatures_csv(std::ostream &out, const SignatureSet &set);
    SignatureSet read_signatures_csv(std::istream &in);
}

#endif
