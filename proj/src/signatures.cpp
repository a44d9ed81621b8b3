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

#include "nomamimo/signatures.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace noma
{
    std::string to_string(SignatureKind kind)
    {
        switch (kind)
        {
        case SignatureKind::orthogonal:
            return "orthogonal";
        case SignatureKind::random:
            return "random";
        case SignatureKind::sparse:
            return "sparse";
        }
        return "?";
    }

    SignatureKind signature_kind_from_string(const std::string &name)
    {
        if (name == "orthogonal")
            return SignatureKind::orthogonal;
        if (name == "random")
            return SignatureKind::random;
        if (name == "sparse")
            return SignatureKind::sparse;
        throw ConfigError("unknown signature kind '" + name + "'");
    }

    SignatureSet orthogonal_set(int length)
    {
        if (length < 1)
            throw DomainError("orthogonal_set: length must be >= 1");
        SignatureSet s;
        s.kind = SignatureKind::orthogonal;
        const int N = length;
        const bool power_of_two = (N & (N - 1)) == 0;
        for (int k = 0; k < N; ++k)
        {
            CVec u(N);
            for (int n = 0; n < N; ++n)
            {
                if (power_of_two)
                    u(n) = (__builtin_popcount(static_cast<unsigned>(n & k)) % 2 == 0) ? 1.0 : -1.0;
                else
                    u(n) = std::polar(1.0, -2.0 * pi * ((n * k) % N) / N);
            }
            s.vectors.push_back(std::move(u));
        }
        return s;
    }

    SignatureSet random_pm1_set(int length, int count, Rng &rng)
    {
        if (length < 1 || count < 0)
            throw DomainError("random_pm1_set: length must be >= 1 and count >= 0");
        SignatureSet s;
        s.kind = SignatureKind::random;
        std::bernoulli_distribution coin(0.5);
        for (int k = 0; k < count; ++k)
        {
            CVec u(length);
            for (int n = 0; n < length; ++n)
                u(n) = coin(rng) ? 1.0 : -1.0;
            s.vectors.push_back(std::move(u));
        }
        return s;
    }

    SignatureSet sparse_set(int length, int count, Rng &rng)
    {
        if (length < 1 || count < 0)
            throw DomainError("sparse_set: length must be >= 1 and count >= 0");
        SignatureSet s;
        s.kind = SignatureKind::sparse;
        std::uniform_int_distribution<int> pos(0, length - 1);
        for (int k = 0; k < count; ++k)
        {
            CVec u = CVec::Zero(length);
            u(pos(rng)) = std::sqrt(static_cast<double>(length));
            s.vectors.push_back(std::move(u));
        }
        return s;
    }

    SignatureSet make_set(SignatureKind kind, int length, int count, Rng &rng)
    {
        switch (kind)
        {
        case SignatureKind::orthogonal:
        {
            if (count > length)
                throw ConfigError("an orthogonal set of length N holds at most N signatures");
            SignatureSet s = orthogonal_set(length);
            s.vectors.resize(static_cast<std::size_t>(count));
            return s;
        }
        case SignatureKind::random:
            return random_pm1_set(length, count, rng);
        case SignatureKind::sparse:
            return sparse_set(length, count, rng);
        }
        throw ConfigError("unknown signature kind");
    }

    bool is_mutually_orthogonal(std::span<const CVec> vectors, double tol)
    {
        for (std::size_t a = 0; a < vectors.size(); ++a)
            for (std::size_t b = a + 1; b < vectors.size(); ++b)
                if (std::abs(vectors[a].dot(vectors[b])) > tol * static_cast<double>(vectors[a].size()))
                    return false;
        return true;
    }

    bool is_identical_or_orthogonal(std::span<const CVec> vectors, double tol)
    {
        for (std::size_t a = 0; a < vectors.size(); ++a)
            for (std::size_t b = a + 1; b < vectors.size(); ++b)
            {
                const double n = static_cast<double>(vectors[a].size());
                if ((vectors[a] - vectors[b]).cwiseAbs().maxCoeff() <= tol)
                    continue;
                if (std::abs(vectors[a].dot(vectors[b])) > tol * n)
                    return false;
            }
        return true;
    }

    std::vector<CVec> SignatureAssignment::per_ue() const
    {
        std::vector<CVec> out;
        out.reserve(index.size());
        for (int f = 0; f < total(); ++f)
            out.push_back(of(f));
        return out;
    }

    SignatureAssignment assign_cyclic(SignatureSet set, int cells, int ues_per_cell)
    {
        if (set.size() < 1)
            throw ConfigError("assign_cyclic: empty signature set");
        SignatureAssignment a;
        a.cells = cells;
        a.ues_per_cell = ues_per_cell;
        for (int l = 0; l < cells; ++l)
            for (int k = 0; k < ues_per_cell; ++k)
                a.index.push_back(k % set.size());
        a.set = std::move(set);
        return a;
    }

    SignatureAssignment assign_random(SignatureSet set, int cells, int ues_per_cell, Rng &rng)
    {
        if (set.size() < 1)
            throw ConfigError("assign_random: empty signature set");
        SignatureAssignment a;
        a.cells = cells;
        a.ues_per_cell = ues_per_cell;
        std::uniform_int_distribution<int> pick(0, set.size() - 1);
        for (int f = 0; f < cells * ues_per_cell; ++f)
            a.index.push_back(pick(rng));
        a.set = std::move(set);
        return a;
    }

    SignatureAssignment assign_grouped(SignatureSet set, const std::vector<std::vector<std::vector<int>>> &groups,
                                       int ues_per_cell)
    {
        SignatureAssignment a;
        a.cells = static_cast<int>(groups.size());
        a.ues_per_cell = ues_per_cell;
        a.index.assign(static_cast<std::size_t>(a.cells * ues_per_cell), -1);
        for (int l = 0; l < a.cells; ++l)
            for (const auto &group : groups[static_cast<std::size_t>(l)])
            {
                if (static_cast<int>(group.size()) > set.size())
                    throw ConfigError("assign_grouped: group larger than the signature set");
                for (std::size_t m = 0; m < group.size(); ++m)
                {
                    const int ue = group[m];
                    if (ue < 0 || ue >= ues_per_cell)
                        throw ConfigError("assign_grouped: UE index out of range");
                    a.index[static_cast<std::size_t>(l * ues_per_cell + ue)] = static_cast<int>(m);
                }
            }
        for (int idx : a.index)
            if (idx < 0)
                throw ConfigError("assign_grouped: groups do not cover every UE");
        a.set = std::move(set);
        return a;
    }

    std::vector<int> co_signature_index(const SignatureAssignment &assignment, int flat, bool include_self)
    {
        std::vector<int> out;
        const CVec &u = assignment.of(flat);
        for (int f = 0; f < assignment.total(); ++f)
        {
            if (f == flat)
            {
                if (include_self)
                    out.push_back(f);
                continue;
            }
            const CVec &v = assignment.of(f);
            if (assignment.index[static_cast<std::size_t>(f)] == assignment.index[static_cast<std::size_t>(flat)] ||
                (u - v).cwiseAbs().maxCoeff() == 0.0)
                out.push_back(f);
        }
        return out;
    }

    void write_signatures_csv(std::ostream &out, const SignatureSet &set)
    {
        out << std::setprecision(std::numeric_limits<double>::max_digits10);
        out << to_string(set.kind) << ',' << set.length() << ',' << set.size() << '\n';
        for (const auto &u : set.vectors)
        {
            for (Eigen::Index n = 0; n < u.size(); ++n)
                out << (n ? "," : "") << u(n).real() << ',' << u(n).imag();
            out << '\n';
        }
    }

    SignatureSet read_signatures_csv(std::istream &in)
    {
        std::string line;
        if (!std::getline(in, line))
            throw ConfigError("signature csv: missing header");
        std::istringstream h(line);
        std::string kind, len, cnt;
        std::getline(h, kind, ',');
        std::getline(h, len, ',');
        std::getline(h, cnt, ',');
        SignatureSet s;
        s.kind = signature_kind_from_string(kind);
        const int N = std::stoi(len);
        const int count = std::stoi(cnt);
        for (int k = 0; k < count; ++k)
        {
            if (!std::getline(in, line))
                throw ConfigError("signature csv: truncated");
            std::istringstream row(line);
            std::string field;
            std::vector<double> v;
            while (std::getline(row, field, ','))
                v.push_back(std::stod(field));
            if (static_cast<int>(v.size()) != 2 * N)
                throw ConfigError("signature csv: wrong row length");
            CVec u(N);
            for (int n = 0; n < N; ++n)
                u(n) = cd(v[static_cast<std::size_t>(2 * n)], v[static_cast<std::size_t>(2 * n + 1)]);
            s.vectors.push_back(std::move(u));
        }
        return s;
    }
}
