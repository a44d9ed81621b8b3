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

#ifndef NOMAMIMO_TYPES_HPP
#define NOMAMIMO_TYPES_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace noma
{
    using cd = std::complex<double>;
    using CMat = Eigen::MatrixXcd;
    using CVec = Eigen::VectorXcd;
    using RMat = Eigen::MatrixXd;
    using RVec = Eigen::VectorXd;

    inline constexpr double pi = std::numbers::pi;

    // Invalid configuration or inconsistent dimensions.
    class ConfigError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // Argument outside the mathematical domain of an operation.
    class DomainError : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    // Factorization failure, indefinite input and the like.
    class NumericalError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Caller broke a precondition that cannot be expressed by the type system
    // (e.g. asking for the orthogonal fast path with non-orthogonal signatures).
    class ContractViolation : public std::logic_error
    {
    public:
        using std::logic_error::logic_error;
    };

    using Rng = std::mt19937_64;

    // Independent, reproducible stream for a (seed, path...) tuple, e.g.
    // make_stream(seed, {sweep_point, drop, trial}).
    inline Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path = {})
    {
        std::vector<std::uint32_t> words;
        words.reserve(2 + 2 * path.size());
        words.push_back(static_cast<std::uint32_t>(seed));
        words.push_back(static_cast<std::uint32_t>(seed >> 32));
        for (auto p : path)
        {
            words.push_back(static_cast<std::uint32_t>(p));
            words.push_back(static_cast<std::uint32_t>(p >> 32));
        }
        std::seed_seq seq(words.begin(), words.end());
        return Rng(seq);
    }

    // CN(0, 1)
    inline cd complex_normal(Rng &rng)
    {
        std::normal_distribution<double> n(0.0, std::numbers::sqrt2 / 2.0);
        const double re = n(rng);
        const double im = n(rng);
        return {re, im};
    }

    inline CVec complex_normal_vector(Eigen::Index n, Rng &rng)
    {
        CVec z(n);
        for (Eigen::Index i = 0; i < n; ++i)
            z(i) = complex_normal(rng);
        return z;
    }

    inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
    inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
    inline double dbm_to_watt(double dbm) { return db_to_linear(dbm - 30.0); }
    inline double deg_to_rad(double deg) { return deg * pi / 180.0; }
    inline double rad_to_deg(double rad) { return rad * 180.0 / pi; }

    // Warnings from numerical code end up here; defaults to std::clog.
    using WarningSink = std::function<void(const std::string &)>;
    void set_warning_sink(WarningSink sink);
    void warn(const std::string &message);
}

#endif
