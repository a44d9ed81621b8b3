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

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>

namespace noma
{
    CorrelationMatrix make_correlation(CMat R)
    {
        CorrelationMatrix c;
        const double M = static_cast<double>(R.rows());
        c.beta = R.trace().real() / M;
        c.R = std::move(R);
        return c;
    }

    bool satisfies_invariants(const CorrelationMatrix &c)
    {
        const auto M = c.R.rows();
        if (M == 0 || c.R.cols() != M)
            return false;
        const double scale = std::max(c.R.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
        if ((c.R - c.R.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            return false;
        const double avg = c.R.trace().real() / static_cast<double>(M);
        if (std::abs(avg - c.beta) > 1e-9 * std::abs(c.beta))
            return false;
        Eigen::SelfAdjointEigenSolver<CMat> es(c.R, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff() >= -1e-10 * avg;
    }

    CVec ula_response(double azimuth, int antennas)
    {
        CVec a(antennas);
        const double s = std::sin(azimuth);
        for (int m = 0; m < antennas; ++m)
            a(m) = std::polar(1.0, pi * m * s);
        return a;
    }

    cd los_inner_product(double phi1, double phi2, int antennas)
    {
        const double M = static_cast<double>(antennas);
        const double w = pi * (std::sin(phi1) - std::sin(phi2)) / 2.0;
        const double sw = std::sin(w);
        // sin(Mw) / (M sin w) -> cos(Mw) / cos(w) as w -> k pi
        const double magnitude = std::abs(sw) < 1e-13 ? std::cos(M * w) / std::cos(w) : std::sin(M * w) / (M * sw);
        return std::polar(1.0, -(M - 1.0) * w) * magnitude;
    }

    const QuadratureRule &gauss_legendre(int order)
    {
        static std::mutex mutex;
        static std::map<int, QuadratureRule> cache;
        std::lock_guard lock(mutex);
        if (auto it = cache.find(order); it != cache.end())
            return it->second;
        if (order < 1)
            throw DomainError("gauss_legendre: order must be >= 1");

        QuadratureRule rule;
        rule.nodes.resize(static_cast<std::size_t>(order));
        rule.weights.resize(static_cast<std::size_t>(order));
        const int n = order;
        for (int i = 0; i < (n + 1) / 2; ++i)
        {
            double x = std::cos(pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int iter = 0; iter < 100; ++iter)
            {
                double p0 = 1.0, p1 = x;
                for (int k = 2; k <= n; ++k)
                {
                    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n * (x * p1 - p0) / (x * x - 1.0);
                const double dx = p1 / dp;
                x -= dx;
                if (std::abs(dx) < 1e-16)
                    break;
            }
            const double w = 2.0 / ((1.0 - x * x) * dp * dp);
            rule.nodes[static_cast<std::size_t>(i)] = -x;
            rule.nodes[static_cast<std::size_t>(n - 1 - i)] = x;
            rule.weights[static_cast<std::size_t>(i)] = w;
            rule.weights[static_cast<std::size_t>(n - 1 - i)] = w;
        }
        if (n % 2 == 1)
            rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
        return cache.emplace(order, std::move(rule)).first->second;
    }

    namespace
    {
        // Nodes and weights of the uniform density on [centre - spread, centre + spread];
        // the weights sum to one.
        void uniform_nodes(double centre, double spread, std::vector<double> &x, std::vector<double> &w)
        {
            x.clear();
            w.clear();
            if (spread == 0.0)
            {
                x.push_back(centre);
                w.push_back(1.0);
                return;
            }
            const auto &rule = gauss_legendre(quadrature_order);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i)
            {
                x.push_back(centre + spread * rule.nodes[i]);
                w.push_back(rule.weights[i] / 2.0);
            }
        }

        int square_side(int antennas)
        {
            const int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(antennas))));
            if (s * s != antennas)
                throw ConfigError("planar array needs a perfect-square antenna count, got " + std::to_string(antennas));
            return s;
        }

        void hermitian_fill(CMat &R)
        {
            for (Eigen::Index i = 0; i < R.rows(); ++i)
                for (Eigen::Index k = 0; k < i; ++k)
                    R(i, k) = std::conj(R(k, i));
        }
    }

    CorrelationMatrix corr_2d_one_ring(double beta, double azimuth, double delta, int antennas)
    {
        if (antennas < 1)
            throw ConfigError("corr_2d_one_ring: antennas must be >= 1");
        if (delta < 0.0)
            throw DomainError("corr_2d_one_ring: angular spread must be >= 0");
        if (delta == 0.0)
            return corr_los(beta, azimuth, antennas);

        std::vector<double> x, w;
        uniform_nodes(azimuth, delta, x, w);
        std::vector<cd> lag(static_cast<std::size_t>(antennas), cd(0.0));
        for (std::size_t i = 0; i < x.size(); ++i)
        {
            const double s = std::sin(x[i]);
            for (int d = 1; d < antennas; ++d)
                lag[static_cast<std::size_t>(d)] += w[i] * std::polar(1.0, pi * d * s);
        }
        CMat R(antennas, antennas);
        for (int m1 = 0; m1 < antennas; ++m1)
        {
            R(m1, m1) = beta;
            for (int m2 = m1 + 1; m2 < antennas; ++m2)
                R(m1, m2) = beta * std::conj(lag[static_cast<std::size_t>(m2 - m1)]);
        }
        hermitian_fill(R);
        return make_correlation(std::move(R));
    }

    CVec upa_response(double azimuth, double elevation, int antennas)
    {
        const int s = square_side(antennas);
        CVec a(antennas);
        const double h = std::cos(elevation) * std::sin(azimuth);
        const double v = std::sin(elevation);
        for (int m = 0; m < antennas; ++m)
            a(m) = std::polar(1.0, pi * ((m % s) * h + (m / s) * v));
        return a;
    }

    CorrelationMatrix corr_3d_one_ring(double beta, double azimuth, double elevation, double azimuth_spread,
                                       double elevation_spread, int antennas)
    {
        const int s = square_side(antennas);
        if (azimuth_spread < 0.0 || elevation_spread < 0.0)
            throw DomainError("corr_3d_one_ring: angular spreads must be >= 0");
        if (azimuth_spread == 0.0 && elevation_spread == 0.0)
        {
            const CVec a = upa_response(azimuth, elevation, antennas);
            return make_correlation(beta * a * a.adjoint());
        }

        std::vector<double> az, waz, el, wel;
        uniform_nodes(azimuth, azimuth_spread, az, waz);
        uniform_nodes(elevation, elevation_spread, el, wel);

        // table(dr, dc + s - 1) = E{exp(j pi (dc cos(el) sin(az) + dr sin(el)))}, dr >= 0
        const int width = 2 * s - 1;
        std::vector<cd> table(static_cast<std::size_t>(s * width), cd(0.0));
        std::vector<cd> ph(static_cast<std::size_t>(width));
        std::vector<cd> pv(static_cast<std::size_t>(s));
        for (std::size_t t = 0; t < el.size(); ++t)
        {
            const double sin_el = std::sin(el[t]);
            const double cos_el = std::cos(el[t]);
            const cd ev = std::polar(1.0, pi * sin_el);
            pv[0] = 1.0;
            for (int r = 1; r < s; ++r)
                pv[static_cast<std::size_t>(r)] = pv[static_cast<std::size_t>(r - 1)] * ev;
            for (std::size_t i = 0; i < az.size(); ++i)
            {
                const double weight = wel[t] * waz[i];
                const cd eh = std::polar(1.0, pi * cos_el * std::sin(az[i]));
                ph[static_cast<std::size_t>(s - 1)] = 1.0;
                for (int c = 1; c < s; ++c)
                {
                    ph[static_cast<std::size_t>(s - 1 + c)] = ph[static_cast<std::size_t>(s - 2 + c)] * eh;
                    ph[static_cast<std::size_t>(s - 1 - c)] = std::conj(ph[static_cast<std::size_t>(s - 1 + c)]);
                }
                for (int r = 0; r < s; ++r)
                {
                    const cd vr = weight * pv[static_cast<std::size_t>(r)];
                    cd *row = &table[static_cast<std::size_t>(r * width)];
                    for (int c = 0; c < width; ++c)
                        row[c] += vr * ph[static_cast<std::size_t>(c)];
                }
            }
        }

        auto lookup = [&](int dr, int dc) -> cd
        {
            if (dr >= 0)
                return table[static_cast<std::size_t>(dr * width + dc + s - 1)];
            return std::conj(table[static_cast<std::size_t>(-dr * width - dc + s - 1)]);
        };

        CMat R(antennas, antennas);
        for (int m1 = 0; m1 < antennas; ++m1)
        {
            R(m1, m1) = beta;
            for (int m2 = m1 + 1; m2 < antennas; ++m2)
                R(m1, m2) = beta * lookup(m1 / s - m2 / s, m1 % s - m2 % s);
        }
        hermitian_fill(R);
        return make_correlation(std::move(R));
    }

    CorrelationMatrix corr_los(double beta, double azimuth, int antennas)
    {
        const CVec a = ula_response(azimuth, antennas);
        CMat R = beta * a * a.adjoint();
        R.diagonal().setConstant(beta);
        return make_correlation(std::move(R));
    }

    ChannelSampler::ChannelSampler(const CorrelationMatrix &c)
    {
        const auto M = c.R.rows();
        Eigen::SelfAdjointEigenSolver<CMat> es(c.R);
        if (es.info() != Eigen::Success)
            throw NumericalError("ChannelSampler: eigendecomposition failed");
        const double tol = 1e-10 * std::abs(c.R.trace().real()) / static_cast<double>(M);
        RVec lambda = es.eigenvalues();
        if (lambda.minCoeff() < -tol)
        {
            std::ostringstream s;
            s << "ChannelSampler: correlation matrix is indefinite, eigenvalue " << lambda.minCoeff();
            throw NumericalError(s.str());
        }
        lambda = lambda.cwiseMax(0.0).cwiseSqrt();
        sqrt_ = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().adjoint();
    }

    CVec ChannelSampler::draw(Rng &rng) const
    {
        return sqrt_ * complex_normal_vector(sqrt_.rows(), rng);
    }

    CVec sample_channel(const CorrelationMatrix &c, Rng &rng)
    {
        return ChannelSampler(c).draw(rng);
    }

    void write_correlation_csv(std::ostream &out, std::span<const CorrelationMatrix> matrices)
    {
        out << std::setprecision(std::numeric_limits<double>::max_digits10);
        for (std::size_t id = 0; id < matrices.size(); ++id)
        {
            const CMat &R = matrices[id].R;
            out << id << ',' << R.rows();
            for (Eigen::Index i = 0; i < R.rows(); ++i)
                for (Eigen::Index k = 0; k < R.cols(); ++k)
                    out << ',' << R(i, k).real() << ',' << R(i, k).imag();
            out << '\n';
        }
    }

    std::vector<CorrelationMatrix> read_correlation_csv(std::istream &in)
    {
        std::vector<CorrelationMatrix> out;
        std::string line;
        while (std::getline(in, line))
        {
            if (line.empty() || line[0] == '#')
                continue;
            std::istringstream s(line);
            std::string field;
            std::vector<double> values;
            while (std::getline(s, field, ','))
                values.push_back(std::stod(field));
            if (values.size() < 2)
                throw ConfigError("correlation dump: malformed line");
            const auto M = static_cast<Eigen::Index>(values[1]);
            if (values.size() != static_cast<std::size_t>(2 + 2 * M * M))
                throw ConfigError("correlation dump: expected 2 M^2 values after the header fields");
            CMat R(M, M);
            std::size_t p = 2;
            for (Eigen::Index i = 0; i < M; ++i)
                for (Eigen::Index k = 0; k < M; ++k, p += 2)
                    R(i, k) = cd(values[p], values[p + 1]);
            out.push_back(make_correlation(std::move(R)));
        }
        return out;
    }
}
