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

#ifndef NOMAMIMO_CHANNEL_HPP
#define NOMAMIMO_CHANNEL_HPP

#include "nomamimo/types.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace noma
{
    // Hermitian PSD spatial correlation matrix with beta = tr(R) / M.
    struct CorrelationMatrix
    {
        CMat R;
        double beta = 0.0;

        Eigen::Index antennas() const { return R.rows(); }
    };

    // Builds the struct and sets beta from the trace.
    CorrelationMatrix make_correlation(CMat R);

    // Hermitian within 1e-12 (relative to the largest entry), PSD within
    // -1e-10 tr(R)/M and beta consistent with the trace.
    bool satisfies_invariants(const CorrelationMatrix &c);

    // ULA with half-wavelength spacing: element m is exp(j pi m sin(azimuth)).
    CVec ula_response(double azimuth, int antennas);

    // (1 / M) a(phi1)^H a(phi2) via the closed form
    // exp(-j (M - 1) W) sin(M W) / (M sin W), W = pi (sin phi1 - sin phi2) / 2.
    // The magnitude is |sin(M W) / (M sin W)|; the phase comes from the geometric sum.
    cd los_inner_product(double phi1, double phi2, int antennas);

    // Fixed-node Gauss-Legendre rule on [-1, 1].
    struct QuadratureRule
    {
        std::vector<double> nodes;
        std::vector<double> weights;
    };
    const QuadratureRule &gauss_legendre(int order);

    inline constexpr int quadrature_order = 64;

    // 2D one-ring model on a ULA. Entries are
    //   beta / (2 delta) * int_{-delta}^{delta} exp(j pi (m1 - m2) sin(azimuth + x)) dx,
    // evaluated per lag with a 64-node Gauss-Legendre rule (R is Toeplitz).
    // delta == 0 yields the LoS outer product beta a a^H.
    CorrelationMatrix corr_2d_one_ring(double beta, double azimuth, double delta, int antennas);

    // Planar sqrt(M) x sqrt(M) array with half-wavelength spacing. Antenna
    // m sits in row r = m / sqrt(M) (vertical) and column c = m % sqrt(M)
    // (horizontal); its phase for a wave from (azimuth, elevation) is
    //   pi * (c * cos(elevation) * sin(azimuth) + r * sin(elevation)).
    CVec upa_response(double azimuth, double elevation, int antennas);

    // 3D one-ring model: azimuth and elevation are independent and uniform in
    // [azimuth +- azimuth_spread] x [elevation +- elevation_spread]. A zero
    // spread collapses that dimension onto its nominal angle.
    CorrelationMatrix corr_3d_one_ring(double beta, double azimuth, double elevation, double azimuth_spread,
                                       double elevation_spread, int antennas);

    // beta a a^H for a pure LoS ULA channel.
    CorrelationMatrix corr_los(double beta, double azimuth, int antennas);

    // Square root of R from its eigendecomposition; negative eigenvalues
    // within -1e-10 tr(R)/M are clamped to zero, more negative ones are reported.
    class ChannelSampler
    {
    public:
        explicit ChannelSampler(const CorrelationMatrix &c);

        // h = R^{1/2} z with z ~ CN(0, I)
        CVec draw(Rng &rng) const;
        // Same, from a caller-provided standard normal vector.
        CVec colour(const CVec &z) const { return sqrt_ * z; }
        const CMat &square_root() const { return sqrt_; }

    private:
        CMat sqrt_;
    };

    CVec sample_channel(const CorrelationMatrix &c, Rng &rng);

    // Row-major real/imag interleaved CSV: one line per matrix,
    // "id,M,re(0,0),im(0,0),re(0,1),...".
    void write_correlation_csv(std::ostream &out, std::span<const CorrelationMatrix> matrices);
    std::vector<CorrelationMatrix> read_correlation_csv(std::istream &in);
}

#endif
