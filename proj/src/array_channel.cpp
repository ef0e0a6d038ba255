// SPDX-License-Identifier: Apache-2.0
//
// irsense - IRS-assisted multi-target sensing: beam design and echo simulation
// Copyright (C) 2026 irsense developers
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

#include "irsense/array_channel.hpp"

namespace irsense
{

    void ArrayGeometry::validate() const
    {
        if (m == 0 || n_x == 0 || n_y == 0)
            raise(errc::invalid_argument, "ArrayGeometry: antenna/element counts must be positive");
        if (!(d_x > 0.0) || !(d_y > 0.0) || !(d_bs > 0.0) || !(wavelength > 0.0))
            raise(errc::invalid_argument, "ArrayGeometry: spacings and wavelength must be positive");
    }

    void PhaseConfig::validate(double tol) const
    {
        if (v.n_elem == 0)
            raise(errc::invalid_argument, "PhaseConfig: empty phase vector");
        for (arma::uword i = 0; i < v.n_elem; i++)
        {
            double a = std::abs(v(i));
            if (kind == mode::unit_modulus)
            {
                if (std::abs(a - 1.0) > tol)
                    raise(errc::invalid_argument, "PhaseConfig: entry " + std::to_string(i) +
                                                      " is off the unit circle by " + std::to_string(std::abs(a - 1.0)));
            }
            else if (a > 1.0 + tol)
                raise(errc::invalid_argument, "PhaseConfig: relaxed entry exceeds the unit disc");
        }
    }

    void Beamformer::validate() const
    {
        if (w.n_elem == 0)
            raise(errc::invalid_argument, "Beamformer: empty matrix");
        if (!powers.empty() && powers.size() != w.n_cols)
            raise(errc::dimension_mismatch, "Beamformer: power list does not match beam count");
    }

    void SceneChannels::validate() const
    {
        geom.validate();
        if (g_bs_irs.n_rows != geom.n() || g_bs_irs.n_cols != geom.m)
            raise(errc::dimension_mismatch, "SceneChannels: G must be N x M (IRS rows, BS columns)");
        if (targets.empty())
            raise(errc::invalid_argument, "SceneChannels: no targets");
        if (!(sigma2 > 0.0))
            raise(errc::invalid_argument, "SceneChannels: noise power must be positive");
    }

    arma::cx_vec steering_vector(const ArrayGeometry &geom, const Direction &dir)
    {
        geom.validate();
        const double cx = -2.0 * pi * geom.d_x * dir.phi() / geom.wavelength;
        const double cy = -2.0 * pi * geom.d_y * dir.omega() / geom.wavelength;

        arma::cx_vec ax(geom.n_x), ay(geom.n_y);
        for (arma::uword p = 0; p < geom.n_x; p++)
            ax(p) = arma::cx_double(std::cos(cx * double(p)), std::sin(cx * double(p)));
        for (arma::uword q = 0; q < geom.n_y; q++)
            ay(q) = arma::cx_double(std::cos(cy * double(q)), std::sin(cy * double(q)));

        return arma::kron(ax, ay);
    }

    arma::cx_vec bs_steering_vector(const ArrayGeometry &geom, double dircos)
    {
        geom.validate();
        const double c = -2.0 * pi * geom.d_bs * dircos / geom.wavelength;
        arma::cx_vec b(geom.m);
        for (arma::uword p = 0; p < geom.m; p++)
            b(p) = arma::cx_double(std::cos(c * double(p)), std::sin(c * double(p)));
        return b;
    }

    arma::cx_mat effective_channel(const arma::cx_vec &steering, const arma::cx_mat &g_bs_irs)
    {
        if (steering.n_elem != g_bs_irs.n_rows)
            raise(errc::dimension_mismatch, "effective_channel: steering length must match the rows of G");
        arma::cx_mat q = g_bs_irs;
        for (arma::uword r = 0; r < q.n_rows; r++)
            q.row(r) *= std::conj(steering(r));
        return q;
    }

    arma::cx_mat effective_channel(const ArrayGeometry &geom, const Direction &dir,
                                   const arma::cx_mat &g_bs_irs)
    {
        return effective_channel(steering_vector(geom, dir), g_bs_irs);
    }

    arma::cx_vec unit_modulus_projection(const arma::cx_vec &u)
    {
        arma::cx_vec v(u.n_elem);
        for (arma::uword n = 0; n < u.n_elem; n++)
        {
            double mag = std::abs(u(n));
            v(n) = (mag > 1e-14) ? u(n) / mag : std::complex<double>(1.0, 0.0);
        }
        return v;
    }

    double beam_gain(const arma::cx_vec &v, const arma::cx_mat &q, const arma::cx_vec &w)
    {
        if (v.n_elem != q.n_rows || w.n_elem != q.n_cols)
            raise(errc::dimension_mismatch, "beam_gain: v/Q/w dimensions disagree");
        return std::norm(arma::cdot(v, q * w));
    }

    double leakage(const arma::cx_vec &v, const arma::cx_mat &q_other, const arma::cx_vec &w)
    {
        return beam_gain(v, q_other, w);
    }

    arma::cx_mat synthesize_channel(const ArrayGeometry &geom, const arma::vec3 &bs_pos,
                                    const arma::vec3 &irs_pos, const ChannelModel &model,
                                    std::uint64_t seed)
    {
        geom.validate();
        arma::vec3 rel = bs_pos - irs_pos;
        const double dist = arma::norm(rel);
        if (!(dist > 0.0))
            raise(errc::invalid_argument, "synthesize_channel: BS and IRS positions coincide");

        const double amp = geom.wavelength / (4.0 * pi * dist);

        // BS as seen from the IRS
        Direction to_bs;
        to_bs.azimuth = std::atan2(rel(1), rel(0));
        to_bs.elevation = std::acos(std::clamp(rel(2) / dist, -1.0, 1.0));
        arma::cx_vec a_irs = steering_vector(geom, to_bs);

        // IRS as seen from the BS ULA (axis parallel to x)
        const double dircos = -rel(0) / dist;
        arma::cx_vec b_bs = bs_steering_vector(geom, dircos);

        arma::cx_mat g_los = a_irs * b_bs.t(); // .t() is the conjugate transpose

        switch (model.type)
        {
        case ChannelModel::kind::pure_los:
            return amp * g_los;
        case ChannelModel::kind::rician:
        {
            if (!(model.kappa >= 0.0))
                raise(errc::invalid_argument, "synthesize_channel: Rician kappa must be non-negative");
            if (std::isinf(model.kappa))
                return amp * g_los;
            rng_stream rng(derive_seed(seed, 0xC4A7));
            arma::cx_mat g_nlos = rng.cnormal_mat(geom.n(), geom.m);
            const double w_los = std::sqrt(model.kappa / (1.0 + model.kappa));
            const double w_nlos = std::sqrt(1.0 / (1.0 + model.kappa));
            return amp * (w_los * g_los + w_nlos * g_nlos);
        }
        }
        raise(errc::internal, "synthesize_channel: unhandled model");
    }

} // namespace irsense
