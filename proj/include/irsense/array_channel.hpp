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

#ifndef irsense_array_channel_H
#define irsense_array_channel_H

#include "common.hpp"

#include <optional>
#include <vector>

namespace irsense
{

    // Propagation direction seen from the IRS plane, radians.
    // Elevation is measured from the array normal (0 = broadside).
    struct Direction
    {
        double azimuth = 0.0;
        double elevation = 0.0;

        double phi() const { return std::sin(elevation) * std::cos(azimuth); }   // x direction cosine
        double omega() const { return std::sin(elevation) * std::sin(azimuth); } // y direction cosine
    };

    // BS uniform linear array + IRS uniform planar array
    struct ArrayGeometry
    {
        arma::uword m = 8;    // BS antennas
        arma::uword n_x = 8;  // IRS elements along x
        arma::uword n_y = 8;  // IRS elements along y
        double d_x = 0.05;    // IRS element spacing [m]
        double d_y = 0.05;
        double d_bs = 0.05;   // BS antenna spacing [m]
        double wavelength = 0.1; // carrier wavelength [m]

        arma::uword n() const { return n_x * n_y; }
        void validate() const;
    };

    // IRS phase profile. In "relaxed" mode the entries may lie inside the unit
    // disc (used transiently by the phase subproblem before projection).
    struct PhaseConfig
    {
        enum class mode
        {
            unit_modulus,
            relaxed
        };

        arma::cx_vec v;
        mode kind = mode::unit_modulus;

        void validate(double tol = 1e-9) const;
    };

    // BS beamformers, one column per target/beam; powers are optional bookkeeping
    struct Beamformer
    {
        arma::cx_mat w;              // M x K
        std::vector<double> powers;  // per-beam ||w_k||^2, may be empty

        void validate() const;
    };

    // Static scene: BS-IRS channel plus target directions
    struct SceneChannels
    {
        ArrayGeometry geom;
        arma::cx_mat g_bs_irs;           // N x M
        std::vector<Direction> targets;  // size K
        double sigma2 = 1e-10;           // noise power [W]

        arma::uword k() const { return targets.size(); }
        void validate() const;
    };

    struct ChannelModel
    {
        enum class kind
        {
            pure_los,
            rician
        };

        kind type = kind::pure_los;
        double kappa = 10.0; // Rician factor (linear); ignored for pure_los
    };

    // UPA steering vector of the IRS towards "dir", length N = N_x * N_y.
    // Element order: outer index x, inner index y (Kronecker of the two axis progressions).
    arma::cx_vec steering_vector(const ArrayGeometry &geom, const Direction &dir);

    // BS ULA steering vector (array along the x axis), length M
    arma::cx_vec bs_steering_vector(const ArrayGeometry &geom, double dircos);

    // Q_k = diag(a_k^H) G, the one-hop BS -> IRS -> direction map (N x M)
    arma::cx_mat effective_channel(const ArrayGeometry &geom, const Direction &dir,
                                   const arma::cx_mat &g_bs_irs);
    arma::cx_mat effective_channel(const arma::cx_vec &steering, const arma::cx_mat &g_bs_irs);

    // Entrywise u_n / |u_n|; entries below 1e-14 in magnitude map to 1
    arma::cx_vec unit_modulus_projection(const arma::cx_vec &u);

    // Beam pattern gain |v^H Q w|^2 at the direction baked into Q
    double beam_gain(const arma::cx_vec &v, const arma::cx_mat &q, const arma::cx_vec &w);

    // Power beam k deposits on another target's direction; same quadratic form as
    // beam_gain, kept as a separate entry point for its distinct role
    double leakage(const arma::cx_vec &v, const arma::cx_mat &q_other, const arma::cx_vec &w);

    // Geometric BS -> IRS channel (N x M): free-space amplitude lambda / (4 pi d),
    // pure LoS rank-one outer product or Rician mixture with an i.i.d. CN(0,1)
    // scatter component. The IRS lies in the x-y plane at irs_pos; the BS ULA is
    // parallel to the x axis at bs_pos.
    arma::cx_mat synthesize_channel(const ArrayGeometry &geom, const arma::vec3 &bs_pos,
                                    const arma::vec3 &irs_pos, const ChannelModel &model,
                                    std::uint64_t seed);

} // namespace irsense

#endif
