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

#pragma once

#include <cstdint>

#include <armadillo>

#include "array_channel.hpp"
#include "common.hpp"
#include "ss_solver.hpp"
#include "td_solver.hpp"

namespace irsense
{

    // I - h (h^H h)^{-1} h^H, the orthogonal projector onto the complement
    // of span{h}; idempotent and annihilates h
    arma::cx_mat null_projector(const arma::cx_vec &h);

    // Closed-form beam structure for one beam of a two-target design, built
    // from the served channel and the channel receiving its leakage. On the
    // matched-filter branch the beam is the scaled served channel; otherwise
    // w = rho1 h_target + rho2 chi h_perp, which meets the power budget and
    // the leakage cap with equality.
    struct TwoTargetGeometry
    {
        arma::cx_vec h_target;
        arma::cx_vec h_other;
        arma::cx_mat projector; // null_projector(h_other)
        arma::cx_vec h_perp;    // projector * h_target, orthogonal to h_other
        double rho1 = 0.0;
        double rho2 = 0.0;                 // nonnegative root of the power equation
        arma::cx_double chi{1.0, 0.0};     // unit phase making h_target^H chi h_perp real nonnegative
        double cos_psi = 0.0;              // |h_target^H h_other| / (||h_target|| ||h_other||)
        bool matched_branch = false;       // leakage of the full-power matched beam already under the cap
    };

    // Branch selection and coefficients for power p and leakage cap eps.
    // Raises an infeasible-geometry error when the channels are collinear
    // and the cap cannot be met at the requested power.
    TwoTargetGeometry two_target_geometry(const arma::cx_vec &h_target,
                                          const arma::cx_vec &h_other, double p, double eps);

    // Single-column beamformer realizing the optimal closed form.
    Beamformer closed_form_w(const arma::cx_vec &h_target, const arma::cx_vec &h_other,
                             double p, double eps);

    // |h_target^H w|^2 of the closed-form beam; p = 0 yields 0.
    double closed_form_gain(const arma::cx_vec &h_target, const arma::cx_vec &h_other,
                            double p, double eps);

    struct PowerSplit
    {
        double p1 = 0.0;
        double p2 = 0.0;
        bool boundary = false; // one gain was identically zero; returned an endpoint split
    };

    // Split p_max across the two beams so the closed-form gains are equal,
    // by bisection on the monotone gain difference; falls back to a
    // golden-section search on the min-gain when monotonicity fails.
    PowerSplit power_split(const arma::cx_vec &h_1, const arma::cx_vec &h_2, double p_max,
                           double eps);

    struct AoConfig
    {
        arma::uword max_rounds = 200;
        double eps_phase = 1e-3; // relative change of the lifted phase matrix between rounds
        std::uint64_t seed = 1;
        arma::cx_vec v0; // optional fixed starting phases; empty draws random ones
        PenaltyConfig penalty;

        void validate() const;
    };

    // Alternating two-target design: closed-form beams and power split at the
    // current phases, then a penalty-driven phase update at fixed beams,
    // accepted only when it improves the closed-form objective. The trace
    // holds one row per round with the round's min-gain objective.
    SsSolution ao_two_target(const SceneChannels &scene, double p_max, double eps,
                             const AoConfig &config);

} // namespace irsense
