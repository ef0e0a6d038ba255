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

#include <string>
#include <vector>

#include <armadillo>

#include "array_channel.hpp"
#include "conic.hpp"
#include "td_solver.hpp"

namespace irsense
{

    // Concave minorant of the beam-gain term Tr(W Q^H V Q), obtained by
    // keeping the two concave squared-norm terms of
    //   Tr(W S) = (1/2)||W + S||_F^2 - (1/2)||W||_F^2 - (1/2)||S||_F^2,
    // S = Q^H V Q, and replacing the convex first term by its tangent at
    // (w_ref, v_ref). Equals the true trace at the reference point.
    double trace_lower_bound(const arma::cx_mat &w, const arma::cx_mat &v, const arma::cx_mat &q,
                             const arma::cx_mat &w_ref, const arma::cx_mat &v_ref);

    // Convex majorant of the cross-gain term Tr(W Q^H V Q): the convex
    // squared-norm term is kept and the two concave ones are replaced by
    // their tangents at (w_ref, v_ref). Equals the true trace at the
    // reference point.
    double trace_upper_bound(const arma::cx_mat &w, const arma::cx_mat &v, const arma::cx_mat &q,
                             const arma::cx_mat &w_ref, const arma::cx_mat &v_ref);

    // Relaxed max-min design at a fixed phase configuration: lifted covariance
    // matrices in place of beamforming vectors, linear gain and cross-leakage
    // constraints, shared power budget.
    struct FixedPhaseSdr
    {
        std::vector<arma::cx_mat> beam_mats;
        double min_gain = 0.0;
    };

    FixedPhaseSdr solve_fixed_phase_sdr(const std::vector<arma::cx_mat> &qs, const arma::cx_vec &v,
                                        double p_max, double eps, const ConicTolerances &tol = {});

    // Lossless rank-one recovery from lifted covariances: for the dominant
    // eigenvector u of v_mat,
    //   w_k = (u^H Q_k W_k Q_k^H u)^{-1/2} W_k Q_k^H u,
    // which preserves every beam gain exactly, never increases cross leakage,
    // and never increases total power. Requires v_mat to be rank one within
    // tolerance (dominant eigenvalue >= (1 - 1e-6) trace); refuses otherwise.
    Beamformer extract_rank_one(const std::vector<arma::cx_mat> &beam_mats,
                                const arma::cx_mat &v_mat, const std::vector<arma::cx_mat> &qs);

    struct SsSolution
    {
        Beamformer beams;
        PhaseConfig phase;
        double min_gain = 0.0; // min over targets of the beam gain
        arma::vec gains;       // per-target beam gain
        arma::vec leakages;    // per beam, total power leaked onto the other targets
        bool converged = false;
        std::vector<PenaltyTraceRow> trace;
    };

    // Simultaneous multi-beam design: maximize the minimum per-target beam
    // gain over beamformers and a shared unit-modulus phase configuration,
    // keeping each beam's total cross leakage at or below eps. Alternates
    // convex subproblems built from the trace bounds above with the same
    // penalty schedule as the time-division solver; a single target delegates
    // to the time-division design (no cross leakage exists).
    SsSolution solve_ss(const SceneChannels &scene, double p_max, double eps,
                        const PenaltyConfig &config);

    void write_ss_solution(const SsSolution &sol, const std::string &path);

} // namespace irsense
