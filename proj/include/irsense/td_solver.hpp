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
#include <string>
#include <vector>

#include <armadillo>

#include "array_channel.hpp"
#include "common.hpp"
#include "conic.hpp"

namespace irsense
{

    // Two-layer penalty loop parameters: the outer layer shrinks the penalty
    // coefficient eta by the factor e until the rank residual drops below
    // eps_rank; the inner layer runs convex iterations at fixed eta until the
    // relative objective change falls below eps_inner.
    struct PenaltyConfig
    {
        double eta0 = 100.0;
        bool auto_eta0 = true; // pick eta0 so the penalty starts near 1% of the objective
        double e = 0.5;
        double eps_inner = 1e-4;
        double eps_rank = 1e-6;
        arma::uword max_inner = 20;
        arma::uword max_outer = 25;
        std::uint64_t seed = 1;
        std::string trace_path; // empty disables the per-iteration CSV dump
        ConicTolerances conic;

        void validate() const;
    };

    struct PenaltyTraceRow
    {
        arma::uword outer = 0;
        arma::uword inner = 0;
        double eta = 0.0;
        double objective = 0.0;
        double rank_residual = 0.0;
        bool degenerate_top = false;
    };

    void write_penalty_trace(const std::string &path, const std::vector<PenaltyTraceRow> &rows);

    // Affine minorant of the spectral norm around v_ref, kept in the exact
    // printed form value(V) = Tr(u u^H (V - v_ref)) - ||v_ref||_2 with u the
    // top eigenvector of v_ref. degenerate_top marks a (near-)tied largest
    // eigenvalue; the eigenvector returned by the factorization is then used
    // as the deterministic tie-break.
    struct SpectralLinearization
    {
        arma::cx_mat gradient; // u u^H
        double offset = 0.0;
        bool degenerate_top = false;

        double value(const arma::cx_mat &v) const
        {
            return arma::trace(arma::real(gradient * v)) + offset;
        }
    };

    SpectralLinearization linearize_spectral_norm(const arma::cx_mat &v_ref);

    // Tr(V) - ||V||_2: zero exactly on the rank-one PSD matrices.
    double rank_penalty(const arma::cx_mat &v);

    // w = sqrt(p_max) * Q^H v / ||Q^H v||, the gain-optimal single-target
    // beamformer for a fixed phase configuration.
    Beamformer mrt_beamformer(const PhaseConfig &v, const arma::cx_mat &q, double p_max);

    struct TdPhaseResult
    {
        PhaseConfig phases;
        arma::cx_mat v_matrix; // final lifted matrix before extraction
        double channel_gain = 0.0;
        double rank_residual = 0.0;
        bool converged = false;
        std::vector<PenaltyTraceRow> trace;
    };

    // Phase-only design for one target: maximize ||Q^H v||^2 over unit-modulus
    // v through the lifted unit-diagonal PSD program with a spectral-norm
    // penalty driving the solution to rank one.
    TdPhaseResult solve_td_phase(const arma::cx_mat &q, const PenaltyConfig &config);

    // Upper bound from the same program without the rank restriction.
    double solve_td_sdr_bound(const arma::cx_mat &q, const ConicTolerances &tol = {});

    struct TdTargetResult
    {
        TdPhaseResult phase;
        Beamformer beamformer;
        double gain = 0.0;
    };

    // Per-target independent designs: each target gets its own time slot,
    // phase configuration, and full-power beamformer.
    std::vector<TdTargetResult> td_scheme(const SceneChannels &scene, double p_max,
                                          const PenaltyConfig &config);

} // namespace irsense
