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
#include "td_solver.hpp"

namespace irsense
{

    // Dwell timing of one sensing slot: N_p pulses at repetition interval
    // delta followed by a scheduling window t_w.
    struct TimingConfig
    {
        double delta = 1e-4;  // pulse repetition interval [s]
        arma::uword n_p = 20; // pulses per dwell
        double t_w = 8e-3;    // scheduling window per slot [s]

        void validate() const;
    };

    // Revisit rate when the targets are split into l_count time slots:
    // 1 / (l_count * (delta * n_p + t_w)).
    double sensing_frequency(const TimingConfig &timing, arma::uword l_count);

    // Binary target-to-slot assignment, one slot per target.
    struct Grouping
    {
        arma::umat assign; // K x L, entries 0/1, each row sums to one

        arma::uword k() const { return assign.n_rows; }
        arma::uword l_count() const { return assign.n_cols; }
        arma::uword group_of(arma::uword k) const;
        std::vector<arma::uword> members(arma::uword l) const;
        void validate() const;
    };

    // Per-row argmax rounding of a fractional assignment; ties break towards
    // the lowest slot index.
    Grouping round_grouping(const arma::mat &c);

    // Affine majorant c - 2 c c_ref + c_ref^2 of the binarity defect
    // c (1 - c), tangent at c_ref.
    double binary_penalty_term(double c, double c_ref);

    // Encoding of the product couplings W~ = c W and W^ = c' W~ inside the
    // convex relaxation. lifted_matrices carries one Hermitian variable per
    // (beam, observer, slot) triple with the full two-sided matrix caps;
    // scalar_shadow replaces each observer copy by the scalar it contributes
    // to the leakage row, bounded by the same caps conjugated along the
    // observer channel. Both encodings force identical solutions once the
    // assignment variables are binary; the shadow form is a relaxation in
    // between and keeps the row count independent of the matrix dimension.
    enum class BigMMode
    {
        lifted_matrices,
        scalar_shadow
    };

    // Variable handles for the lifted product encoding: slot copies
    // W~_{k,l}, observer copies W^_{k,k',l}, and assignment scalars c_{k,l}.
    struct BigMBlock
    {
        double p_max = 0.0;
        arma::uword m = 0;
        arma::uword k_count = 0;
        arma::uword l_count = 0;
        std::vector<arma::uword> w_tilde; // [k * L + l]
        std::vector<arma::uword> w_hat;   // [(k * K + kp) * L + l], empty slots for kp == k
        std::vector<arma::uword> c;       // [k * L + l]

        arma::uword tilde_id(arma::uword k, arma::uword l) const;
        arma::uword hat_id(arma::uword k, arma::uword kp, arma::uword l) const;
        arma::uword c_id(arma::uword k, arma::uword l) const;
    };

    // Adds the lifted variables and their cap constraints to a conic problem:
    //   0 <= W~_{k,l} <= c_{k,l} p_max I
    //   0 <= W^_{k,k',l} <= c_{k',l} p_max I
    //   W~_{k,l} - (1 - c_{k',l}) p_max I <= W^_{k,k',l} <= W~_{k,l}
    // At binary assignments the caps pin W~ = c W and W^ = c' W~ exactly:
    // c = 0 zeroes the slot copy, c' = 1 collapses the observer copy onto it,
    // and c' = 0 zeroes the observer copy while the lower cap goes slack.
    BigMBlock build_bigM(ConicProblem &p, arma::uword k_count, arma::uword l_count, arma::uword m,
                         double p_max);

    struct HybridConfig
    {
        // eta0/auto_eta0/e drive the outer penalty schedule; eps_inner stops
        // the inner alternation on the relative objective change; eps_rank
        // bounds the worst assignment-binarity defect c (1 - c) at exit.
        PenaltyConfig penalty;
        BigMMode bigm = BigMMode::scalar_shadow;

        void validate() const;
    };

    // One convex beam-and-assignment step at fixed per-slot phases:
    // maximize R - (1/eta) sum of binary_penalty_term over the assignment
    // entries, subject to per-target gain >= R, per-beam in-slot leakage
    // <= eps, per-slot power <= p_max, and rows of c summing to one.
    struct HybridBlock1
    {
        std::vector<arma::cx_mat> w_tilde; // [k * L + l], M x M
        std::vector<arma::cx_mat> w_hat;   // [(k * K + kp) * L + l], empty for kp == k
        arma::mat c;                       // K x L, fractional until the penalty binds
        double r = 0.0;                    // worst-target gain
        double objective = 0.0;            // r minus the true binarity penalty

        const arma::cx_mat &tilde(arma::uword k, arma::uword l) const;
        const arma::cx_mat &hat(arma::uword k, arma::uword kp, arma::uword l) const;
    };

    HybridBlock1 solve_block1(const std::vector<arma::cx_mat> &qs,
                              const std::vector<arma::cx_vec> &phases, const arma::mat &c_ref,
                              double eta, double p_max, double eps, BigMMode mode,
                              const ConicTolerances &tol = {});

    // One phase step at fixed beams and assignment: maximize R over per-slot
    // phase vectors with entry moduli at most one, gain rows linearized
    // around v_refs, leakage rows kept quadratic through the observer copies.
    // v holds the per-entry unit-modulus projection of v_relaxed; entries of
    // vanishing modulus keep the reference phase.
    struct HybridBlock2
    {
        std::vector<arma::cx_vec> v_relaxed;
        std::vector<arma::cx_vec> v;
        double r_relaxed = 0.0;
    };

    HybridBlock2 solve_block2(const std::vector<arma::cx_mat> &qs, const HybridBlock1 &step,
                              const std::vector<arma::cx_vec> &v_refs, double eps,
                              const ConicTolerances &tol = {});

    struct HybridSolution
    {
        Beamformer beams;                // M x K, column k is target k's beam in its slot
        std::vector<PhaseConfig> phases; // one unit-modulus configuration per slot
        Grouping grouping;
        double min_gain = 0.0; // min over targets of the realized beam gain
        arma::vec gains;       // per-target gain inside its slot
        arma::vec leakages;    // per beam, power leaked onto co-slotted targets
        double f_s = 0.0;      // revisit rate of the returned slot count [Hz]
        bool converged = false;
        std::vector<PenaltyTraceRow> trace; // rank_residual column carries the binarity defect

        void validate() const;
    };

    // Grouped multi-beam design over l_count time slots: beams, per-slot
    // phase configurations, and the binary assignment are optimized jointly
    // by alternating the two convex blocks inside a penalty loop that drives
    // the relaxed assignment to binary. The returned beams are re-solved per
    // slot at the final phases and assignment, so every reported gain,
    // leakage, and power is a directly evaluated feasible quantity.
    HybridSolution solve_hybrid(const SceneChannels &scene, arma::uword l_count, double p_max,
                                double eps, const TimingConfig &timing,
                                const HybridConfig &config);

    struct TradeoffPoint
    {
        double f_s = 0.0;
        double min_gain = 0.0;
        arma::uword l_count = 0;
    };

    // One solve_hybrid evaluation per requested slot count, sorted by
    // ascending revisit rate.
    std::vector<TradeoffPoint> tradeoff_curve(const SceneChannels &scene,
                                              const TimingConfig &timing,
                                              const std::vector<arma::uword> &l_values,
                                              double p_max, double eps,
                                              const HybridConfig &config);

    void write_hybrid_solution(const HybridSolution &sol, const std::string &path);
    void write_tradeoff_csv(const std::string &path, const std::vector<TradeoffPoint> &points);

} // namespace irsense
