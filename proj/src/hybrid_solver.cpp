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

#include "irsense/hybrid_solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "irsense/ss_solver.hpp"

namespace irsense
{

    namespace
    {

        const double kInf = std::numeric_limits<double>::infinity();

        double binarity_sum(const arma::mat &c)
        {
            double s = 0.0;
            for (arma::uword i = 0; i < c.n_elem; i++)
                s += std::max(0.0, c(i) * (1.0 - c(i)));
            return s;
        }

        double binarity_max(const arma::mat &c)
        {
            double worst = 0.0;
            for (arma::uword i = 0; i < c.n_elem; i++)
                worst = std::max(worst, c(i) * (1.0 - c(i)));
            return worst;
        }

        // Per-slot observer channels h_{k,l} = Q_k^H v_l and their energies
        struct SlotChannels
        {
            arma::uword k_count = 0;
            arma::uword l_count = 0;
            std::vector<arma::cx_vec> h;
            std::vector<double> h2;

            const arma::cx_vec &at(arma::uword k, arma::uword l) const
            {
                return h[k * l_count + l];
            }
            double energy(arma::uword k, arma::uword l) const { return h2[k * l_count + l]; }
        };

        SlotChannels slot_channels(const std::vector<arma::cx_mat> &qs,
                                   const std::vector<arma::cx_vec> &phases)
        {
            SlotChannels sc;
            sc.k_count = qs.size();
            sc.l_count = phases.size();
            sc.h.resize(sc.k_count * sc.l_count);
            sc.h2.resize(sc.k_count * sc.l_count);
            for (arma::uword k = 0; k < sc.k_count; k++)
                for (arma::uword l = 0; l < sc.l_count; l++)
                {
                    arma::cx_vec h = qs[k].t() * phases[l];
                    sc.h[k * sc.l_count + l] = h;
                    sc.h2[k * sc.l_count + l] = std::real(arma::cdot(h, h));
                }
            return sc;
        }

        void check_block_inputs(const std::vector<arma::cx_mat> &qs,
                                const std::vector<arma::cx_vec> &phases, double p_max, double eps,
                                const char *who)
        {
            if (qs.empty())
                raise(errc::invalid_argument, std::string(who) + ": no targets");
            const arma::uword n = qs[0].n_rows, m = qs[0].n_cols;
            if (n == 0 || m == 0)
                raise(errc::dimension_mismatch, std::string(who) + ": empty channel");
            for (const auto &q : qs)
                if (q.n_rows != n || q.n_cols != m)
                    raise(errc::dimension_mismatch, std::string(who) + ": channel dimension mismatch");
            if (phases.empty())
                raise(errc::invalid_argument, std::string(who) + ": no slots");
            for (const auto &v : phases)
                if (v.n_elem != n)
                    raise(errc::dimension_mismatch, std::string(who) + ": phase length mismatch");
            if (!(p_max > 0.0) || !std::isfinite(p_max))
                raise(errc::invalid_argument, std::string(who) + ": power budget must be positive");
            if (!(eps > 0.0))
                raise(errc::invalid_argument, std::string(who) + ": leakage cap must be positive");
        }

        // True when the cap can never bind for beam k: every observer scalar
        // is at most p_max ||h||^2 by the power row, so a larger cap row
        // would only damage the scaling of the conic right-hand side
        bool leak_never_binds(const SlotChannels &sc, arma::uword k, double p_max, double eps)
        {
            if (!std::isfinite(eps))
                return true;
            double bound = 0.0;
            for (arma::uword kp = 0; kp < sc.k_count; kp++)
            {
                if (kp == k)
                    continue;
                for (arma::uword l = 0; l < sc.l_count; l++)
                    bound += p_max * sc.energy(kp, l);
            }
            return !(eps < bound);
        }

        nlohmann::json cx_cols_json(const arma::cx_mat &m)
        {
            nlohmann::json cols = nlohmann::json::array();
            for (arma::uword k = 0; k < m.n_cols; k++)
            {
                nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
                for (arma::uword i = 0; i < m.n_rows; i++)
                {
                    re.push_back(m(i, k).real());
                    im.push_back(m(i, k).imag());
                }
                cols.push_back({{"re", re}, {"im", im}});
            }
            return cols;
        }

    } // namespace

    void TimingConfig::validate() const
    {
        if (!(delta > 0.0) || !std::isfinite(delta))
            raise(errc::invalid_argument, "TimingConfig: pulse interval must be positive");
        if (n_p == 0)
            raise(errc::invalid_argument, "TimingConfig: need at least one pulse per dwell");
        if (!(t_w > 0.0) || !std::isfinite(t_w))
            raise(errc::invalid_argument, "TimingConfig: scheduling window must be positive");
    }

    double sensing_frequency(const TimingConfig &timing, arma::uword l_count)
    {
        timing.validate();
        if (l_count == 0)
            raise(errc::invalid_argument, "sensing_frequency: need at least one slot");
        return 1.0 / (double(l_count) * (timing.delta * double(timing.n_p) + timing.t_w));
    }

    arma::uword Grouping::group_of(arma::uword k) const
    {
        if (k >= assign.n_rows)
            raise(errc::invalid_argument, "Grouping: target index out of range");
        for (arma::uword l = 0; l < assign.n_cols; l++)
            if (assign(k, l) == 1)
                return l;
        raise(errc::invalid_argument, "Grouping: target has no slot");
    }

    std::vector<arma::uword> Grouping::members(arma::uword l) const
    {
        if (l >= assign.n_cols)
            raise(errc::invalid_argument, "Grouping: slot index out of range");
        std::vector<arma::uword> out;
        for (arma::uword k = 0; k < assign.n_rows; k++)
            if (assign(k, l) == 1)
                out.push_back(k);
        return out;
    }

    void Grouping::validate() const
    {
        if (assign.n_rows == 0 || assign.n_cols == 0)
            raise(errc::invalid_argument, "Grouping: empty assignment");
        for (arma::uword k = 0; k < assign.n_rows; k++)
        {
            arma::uword row_sum = 0;
            for (arma::uword l = 0; l < assign.n_cols; l++)
            {
                if (assign(k, l) > 1)
                    raise(errc::invalid_argument, "Grouping: entries must be 0 or 1");
                row_sum += assign(k, l);
            }
            if (row_sum != 1)
                raise(errc::invalid_argument, "Grouping: each target needs exactly one slot");
        }
    }

    Grouping round_grouping(const arma::mat &c)
    {
        if (c.n_rows == 0 || c.n_cols == 0)
            raise(errc::invalid_argument, "round_grouping: empty assignment");
        if (!c.is_finite())
            raise(errc::invalid_argument, "round_grouping: assignment has non-finite entries");
        Grouping g;
        g.assign.zeros(c.n_rows, c.n_cols);
        for (arma::uword k = 0; k < c.n_rows; k++)
            g.assign(k, c.row(k).index_max()) = 1;
        return g;
    }

    double binary_penalty_term(double c, double c_ref)
    {
        if (!std::isfinite(c) || !std::isfinite(c_ref) || c_ref < 0.0 || c_ref > 1.0)
            raise(errc::invalid_argument, "binary_penalty_term: reference must lie in [0, 1]");
        return c - 2.0 * c * c_ref + c_ref * c_ref;
    }

    arma::uword BigMBlock::tilde_id(arma::uword k, arma::uword l) const
    {
        if (k >= k_count || l >= l_count)
            raise(errc::invalid_argument, "BigMBlock: index out of range");
        return w_tilde[k * l_count + l];
    }

    arma::uword BigMBlock::hat_id(arma::uword k, arma::uword kp, arma::uword l) const
    {
        if (k >= k_count || kp >= k_count || l >= l_count || kp == k)
            raise(errc::invalid_argument, "BigMBlock: invalid observer pair");
        return w_hat[(k * k_count + kp) * l_count + l];
    }

    arma::uword BigMBlock::c_id(arma::uword k, arma::uword l) const
    {
        if (k >= k_count || l >= l_count)
            raise(errc::invalid_argument, "BigMBlock: index out of range");
        return c[k * l_count + l];
    }

    BigMBlock build_bigM(ConicProblem &p, arma::uword k_count, arma::uword l_count, arma::uword m,
                         double p_max)
    {
        if (k_count == 0 || l_count == 0 || m == 0)
            raise(errc::invalid_argument, "build_bigM: empty dimensions");
        if (!(p_max > 0.0) || !std::isfinite(p_max))
            raise(errc::invalid_argument, "build_bigM: power bound must be positive");

        BigMBlock b;
        b.p_max = p_max;
        b.m = m;
        b.k_count = k_count;
        b.l_count = l_count;
        b.w_tilde.resize(k_count * l_count);
        b.w_hat.assign(k_count * k_count * l_count, arma::uword(-1));
        b.c.resize(k_count * l_count);

        for (arma::uword k = 0; k < k_count; k++)
            for (arma::uword l = 0; l < l_count; l++)
            {
                b.w_tilde[k * l_count + l] = p.add_psd_var(m);
                b.c[k * l_count + l] = p.add_scalar_var(0.0, 1.0);
            }
        for (arma::uword k = 0; k < k_count; k++)
            for (arma::uword kp = 0; kp < k_count; kp++)
            {
                if (kp == k)
                    continue;
                for (arma::uword l = 0; l < l_count; l++)
                    b.w_hat[(k * k_count + kp) * l_count + l] = p.add_psd_var(m);
            }

        const std::vector<arma::cx_mat> basis = hermitian_basis(m);
        const arma::uword m2 = m * m;

        // X + slack = c p_max I, elementwise over the Hermitian basis; the
        // identity meets only the m diagonal elements of the basis
        auto cap_below_scaled_identity = [&](arma::uword x_id, arma::uword c_id)
        {
            arma::uword s_id = p.add_psd_var(m);
            for (arma::uword t = 0; t < m2; t++)
            {
                arma::uword r = p.add_row(ConicProblem::RowSense::eq, 0.0);
                p.row_trace(r, x_id, basis[t]);
                p.row_trace(r, s_id, basis[t]);
                double diag = std::real(arma::trace(basis[t]));
                if (diag != 0.0)
                    p.row_scalar(r, c_id, -p_max * diag);
            }
        };

        for (arma::uword k = 0; k < k_count; k++)
            for (arma::uword l = 0; l < l_count; l++)
                cap_below_scaled_identity(b.tilde_id(k, l), b.c_id(k, l));

        for (arma::uword k = 0; k < k_count; k++)
            for (arma::uword kp = 0; kp < k_count; kp++)
            {
                if (kp == k)
                    continue;
                for (arma::uword l = 0; l < l_count; l++)
                {
                    arma::uword hat = b.hat_id(k, kp, l);
                    arma::uword tilde = b.tilde_id(k, l);
                    arma::uword c_obs = b.c_id(kp, l);
                    cap_below_scaled_identity(hat, c_obs);
                    // hat + slack = tilde
                    arma::uword s_up = p.add_psd_var(m);
                    for (arma::uword t = 0; t < m2; t++)
                    {
                        arma::uword r = p.add_row(ConicProblem::RowSense::eq, 0.0);
                        p.row_trace(r, hat, basis[t]);
                        p.row_trace(r, s_up, basis[t]);
                        p.row_trace(r, tilde, arma::cx_mat(-basis[t]));
                    }
                    // hat - tilde - slack + (1 - c') p_max I = 0
                    arma::uword s_lo = p.add_psd_var(m);
                    for (arma::uword t = 0; t < m2; t++)
                    {
                        double diag = std::real(arma::trace(basis[t]));
                        arma::uword r = p.add_row(ConicProblem::RowSense::eq, -p_max * diag);
                        p.row_trace(r, hat, basis[t]);
                        p.row_trace(r, tilde, arma::cx_mat(-basis[t]));
                        p.row_trace(r, s_lo, arma::cx_mat(-basis[t]));
                        if (diag != 0.0)
                            p.row_scalar(r, c_obs, -p_max * diag);
                    }
                }
            }

        return b;
    }

    void HybridConfig::validate() const
    {
        penalty.validate();
    }

    const arma::cx_mat &HybridBlock1::tilde(arma::uword k, arma::uword l) const
    {
        if (k >= c.n_rows || l >= c.n_cols)
            raise(errc::invalid_argument, "HybridBlock1: index out of range");
        return w_tilde[k * c.n_cols + l];
    }

    const arma::cx_mat &HybridBlock1::hat(arma::uword k, arma::uword kp, arma::uword l) const
    {
        if (k >= c.n_rows || kp >= c.n_rows || l >= c.n_cols || kp == k)
            raise(errc::invalid_argument, "HybridBlock1: invalid observer pair");
        return w_hat[(k * c.n_rows + kp) * c.n_cols + l];
    }

    HybridBlock1 solve_block1(const std::vector<arma::cx_mat> &qs,
                              const std::vector<arma::cx_vec> &phases, const arma::mat &c_ref,
                              double eta, double p_max, double eps, BigMMode mode,
                              const ConicTolerances &tol)
    {
        check_block_inputs(qs, phases, p_max, eps, "solve_block1");
        const arma::uword k_count = qs.size();
        const arma::uword l_count = phases.size();
        const arma::uword m = qs[0].n_cols;
        if (c_ref.n_rows != k_count || c_ref.n_cols != l_count)
            raise(errc::dimension_mismatch, "solve_block1: reference assignment shape mismatch");
        for (arma::uword i = 0; i < c_ref.n_elem; i++)
            if (!std::isfinite(c_ref(i)) || c_ref(i) < -1e-9 || c_ref(i) > 1.0 + 1e-9)
                raise(errc::invalid_argument, "solve_block1: reference assignment outside [0, 1]");
        if (!(eta > 0.0))
            raise(errc::invalid_argument, "solve_block1: penalty coefficient must be positive");

        const SlotChannels sc = slot_channels(qs, phases);
        std::vector<bool> leak_active(k_count);
        bool any_leak = false;
        for (arma::uword k = 0; k < k_count; k++)
        {
            leak_active[k] = k_count >= 2 && !leak_never_binds(sc, k, p_max, eps);
            any_leak = any_leak || leak_active[k];
        }

        ConicProblem p;
        p.set_maximize(true);

        std::vector<arma::uword> tilde_ids, c_ids, hat_ids, theta_ids;
        BigMBlock lifted;
        if (mode == BigMMode::lifted_matrices)
        {
            lifted = build_bigM(p, k_count, l_count, m, p_max);
            tilde_ids = lifted.w_tilde;
            c_ids = lifted.c;
        }
        else
        {
            tilde_ids.resize(k_count * l_count);
            c_ids.resize(k_count * l_count);
            for (arma::uword k = 0; k < k_count; k++)
                for (arma::uword l = 0; l < l_count; l++)
                {
                    tilde_ids[k * l_count + l] = p.add_psd_var(m);
                    c_ids[k * l_count + l] = p.add_scalar_var(0.0, 1.0);
                }
            theta_ids.assign(k_count * k_count * l_count, arma::uword(-1));
        }
        arma::uword r_id = p.add_scalar_var(0.0, kInf);

        p.objective_scalar(r_id, 1.0);
        if (std::isfinite(eta))
        {
            double shift = 0.0;
            for (arma::uword k = 0; k < k_count; k++)
                for (arma::uword l = 0; l < l_count; l++)
                {
                    double cr = std::clamp(c_ref(k, l), 0.0, 1.0);
                    p.objective_scalar(c_ids[k * l_count + l], -(1.0 - 2.0 * cr) / eta);
                    shift -= cr * cr / eta;
                }
            p.objective_constant(shift);
        }

        const arma::cx_mat eye_m = arma::eye<arma::cx_mat>(m, m);
        for (arma::uword k = 0; k < k_count; k++)
        {
            arma::uword r = p.add_row(ConicProblem::RowSense::eq, 1.0);
            for (arma::uword l = 0; l < l_count; l++)
                p.row_scalar(r, c_ids[k * l_count + l], 1.0);
        }
        for (arma::uword k = 0; k < k_count; k++)
        {
            arma::uword r = p.add_row(ConicProblem::RowSense::ge, 0.0);
            for (arma::uword l = 0; l < l_count; l++)
            {
                const arma::cx_vec &h = sc.at(k, l);
                p.row_trace(r, tilde_ids[k * l_count + l], arma::cx_mat(h * h.t()));
            }
            p.row_scalar(r, r_id, -1.0);
        }
        for (arma::uword l = 0; l < l_count; l++)
        {
            arma::uword r = p.add_row(ConicProblem::RowSense::le, p_max);
            for (arma::uword k = 0; k < k_count; k++)
                p.row_trace(r, tilde_ids[k * l_count + l], eye_m);
        }

        if (mode == BigMMode::scalar_shadow)
        {
            // Slot-copy pinches implied by the matrix caps: the trace row
            // zeroes the copy at c = 0, the directional row caps its gain
            for (arma::uword k = 0; k < k_count; k++)
                for (arma::uword l = 0; l < l_count; l++)
                {
                    arma::uword tr = p.add_row(ConicProblem::RowSense::le, 0.0);
                    p.row_trace(tr, tilde_ids[k * l_count + l], eye_m);
                    p.row_scalar(tr, c_ids[k * l_count + l], -p_max * double(m));
                    arma::uword dr = p.add_row(ConicProblem::RowSense::le, 0.0);
                    const arma::cx_vec &h = sc.at(k, l);
                    p.row_trace(dr, tilde_ids[k * l_count + l], arma::cx_mat(h * h.t()));
                    p.row_scalar(dr, c_ids[k * l_count + l], -p_max * sc.energy(k, l));
                }
            // Observer scalars theta >= h'^H W~ h' - (1 - c') p_max ||h'||^2
            // and theta <= min(c' p_max ||h'||^2, h'^H W~ h'): the matrix caps
            // conjugated along the observer channel. Binary assignments pin
            // theta to the exact observer leakage of the slot copy.
            for (arma::uword k = 0; k < k_count; k++)
            {
                if (!leak_active[k])
                    continue;
                for (arma::uword kp = 0; kp < k_count; kp++)
                {
                    if (kp == k)
                        continue;
                    for (arma::uword l = 0; l < l_count; l++)
                    {
                        const arma::cx_vec &h = sc.at(kp, l);
                        const double beta = p_max * sc.energy(kp, l);
                        const arma::cx_mat a(h * h.t());
                        arma::uword tilde = tilde_ids[k * l_count + l];
                        arma::uword c_own = c_ids[k * l_count + l];
                        arma::uword c_obs = c_ids[kp * l_count + l];
                        arma::uword th = p.add_scalar_var(0.0, kInf);
                        theta_ids[(k * k_count + kp) * l_count + l] = th;

                        arma::uword own = p.add_row(ConicProblem::RowSense::le, 0.0);
                        p.row_trace(own, tilde, a);
                        p.row_scalar(own, c_own, -beta);

                        arma::uword up_c = p.add_row(ConicProblem::RowSense::le, 0.0);
                        p.row_scalar(up_c, th, 1.0);
                        p.row_scalar(up_c, c_obs, -beta);

                        arma::uword up_w = p.add_row(ConicProblem::RowSense::le, 0.0);
                        p.row_scalar(up_w, th, 1.0);
                        p.row_trace(up_w, tilde, arma::cx_mat(-a));

                        arma::uword lo = p.add_row(ConicProblem::RowSense::ge, -beta);
                        p.row_scalar(lo, th, 1.0);
                        p.row_trace(lo, tilde, arma::cx_mat(-a));
                        p.row_scalar(lo, c_obs, -beta);
                    }
                }
            }
            for (arma::uword k = 0; k < k_count; k++)
            {
                if (!leak_active[k])
                    continue;
                arma::uword r = p.add_row(ConicProblem::RowSense::le, eps);
                for (arma::uword kp = 0; kp < k_count; kp++)
                {
                    if (kp == k)
                        continue;
                    for (arma::uword l = 0; l < l_count; l++)
                        p.row_scalar(r, theta_ids[(k * k_count + kp) * l_count + l], 1.0);
                }
            }
        }
        else if (any_leak)
        {
            for (arma::uword k = 0; k < k_count; k++)
            {
                if (!leak_active[k])
                    continue;
                arma::uword r = p.add_row(ConicProblem::RowSense::le, eps);
                for (arma::uword kp = 0; kp < k_count; kp++)
                {
                    if (kp == k)
                        continue;
                    for (arma::uword l = 0; l < l_count; l++)
                    {
                        const arma::cx_vec &h = sc.at(kp, l);
                        p.row_trace(r, lifted.hat_id(k, kp, l), arma::cx_mat(h * h.t()));
                    }
                }
            }
        }

        ConicSolution sol = solve(p, tol);
        if (!sol.usable())
            raise(errc::solver_failure, "solve_block1: conic subproblem failed");

        HybridBlock1 out;
        out.c.set_size(k_count, l_count);
        out.w_tilde.resize(k_count * l_count);
        out.w_hat.resize(k_count * k_count * l_count);
        for (arma::uword k = 0; k < k_count; k++)
            for (arma::uword l = 0; l < l_count; l++)
            {
                out.w_tilde[k * l_count + l] = sol.psd_values[tilde_ids[k * l_count + l]];
                out.c(k, l) = std::clamp(sol.scalar_values[c_ids[k * l_count + l]], 0.0, 1.0);
            }
        for (arma::uword k = 0; k < k_count; k++)
            for (arma::uword kp = 0; kp < k_count; kp++)
            {
                if (kp == k)
                    continue;
                for (arma::uword l = 0; l < l_count; l++)
                {
                    const arma::cx_mat &tilde = out.w_tilde[k * l_count + l];
                    arma::cx_mat hat;
                    if (mode == BigMMode::lifted_matrices)
                        hat = sol.psd_values[lifted.hat_id(k, kp, l)];
                    else
                    {
                        // The observer copy the scalar stands for: the slot
                        // copy scaled so the observer leakage matches theta
                        double gamma = out.c(kp, l);
                        arma::uword th = leak_active[k]
                                             ? theta_ids[(k * k_count + kp) * l_count + l]
                                             : arma::uword(-1);
                        if (th != arma::uword(-1))
                        {
                            const arma::cx_vec &h = sc.at(kp, l);
                            double g = std::real(
                                arma::cdot(h, arma::cx_vec(tilde * h)));
                            if (g > 1e-14 * std::max(1.0, p_max * sc.energy(kp, l)))
                                gamma = std::clamp(sol.scalar_values[th] / g, 0.0, 1.0);
                        }
                        hat = gamma * tilde;
                    }
                    out.w_hat[(k * k_count + kp) * l_count + l] = hat;
                }
            }
        out.r = sol.scalar_values[r_id];
        out.objective = out.r - (std::isfinite(eta) ? binarity_sum(out.c) / eta : 0.0);
        return out;
    }

    HybridBlock2 solve_block2(const std::vector<arma::cx_mat> &qs, const HybridBlock1 &step,
                              const std::vector<arma::cx_vec> &v_refs, double eps,
                              const ConicTolerances &tol)
    {
        if (v_refs.empty())
            raise(errc::invalid_argument, "solve_block2: no slots");
        check_block_inputs(qs, v_refs, 1.0, eps, "solve_block2");
        const arma::uword k_count = qs.size();
        const arma::uword l_count = v_refs.size();
        const arma::uword n = qs[0].n_rows;
        if (step.c.n_rows != k_count || step.c.n_cols != l_count)
            raise(errc::dimension_mismatch, "solve_block2: beam step shape mismatch");

        // Aggregated observer leakage weights per beam and slot
        std::vector<arma::cx_mat> leak_w(k_count * l_count);
        std::vector<double> leak_bound(k_count, 0.0);
        for (arma::uword k = 0; k < k_count; k++)
            for (arma::uword l = 0; l < l_count; l++)
            {
                arma::cx_mat d(n, n, arma::fill::zeros);
                for (arma::uword kp = 0; kp < k_count; kp++)
                {
                    if (kp == k)
                        continue;
                    const arma::cx_mat &hat = step.hat(k, kp, l);
                    if (hat.n_elem == 0)
                        continue;
                    d += qs[kp] * hat * qs[kp].t();
                }
                d = 0.5 * (d + d.t());
                leak_w[k * l_count + l] = d;
                leak_bound[k] += double(n) * std::max(0.0, arma::trace(arma::real(d)));
            }

        ConicProblem p;
        p.set_maximize(true);
        std::vector<arma::uword> v_ids(l_count);
        for (arma::uword l = 0; l < l_count; l++)
            v_ids[l] = p.add_cvec_var(n, 1.0);
        arma::uword r_id = p.add_scalar_var(0.0, kInf);
        p.objective_scalar(r_id, 1.0);

        // sigma = x0 + x1 >= ||tail||^2 once the row x0 - x1 = 1 is added
        auto norm_epigraph = [&](arma::uword soc)
        {
            arma::uword r = p.add_row(ConicProblem::RowSense::eq, 1.0);
            p.row_soc(r, soc, 0, 1.0);
            p.row_soc(r, soc, 1, -1.0);
        };

        // Tangent of each quadratic gain at the reference: the row keeps
        // 2 Re(v_ref^H B v) - R >= v_ref^H B v_ref summed over slots
        for (arma::uword k = 0; k < k_count; k++)
        {
            double rhs = 0.0;
            std::vector<arma::cx_vec> coeffs(l_count);
            for (arma::uword l = 0; l < l_count; l++)
            {
                const arma::cx_mat &tilde = step.tilde(k, l);
                arma::cx_mat b = qs[k] * tilde * qs[k].t();
                b = 0.5 * (b + b.t());
                arma::cx_vec bv = b * v_refs[l];
                rhs += std::real(arma::cdot(v_refs[l], bv));
                coeffs[l] = 2.0 * bv;
            }
            arma::uword r = p.add_row(ConicProblem::RowSense::ge, rhs);
            for (arma::uword l = 0; l < l_count; l++)
                p.row_cvec(r, v_ids[l], coeffs[l]);
            p.row_scalar(r, r_id, -1.0);
        }

        for (arma::uword k = 0; k < k_count; k++)
        {
            const bool active = std::isfinite(eps) && k_count >= 2 && eps < leak_bound[k];
            if (!active)
                continue;
            arma::uword leak_row = p.add_row(ConicProblem::RowSense::le, eps);
            for (arma::uword l = 0; l < l_count; l++)
            {
                const arma::cx_mat &d = leak_w[k * l_count + l];
                double tr = arma::trace(arma::real(d));
                if (!(tr > 0.0))
                    continue;
                arma::vec lam;
                arma::cx_mat u;
                if (!arma::eig_sym(lam, u, d))
                    raise(errc::solver_failure, "solve_block2: leakage eigen factorization failed");
                std::vector<arma::uword> keep;
                for (arma::uword j = 0; j < lam.n_elem; j++)
                    if (lam(j) > 1e-14 * lam.max())
                        keep.push_back(j);
                if (keep.empty())
                    continue;
                arma::uword soc = p.add_soc_var(2 + 2 * keep.size());
                norm_epigraph(soc);
                for (arma::uword t = 0; t < keep.size(); t++)
                {
                    arma::cx_vec c = std::sqrt(lam(keep[t])) * u.col(keep[t]);
                    arma::uword re = p.add_row(ConicProblem::RowSense::eq, 0.0);
                    p.row_soc(re, soc, 2 + 2 * t, 1.0);
                    p.row_cvec(re, v_ids[l], arma::cx_vec(-c));
                    arma::uword im = p.add_row(ConicProblem::RowSense::eq, 0.0);
                    p.row_soc(im, soc, 3 + 2 * t, 1.0);
                    p.row_cvec(im, v_ids[l], arma::cx_vec(-arma::cx_double(0.0, 1.0) * c));
                }
                p.row_soc(leak_row, soc, 0, 1.0);
                p.row_soc(leak_row, soc, 1, 1.0);
            }
        }

        ConicSolution sol = solve(p, tol);
        if (!sol.usable())
            raise(errc::solver_failure, "solve_block2: conic subproblem failed");

        HybridBlock2 out;
        out.v_relaxed.resize(l_count);
        out.v.resize(l_count);
        for (arma::uword l = 0; l < l_count; l++)
        {
            out.v_relaxed[l] = sol.cvec_values[v_ids[l]];
            arma::cx_vec proj(n);
            for (arma::uword i = 0; i < n; i++)
            {
                arma::cx_double z = out.v_relaxed[l](i);
                double mag = std::abs(z);
                proj(i) = mag > 1e-14 ? z / mag : v_refs[l](i);
            }
            out.v[l] = proj;
        }
        out.r_relaxed = sol.scalar_values[r_id];
        return out;
    }

    void HybridSolution::validate() const
    {
        beams.validate();
        grouping.validate();
        if (phases.size() != grouping.l_count())
            raise(errc::dimension_mismatch, "HybridSolution: slot count mismatch");
        for (const auto &ph : phases)
            ph.validate();
        if (beams.w.n_cols != grouping.k())
            raise(errc::dimension_mismatch, "HybridSolution: beam count mismatch");
        if (gains.n_elem != grouping.k() || leakages.n_elem != grouping.k())
            raise(errc::dimension_mismatch, "HybridSolution: per-target vector mismatch");
        if (!(f_s > 0.0))
            raise(errc::invalid_argument, "HybridSolution: revisit rate must be positive");
    }

    HybridSolution solve_hybrid(const SceneChannels &scene, arma::uword l_count, double p_max,
                                double eps, const TimingConfig &timing, const HybridConfig &config)
    {
        scene.validate();
        timing.validate();
        config.validate();
        const arma::uword k_count = scene.k();
        const arma::uword n = scene.geom.n();
        if (l_count == 0 || l_count > k_count)
            raise(errc::invalid_argument, "solve_hybrid: slot count must lie in [1, targets]");
        if (!(p_max > 0.0) || !std::isfinite(p_max))
            raise(errc::invalid_argument, "solve_hybrid: power budget must be positive");
        if (!(eps > 0.0))
            raise(errc::invalid_argument, "solve_hybrid: leakage cap must be positive");

        std::vector<arma::cx_mat> qs(k_count);
        for (arma::uword k = 0; k < k_count; k++)
            qs[k] = effective_channel(scene.geom, scene.targets[k], scene.g_bs_irs);

        const PenaltyConfig &pen = config.penalty;
        rng_stream rng(derive_seed(pen.seed, 0x4859ULL));
        std::vector<arma::cx_vec> v(l_count);
        for (arma::uword l = 0; l < l_count; l++)
            v[l] = rng.unit_phases(n);

        // Uniform fractional start with a seeded jitter to break symmetry
        arma::mat c_ref(k_count, l_count);
        for (arma::uword k = 0; k < k_count; k++)
        {
            for (arma::uword l = 0; l < l_count; l++)
                c_ref(k, l) = std::clamp(1.0 / double(l_count) + rng.uniform(-0.01, 0.01), 0.0, 1.0);
            c_ref.row(k) /= arma::accu(c_ref.row(k));
        }

        HybridSolution res;
        double eta = pen.eta0;
        HybridBlock1 step;
        bool have_step = false;
        if (pen.auto_eta0)
        {
            step = solve_block1(qs, v, c_ref, kInf, p_max, eps, config.bigm, pen.conic);
            have_step = true;
            c_ref = step.c;
            double rho = std::max(binarity_sum(step.c), 0.25);
            eta = rho / (0.01 * std::max(step.r, 1e-12));
        }

        bool binary_ok = false;
        for (arma::uword outer = 1; outer <= pen.max_outer && !binary_ok; outer++)
        {
            double v_stage = -kInf;
            std::vector<arma::cx_vec> v_prev = v;
            for (arma::uword inner = 1; inner <= pen.max_inner; inner++)
            {
                HybridBlock1 trial = solve_block1(qs, v, c_ref, eta, p_max, eps, config.bigm,
                                                  pen.conic);
                double value = trial.objective;
                if (inner > 1 && value < v_stage - 1e-9 * (1.0 + std::abs(v_stage)))
                {
                    // The projected phase move lost objective: revert and
                    // treat the stage as settled at the previous point
                    v = v_prev;
                    break;
                }
                double delta = value - v_stage;
                step = trial;
                have_step = true;
                v_stage = value;
                c_ref = step.c;
                res.trace.push_back({outer, inner, eta, v_stage, binarity_max(step.c), false});
                if (inner > 1 && std::abs(delta) <= pen.eps_inner * std::max(1.0, std::abs(v_stage)))
                    break;
                if (inner == pen.max_inner)
                    break;
                HybridBlock2 move = solve_block2(qs, step, v, eps, pen.conic);
                v_prev = v;
                v = move.v;
            }
            if (!have_step)
                raise(errc::solver_failure, "solve_hybrid: no usable beam step");
            if (binarity_max(step.c) <= pen.eps_rank)
                binary_ok = true;
            else
                eta *= pen.e;
        }

        res.grouping = round_grouping(step.c);
        res.converged = binary_ok;
        res.f_s = sensing_frequency(timing, l_count);

        // Re-solve each slot at the final phases and assignment so that the
        // reported beams satisfy every cap by direct evaluation
        res.beams.w.set_size(qs[0].n_cols, k_count);
        res.beams.w.zeros();
        res.beams.powers.assign(k_count, 0.0);
        res.phases.resize(l_count);
        res.gains.zeros(k_count);
        res.leakages.zeros(k_count);
        for (arma::uword l = 0; l < l_count; l++)
        {
            res.phases[l] = PhaseConfig{v[l]};
            std::vector<arma::uword> members = res.grouping.members(l);
            if (members.empty())
                continue;
            std::vector<arma::cx_mat> qs_l;
            for (arma::uword k : members)
                qs_l.push_back(qs[k]);
            FixedPhaseSdr fp = solve_fixed_phase_sdr(qs_l, v[l], p_max, eps, pen.conic);
            Beamformer bf = extract_rank_one(fp.beam_mats, arma::cx_mat(v[l] * v[l].t()), qs_l);
            for (arma::uword j = 0; j < members.size(); j++)
            {
                res.beams.w.col(members[j]) = bf.w.col(j);
                res.beams.powers[members[j]] = bf.powers[j];
            }
            for (arma::uword j = 0; j < members.size(); j++)
            {
                arma::uword k = members[j];
                res.gains(k) = beam_gain(v[l], qs[k], bf.w.col(j));
                double leak = 0.0;
                for (arma::uword jp = 0; jp < members.size(); jp++)
                    if (jp != j)
                        leak += beam_gain(v[l], qs[members[jp]], bf.w.col(j));
                res.leakages(k) = leak;
            }
        }

        // The slot re-solves can carry a residual-level cap violation on badly
        // conditioned instances.  A uniform amplitude shrink restores every cap
        // without changing the beam directions.
        double shrink = 1.0;
        for (arma::uword l = 0; l < l_count; l++)
        {
            double pw = 0.0;
            for (arma::uword k : res.grouping.members(l))
                pw += res.beams.powers[k];
            if (pw > p_max)
                shrink = std::min(shrink, p_max / pw);
        }
        if (std::isfinite(eps))
            for (arma::uword k = 0; k < k_count; k++)
                if (res.leakages(k) > eps)
                    shrink = std::min(shrink, eps / res.leakages(k));
        if (shrink < 1.0)
        {
            res.beams.w *= std::sqrt(shrink);
            for (double &pw : res.beams.powers)
                pw *= shrink;
            res.gains *= shrink;
            res.leakages *= shrink;
        }
        res.min_gain = res.gains.min();

        if (!pen.trace_path.empty())
            write_penalty_trace(pen.trace_path, res.trace);
        return res;
    }

    std::vector<TradeoffPoint> tradeoff_curve(const SceneChannels &scene,
                                              const TimingConfig &timing,
                                              const std::vector<arma::uword> &l_values,
                                              double p_max, double eps, const HybridConfig &config)
    {
        if (l_values.empty())
            raise(errc::invalid_argument, "tradeoff_curve: no slot counts given");
        std::vector<TradeoffPoint> points;
        for (arma::uword l : l_values)
        {
            HybridSolution sol = solve_hybrid(scene, l, p_max, eps, timing, config);
            points.push_back({sol.f_s, sol.min_gain, l});
        }
        std::sort(points.begin(), points.end(),
                  [](const TradeoffPoint &a, const TradeoffPoint &b) { return a.f_s < b.f_s; });
        return points;
    }

    void write_hybrid_solution(const HybridSolution &sol, const std::string &path)
    {
        nlohmann::json j;
        j["min_gain"] = sol.min_gain;
        j["f_s"] = sol.f_s;
        j["gains"] = std::vector<double>(sol.gains.begin(), sol.gains.end());
        j["leakages"] = std::vector<double>(sol.leakages.begin(), sol.leakages.end());
        nlohmann::json slots = nlohmann::json::array();
        for (arma::uword k = 0; k < sol.grouping.k(); k++)
            slots.push_back(sol.grouping.group_of(k));
        j["grouping"] = slots;
        j["beams"] = cx_cols_json(sol.beams.w);
        j["powers"] = sol.beams.powers;
        nlohmann::json phases = nlohmann::json::array();
        for (const auto &ph : sol.phases)
            phases.push_back(cx_cols_json(arma::cx_mat(ph.v)));
        j["phases"] = phases;
        j["converged"] = sol.converged;
        j["trace"] = nlohmann::json::array();
        for (const auto &row : sol.trace)
            j["trace"].push_back({{"outer", row.outer},
                                  {"inner", row.inner},
                                  {"eta", row.eta},
                                  {"objective", row.objective},
                                  {"rank_residual", row.rank_residual},
                                  {"degenerate_top", row.degenerate_top}});
        std::ofstream out(path);
        if (!out)
            raise(errc::io_failure, "write_hybrid_solution: cannot open " + path);
        out << j.dump(2) << "\n";
    }

    void write_tradeoff_csv(const std::string &path, const std::vector<TradeoffPoint> &points)
    {
        std::ofstream out(path);
        if (!out)
            raise(errc::io_failure, "write_tradeoff_csv: cannot open " + path);
        out << "f_s,min_gain,l_count\n";
        char line[96];
        for (const auto &pt : points)
        {
            std::snprintf(line, sizeof(line), "%.12e,%.12e,%llu\n", pt.f_s, pt.min_gain,
                          (unsigned long long)pt.l_count);
            out << line;
        }
    }

} // namespace irsense
