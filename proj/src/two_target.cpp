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

#include "irsense/two_target.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "irsense/conic.hpp"

namespace irsense
{

    namespace
    {
        constexpr double kInf = std::numeric_limits<double>::infinity();

        // ||h_perp||^2 below this fraction of ||h_target||^2 counts as collinear
        constexpr double kCollinear = 1e-24;

        struct Round
        {
            arma::cx_vec w1, w2;
            PowerSplit split;
            double g1 = 0.0, g2 = 0.0;
            double l1 = 0.0, l2 = 0.0;
            double objective = 0.0;
        };

        arma::cx_vec beam_or_zero(const arma::cx_vec &h_target, const arma::cx_vec &h_other,
                                  double p, double eps)
        {
            if (!(p > 0.0))
                return arma::cx_vec(h_target.n_elem, arma::fill::zeros);
            return closed_form_w(h_target, h_other, p, eps).w.col(0);
        }

        Round eval_round(const arma::cx_mat &q1, const arma::cx_mat &q2, const arma::cx_vec &v,
                         double p_max, double eps)
        {
            Round r;
            arma::cx_vec h1 = q1.t() * v, h2 = q2.t() * v;
            r.split = power_split(h1, h2, p_max, eps);
            r.w1 = beam_or_zero(h1, h2, r.split.p1, eps);
            r.w2 = beam_or_zero(h2, h1, r.split.p2, eps);
            r.g1 = std::norm(arma::cdot(h1, r.w1));
            r.g2 = std::norm(arma::cdot(h2, r.w2));
            r.l1 = std::norm(arma::cdot(h2, r.w1));
            r.l2 = std::norm(arma::cdot(h1, r.w2));
            r.objective = std::min(r.g1, r.g2);
            return r;
        }

        // One convex step of the phase subproblem at fixed beams: maximize the
        // worst linearized gain plus the rank-penalty term over the
        // unit-diagonal PSD lifted matrix, with leakage cap rows where active
        arma::cx_mat phase_step(const std::vector<arma::cx_mat> &gain_mats,
                                const std::vector<arma::cx_mat> &leak_mats,
                                const std::vector<char> &leak_active, double eps,
                                const SpectralLinearization &lin, double eta,
                                const ConicTolerances &tol)
        {
            const arma::uword n = gain_mats[0].n_rows;
            ConicProblem p;
            p.set_maximize(true);
            arma::uword v_id = p.add_psd_var(n);
            arma::uword r_id = p.add_scalar_var(0.0, kInf);
            p.objective_scalar(r_id, 1.0);
            // Tr(V) is pinned at n by the diagonal rows, so the spectral
            // penalty reduces to the linearized-top term
            p.objective_trace(v_id, lin.gradient / eta);
            for (arma::uword i = 0; i < n; i++)
            {
                arma::cx_mat c(n, n, arma::fill::zeros);
                c(i, i) = 1.0;
                arma::uword r = p.add_row(ConicProblem::RowSense::eq, 1.0);
                p.row_trace(r, v_id, c);
            }
            for (const auto &d : gain_mats)
            {
                arma::uword r = p.add_row(ConicProblem::RowSense::ge, 0.0);
                p.row_trace(r, v_id, d);
                p.row_scalar(r, r_id, -1.0);
            }
            for (arma::uword k = 0; k < leak_mats.size(); k++)
                if (leak_active[k])
                {
                    arma::uword r = p.add_row(ConicProblem::RowSense::le, eps);
                    p.row_trace(r, v_id, leak_mats[k]);
                }
            ConicSolution sol = solve(p, tol);
            if (!sol.usable())
                raise(errc::solver_failure, "ao_two_target: phase subproblem failed");
            return sol.psd_values[v_id];
        }

        double phase_objective(const std::vector<arma::cx_mat> &gain_mats, const arma::cx_mat &v,
                               double eta)
        {
            double worst = kInf;
            for (const auto &d : gain_mats)
                worst = std::min(worst, arma::trace(arma::real(d * v)));
            return worst - rank_penalty(v) / eta;
        }

        // Penalty-driven phase update at fixed beams, started from the lifted
        // current phases (a feasible point of every subproblem); returns the
        // unit-modulus projection of the final top eigenvector
        arma::cx_vec update_phases(const std::vector<arma::cx_mat> &gain_mats,
                                   const std::vector<arma::cx_mat> &leak_mats,
                                   const std::vector<char> &leak_active, double eps,
                                   const arma::cx_vec &v_curr, const PenaltyConfig &config,
                                   double &rank_out)
        {
            const arma::uword n = v_curr.n_elem;
            arma::cx_mat v = v_curr * v_curr.t();

            double eta = config.eta0;
            if (config.auto_eta0)
            {
                double obj0 = phase_objective(gain_mats, v, kInf);
                double rho_ref = (n > 1) ? double(n - 1) : 1.0;
                eta = rho_ref / (0.01 * std::max(obj0, 1e-12));
            }

            bool hit_rank = false;
            for (arma::uword outer = 0; outer < config.max_outer && !hit_rank; outer++)
            {
                double f_prev = phase_objective(gain_mats, v, eta);
                for (arma::uword inner = 0; inner < config.max_inner; inner++)
                {
                    SpectralLinearization lin = linearize_spectral_norm(v);
                    arma::cx_mat v_next =
                        phase_step(gain_mats, leak_mats, leak_active, eps, lin, eta, config.conic);
                    double f = phase_objective(gain_mats, v_next, eta);
                    if (f < f_prev - 1e-7 * (1.0 + std::abs(f_prev)))
                        break; // numerical regression: keep the previous iterate
                    v = v_next;
                    bool settled = std::abs(f - f_prev) <= config.eps_inner * (1.0 + std::abs(f_prev));
                    f_prev = f;
                    if (settled)
                        break;
                }
                hit_rank = rank_penalty(v) <= config.eps_rank;
                if (!hit_rank)
                    eta *= config.e;
            }

            rank_out = rank_penalty(v);
            arma::vec ev;
            arma::cx_mat u;
            arma::eig_sym(ev, u, arma::cx_mat(0.5 * (v + v.t())));
            return unit_modulus_projection(u.col(ev.n_elem - 1));
        }
    }

    arma::cx_mat null_projector(const arma::cx_vec &h)
    {
        if (h.n_elem == 0)
            raise(errc::invalid_argument, "null_projector: empty vector");
        double n2 = std::real(arma::cdot(h, h));
        if (n2 < 1e-28)
            raise(errc::invalid_argument, "null_projector: zero vector");
        return arma::eye<arma::cx_mat>(h.n_elem, h.n_elem) - h * h.t() / n2;
    }

    TwoTargetGeometry two_target_geometry(const arma::cx_vec &h_target,
                                          const arma::cx_vec &h_other, double p, double eps)
    {
        if (!(p > 0.0))
            raise(errc::invalid_argument, "two_target_geometry: power must be positive");
        if (!(eps >= 0.0))
            raise(errc::invalid_argument, "two_target_geometry: leakage cap must be nonnegative");
        if (h_target.n_elem == 0 || h_target.n_elem != h_other.n_elem)
            raise(errc::dimension_mismatch, "two_target_geometry: channel lengths disagree");
        double nt = arma::norm(h_target, 2), no = arma::norm(h_other, 2);
        if (nt < 1e-14 || no < 1e-14)
            raise(errc::invalid_argument, "two_target_geometry: zero channel");

        TwoTargetGeometry g;
        g.h_target = h_target;
        g.h_other = h_other;
        g.projector = null_projector(h_other);
        g.h_perp = g.projector * h_target;
        arma::cx_double cross = arma::cdot(h_other, h_target);
        g.cos_psi = std::abs(cross) / (nt * no);
        arma::cx_double align = arma::cdot(h_target, g.h_perp);
        g.chi = std::abs(align) > 0.0 ? arma::cx_double(std::conj(align) / std::abs(align))
                                      : arma::cx_double(1.0, 0.0);

        double hk2 = nt * nt;
        g.matched_branch = p * std::norm(cross) <= eps * hk2;
        if (g.matched_branch)
            return g;

        double a = std::pow(arma::norm(g.h_perp, 2), 2);
        if (a <= kCollinear * hk2)
            raise(errc::infeasible,
                  "two_target_geometry: collinear channels cannot meet the leakage cap at this power");
        g.rho1 = std::sqrt(eps) / std::abs(cross);
        double t = std::abs(align);
        double disc = g.rho1 * g.rho1 * t * t - a * (g.rho1 * g.rho1 * hk2 - p);
        if (disc < 0.0)
        {
            std::fputs("two_target_geometry: discriminant clamped at the feasibility boundary\n",
                       stderr);
            disc = 0.0;
        }
        g.rho2 = std::max(0.0, (-g.rho1 * t + std::sqrt(disc)) / a);
        return g;
    }

    Beamformer closed_form_w(const arma::cx_vec &h_target, const arma::cx_vec &h_other, double p,
                             double eps)
    {
        TwoTargetGeometry g = two_target_geometry(h_target, h_other, p, eps);
        arma::cx_vec w;
        if (g.matched_branch)
            w = std::sqrt(p) / arma::norm(h_target, 2) * h_target;
        else
            w = g.rho1 * h_target + g.rho2 * g.chi * g.h_perp;
        Beamformer bf;
        bf.w = arma::cx_mat(w);
        bf.powers = {std::pow(arma::norm(w, 2), 2)};
        return bf;
    }

    double closed_form_gain(const arma::cx_vec &h_target, const arma::cx_vec &h_other, double p,
                            double eps)
    {
        if (p == 0.0)
            return 0.0;
        Beamformer bf = closed_form_w(h_target, h_other, p, eps);
        return std::norm(arma::cdot(h_target, arma::cx_vec(bf.w.col(0))));
    }

    PowerSplit power_split(const arma::cx_vec &h_1, const arma::cx_vec &h_2, double p_max,
                           double eps)
    {
        if (!(p_max > 0.0))
            raise(errc::invalid_argument, "power_split: power budget must be positive");
        auto diff = [&](double p1)
        {
            return closed_form_gain(h_1, h_2, p1, eps) - closed_form_gain(h_2, h_1, p_max - p1, eps);
        };
        double d_lo = diff(0.0), d_hi = diff(p_max);
        // a zero-gain channel leaves one side of the difference at zero for
        // every split; the equalizing split degenerates to an endpoint
        if (d_lo >= 0.0)
            return {0.0, p_max, true};
        if (d_hi <= 0.0)
            return {p_max, 0.0, true};

        double scale = std::max(std::abs(d_lo), std::abs(d_hi));
        bool monotone = true;
        double prev = d_lo;
        for (int i = 1; i <= 8 && monotone; i++)
        {
            double d = (i < 8) ? diff(p_max * double(i) / 8.0) : d_hi;
            if (d < prev - 1e-9 * scale)
                monotone = false;
            prev = d;
        }

        if (!monotone)
        {
            // golden-section search on the min-gain itself
            auto worst = [&](double p1)
            {
                return std::min(closed_form_gain(h_1, h_2, p1, eps),
                                closed_form_gain(h_2, h_1, p_max - p1, eps));
            };
            const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
            double lo = 0.0, hi = p_max;
            double x1 = hi - ratio * (hi - lo), x2 = lo + ratio * (hi - lo);
            double f1 = worst(x1), f2 = worst(x2);
            for (int it = 0; it < 200 && hi - lo > 1e-13 * p_max; it++)
            {
                if (f1 < f2)
                {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + ratio * (hi - lo);
                    f2 = worst(x2);
                }
                else
                {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - ratio * (hi - lo);
                    f1 = worst(x1);
                }
            }
            double p1 = 0.5 * (lo + hi);
            return {p1, p_max - p1, false};
        }

        double lo = 0.0, hi = p_max;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * p_max; it++)
        {
            double mid = 0.5 * (lo + hi);
            (diff(mid) < 0.0 ? lo : hi) = mid;
        }
        double p1 = 0.5 * (lo + hi);
        return {p1, p_max - p1, false};
    }

    void AoConfig::validate() const
    {
        if (max_rounds == 0)
            raise(errc::invalid_argument, "AoConfig: max_rounds must be positive");
        if (!(eps_phase > 0.0))
            raise(errc::invalid_argument, "AoConfig: eps_phase must be positive");
        penalty.validate();
    }

    SsSolution ao_two_target(const SceneChannels &scene, double p_max, double eps,
                             const AoConfig &config)
    {
        scene.validate();
        config.validate();
        if (scene.targets.size() != 2)
            raise(errc::invalid_argument, "ao_two_target: exactly two targets required");
        if (!(p_max > 0.0))
            raise(errc::invalid_argument, "ao_two_target: power budget must be positive");
        if (!(eps > 0.0))
            raise(errc::invalid_argument, "ao_two_target: leakage cap must be positive");

        const arma::uword n = scene.geom.n();
        arma::cx_mat q1 = effective_channel(scene.geom, scene.targets[0], scene.g_bs_irs);
        arma::cx_mat q2 = effective_channel(scene.geom, scene.targets[1], scene.g_bs_irs);

        arma::cx_vec v;
        if (config.v0.n_elem > 0)
        {
            if (config.v0.n_elem != n)
                raise(errc::dimension_mismatch, "ao_two_target: starting phases have wrong length");
            v = unit_modulus_projection(config.v0);
        }
        else
        {
            rng_stream rng(derive_seed(config.seed, 0x414F));
            v = rng.unit_phases(n);
        }

        SsSolution out;
        Round cur = eval_round(q1, q2, v, p_max, eps);
        out.trace.push_back({0, 0, 0.0, cur.objective, 0.0, false});
        arma::cx_mat v_mat_prev = v * v.t();

        bool converged = false;
        for (arma::uword round = 1; round <= config.max_rounds && !converged; round++)
        {
            arma::cx_vec b11 = q1 * cur.w1, b22 = q2 * cur.w2;
            arma::cx_vec b12 = q2 * cur.w1, b21 = q1 * cur.w2;
            std::vector<arma::cx_mat> gain_mats = {b11 * b11.t(), b22 * b22.t()};
            std::vector<arma::cx_mat> leak_mats = {b12 * b12.t(), b21 * b21.t()};
            // tr(E V) <= lam_max(V) tr(E) <= n tr(E) under the unit diagonal,
            // so caps beyond that bound never bind
            std::vector<char> leak_active(2);
            for (arma::uword k = 0; k < 2; k++)
                leak_active[k] = eps < double(n) * arma::trace(arma::real(leak_mats[k]));

            double rank_res = 0.0;
            arma::cx_vec v_cand =
                update_phases(gain_mats, leak_mats, leak_active, eps, v, config.penalty, rank_res);
            Round cand = eval_round(q1, q2, v_cand, p_max, eps);
            if (cand.objective <= cur.objective)
            {
                converged = true; // no improving phase update exists from here
                break;
            }
            v = v_cand;
            cur = cand;
            out.trace.push_back({round, 0, 0.0, cur.objective, rank_res, false});

            arma::cx_mat v_mat = v * v.t();
            if (arma::norm(v_mat - v_mat_prev, "fro") <=
                config.eps_phase * arma::norm(v_mat_prev, "fro"))
                converged = true;
            v_mat_prev = v_mat;
        }

        out.beams.w = arma::join_rows(cur.w1, cur.w2);
        out.beams.powers = {std::pow(arma::norm(cur.w1, 2), 2), std::pow(arma::norm(cur.w2, 2), 2)};
        out.phase.v = v;
        out.phase.kind = PhaseConfig::mode::unit_modulus;
        out.gains = {cur.g1, cur.g2};
        out.leakages = {cur.l1, cur.l2};
        out.min_gain = cur.objective;
        out.converged = converged;
        if (!config.penalty.trace_path.empty())
            write_penalty_trace(config.penalty.trace_path, out.trace);
        return out;
    }

} // namespace irsense
