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

#include "irsense/ss_solver.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace irsense
{

    namespace
    {

        const double kInf = std::numeric_limits<double>::infinity();
        const double kRt2 = std::sqrt(2.0);

        void check_bound_dims(const arma::cx_mat &w, const arma::cx_mat &v, const arma::cx_mat &q,
                              const arma::cx_mat &w_ref, const arma::cx_mat &v_ref, const char *who)
        {
            const arma::uword n = q.n_rows, m = q.n_cols;
            if (n == 0 || m == 0)
                raise(errc::dimension_mismatch, std::string(who) + ": empty channel");
            if (w.n_rows != m || w.n_cols != m || w_ref.n_rows != m || w_ref.n_cols != m)
                raise(errc::dimension_mismatch, std::string(who) + ": beam matrix dimension mismatch");
            if (v.n_rows != n || v.n_cols != n || v_ref.n_rows != n || v_ref.n_cols != n)
                raise(errc::dimension_mismatch, std::string(who) + ": phase matrix dimension mismatch");
        }

        double fro2(const arma::cx_mat &m)
        {
            double f = arma::norm(m, "fro");
            return f * f;
        }

        double re_inner(const arma::cx_mat &a, const arma::cx_mat &b)
        {
            return std::real(arma::trace(a.t() * b));
        }

        struct SsStep
        {
            std::vector<arma::cx_mat> w;
            arma::cx_mat v;
            double r = 0.0;
            bool infeasible = false;
        };

        // True when no feasible point can reach the cap: any leakage term obeys
        // tr(W S) <= tr(W) lam_max(S) <= p_max ||Q||_2^2 lam_max(V), and a huge
        // cap row would only damage the scaling of the conic right-hand side
        bool leakage_never_binds(const std::vector<arma::cx_mat> &qs, double p_max, double eps,
                                 double v_peak)
        {
            double sum = 0.0;
            for (const auto &q : qs)
                sum += std::pow(arma::norm(q, 2), 2);
            return !(eps < p_max * v_peak * sum);
        }

        // One convex step of the joint design: epigraphs turn every squared
        // Frobenius term of the trace bounds into a cone coordinate, and
        // auxiliary compressions S_j = Q_j^H V Q_j share the dense linking
        // rows across all gain and leakage constraints.
        SsStep ss_step(const std::vector<arma::cx_mat> &qs,
                       const std::vector<arma::cx_mat> &w_ref, const arma::cx_mat &v_ref,
                       const SpectralLinearization &lin, double eta, double p_max, double eps,
                       const ConicTolerances &tol)
        {
            const arma::uword k_count = qs.size();
            const arma::uword n = qs[0].n_rows;
            const arma::uword m = qs[0].n_cols;
            const arma::uword m2 = m * m;
            const std::vector<arma::cx_mat> basis = hermitian_basis(m);
            // lam_max(V) <= tr(V) = n under the unit-diagonal constraint
            const bool leak_rows = std::isfinite(eps) && k_count >= 2 &&
                                   !leakage_never_binds(qs, p_max, eps, double(n));

            std::vector<arma::cx_mat> s_ref(k_count);
            for (arma::uword k = 0; k < k_count; k++)
            {
                arma::cx_mat s = qs[k].t() * v_ref * qs[k];
                s_ref[k] = 0.5 * (s + s.t());
            }

            ConicProblem p;
            arma::uword v_id = p.add_psd_var(n);
            std::vector<arma::uword> w_id(k_count), s_id(k_count);
            for (arma::uword k = 0; k < k_count; k++)
                w_id[k] = p.add_psd_var(m);
            for (arma::uword k = 0; k < k_count; k++)
                s_id[k] = p.add_psd_var(m);
            arma::uword r_id = p.add_scalar_var(0.0, kInf);

            p.set_maximize(true);
            p.objective_scalar(r_id, 1.0);
            p.objective_trace(
                v_id, arma::cx_mat(-(1.0 / eta) * (arma::eye<arma::cx_mat>(n, n) - lin.gradient)));

            for (arma::uword i = 0; i < n; i++)
            {
                arma::cx_mat pin(n, n, arma::fill::zeros);
                pin(i, i) = 1.0;
                arma::uword r = p.add_row(ConicProblem::RowSense::eq, 1.0);
                p.row_trace(r, v_id, pin);
            }

            for (arma::uword j = 0; j < k_count; j++)
                for (arma::uword t = 0; t < m2; t++)
                {
                    arma::uword r = p.add_row(ConicProblem::RowSense::eq, 0.0);
                    p.row_trace(r, s_id[j], basis[t]);
                    p.row_trace(r, v_id, arma::cx_mat(-qs[j] * basis[t] * qs[j].t()));
                }

            {
                arma::uword r = p.add_row(ConicProblem::RowSense::le, p_max);
                for (arma::uword k = 0; k < k_count; k++)
                    p.row_trace(r, w_id[k], arma::cx_mat(arma::eye<arma::cx_mat>(m, m)));
            }

            // sigma = x0 + x1 >= ||tail||^2 once the row x0 - x1 = 1 is added
            auto norm_epigraph = [&](arma::uword soc)
            {
                arma::uword r = p.add_row(ConicProblem::RowSense::eq, 1.0);
                p.row_soc(r, soc, 0, 1.0);
                p.row_soc(r, soc, 1, -1.0);
            };
            auto tie_coord = [&](arma::uword soc, arma::uword slot, arma::uword psd,
                                 const arma::cx_mat &c)
            {
                arma::uword r = p.add_row(ConicProblem::RowSense::eq, 0.0);
                p.row_soc(r, soc, 2 + slot, 1.0);
                p.row_trace(r, psd, arma::cx_mat((-1.0 / kRt2) * c));
            };

            for (arma::uword k = 0; k < k_count; k++)
            {
                arma::cx_mat a = w_ref[k] + s_ref[k];
                arma::uword lb = p.add_soc_var(2 + 2 * m2);
                norm_epigraph(lb);
                for (arma::uword t = 0; t < m2; t++)
                    tie_coord(lb, t, w_id[k], basis[t]);
                for (arma::uword t = 0; t < m2; t++)
                    tie_coord(lb, m2 + t, s_id[k], basis[t]);
                arma::uword r = p.add_row(ConicProblem::RowSense::ge, 0.5 * fro2(a));
                p.row_trace(r, w_id[k], a);
                p.row_trace(r, s_id[k], a);
                p.row_soc(r, lb, 0, -1.0);
                p.row_soc(r, lb, 1, -1.0);
                p.row_scalar(r, r_id, -1.0);
            }

            if (leak_rows)
                for (arma::uword k = 0; k < k_count; k++)
                {
                    double rhs = eps;
                    std::vector<arma::uword> ubs;
                    for (arma::uword kp = 0; kp < k_count; kp++)
                    {
                        if (kp == k)
                            continue;
                        arma::uword ub = p.add_soc_var(2 + m2);
                        norm_epigraph(ub);
                        for (arma::uword t = 0; t < m2; t++)
                        {
                            arma::uword tr = p.add_row(ConicProblem::RowSense::eq, 0.0);
                            p.row_soc(tr, ub, 2 + t, 1.0);
                            p.row_trace(tr, w_id[k], arma::cx_mat((-1.0 / kRt2) * basis[t]));
                            p.row_trace(tr, s_id[kp], arma::cx_mat((-1.0 / kRt2) * basis[t]));
                        }
                        ubs.push_back(ub);
                        rhs -= 0.5 * fro2(w_ref[k]) + 0.5 * fro2(s_ref[kp]);
                    }
                    arma::uword r = p.add_row(ConicProblem::RowSense::le, rhs);
                    p.row_trace(r, w_id[k], arma::cx_mat(-double(k_count - 1) * w_ref[k]));
                    arma::uword ui = 0;
                    for (arma::uword kp = 0; kp < k_count; kp++)
                    {
                        if (kp == k)
                            continue;
                        p.row_soc(r, ubs[ui], 0, 1.0);
                        p.row_soc(r, ubs[ui], 1, 1.0);
                        p.row_trace(r, s_id[kp], arma::cx_mat(-s_ref[kp]));
                        ui++;
                    }
                }

            ConicSolution sol = solve(p, tol);
            SsStep step;
            if (sol.status == ConicStatus::infeasible)
            {
                step.infeasible = true;
                return step;
            }
            if (!sol.usable())
                raise(errc::solver_failure, "solve_ss: conic subproblem failed");
            step.w.resize(k_count);
            for (arma::uword k = 0; k < k_count; k++)
                step.w[k] = sol.psd_values[w_id[k]];
            step.v = sol.psd_values[v_id];
            step.r = sol.scalar_values[r_id];
            return step;
        }

        std::string sci(double x)
        {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.3e", x);
            return buf;
        }

        // Bisection on the leakage cap, run only when the very first convex
        // step comes back infeasible: reports the smallest cap that admits a
        // feasible step at the same reference point.
        [[noreturn]] void report_infeasible_eps(const std::vector<arma::cx_mat> &qs,
                                                const std::vector<arma::cx_mat> &w_ref,
                                                const arma::cx_mat &v_ref,
                                                const SpectralLinearization &lin, double eta,
                                                double p_max, double eps,
                                                const ConicTolerances &tol)
        {
            auto feasible_at = [&](double cap)
            { return !ss_step(qs, w_ref, v_ref, lin, eta, p_max, cap, tol).infeasible; };
            double hi = std::max(eps, 1e-12);
            bool found = false;
            for (int i = 0; i < 40 && !found; i++)
            {
                hi *= 2.0;
                found = feasible_at(hi);
            }
            if (!found)
                raise(errc::infeasible,
                      "solve_ss: first convex step infeasible at leakage cap " + sci(eps) +
                          " and no feasible cap found below " + sci(hi));
            double lo = eps;
            for (int i = 0; i < 25; i++)
            {
                double mid = 0.5 * (lo + hi);
                if (feasible_at(mid))
                    hi = mid;
                else
                    lo = mid;
            }
            raise(errc::infeasible, "solve_ss: infeasible at leakage cap " + sci(eps) +
                                        "; minimal feasible cap near " + sci(hi));
        }

        arma::vec true_gains(const std::vector<arma::cx_mat> &w, const arma::cx_mat &v,
                             const std::vector<arma::cx_mat> &qs)
        {
            arma::vec g(w.size());
            for (arma::uword k = 0; k < w.size(); k++)
                g(k) = re_inner(w[k], qs[k].t() * v * qs[k]);
            return g;
        }

        arma::vec true_leaks(const std::vector<arma::cx_mat> &w, const arma::cx_mat &v,
                             const std::vector<arma::cx_mat> &qs)
        {
            arma::vec l(w.size(), arma::fill::zeros);
            for (arma::uword k = 0; k < w.size(); k++)
                for (arma::uword kp = 0; kp < w.size(); kp++)
                    if (kp != k)
                        l(k) += re_inner(w[k], qs[kp].t() * v * qs[kp]);
            return l;
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

    double trace_lower_bound(const arma::cx_mat &w, const arma::cx_mat &v, const arma::cx_mat &q,
                             const arma::cx_mat &w_ref, const arma::cx_mat &v_ref)
    {
        check_bound_dims(w, v, q, w_ref, v_ref, "trace_lower_bound");
        arma::cx_mat s = q.t() * v * q;
        arma::cx_mat a = w_ref + q.t() * v_ref * q;
        return -0.5 * fro2(a) + re_inner(a, w + s) - 0.5 * fro2(w) - 0.5 * fro2(s);
    }

    double trace_upper_bound(const arma::cx_mat &w, const arma::cx_mat &v, const arma::cx_mat &q,
                             const arma::cx_mat &w_ref, const arma::cx_mat &v_ref)
    {
        check_bound_dims(w, v, q, w_ref, v_ref, "trace_upper_bound");
        arma::cx_mat s = q.t() * v * q;
        arma::cx_mat s_ref = q.t() * v_ref * q;
        return 0.5 * fro2(w + s) + 0.5 * fro2(w_ref) - re_inner(w_ref, w) + 0.5 * fro2(s_ref) -
               re_inner(s_ref, s);
    }

    FixedPhaseSdr solve_fixed_phase_sdr(const std::vector<arma::cx_mat> &qs, const arma::cx_vec &v,
                                        double p_max, double eps, const ConicTolerances &tol)
    {
        const arma::uword k_count = qs.size();
        if (k_count == 0)
            raise(errc::invalid_argument, "solve_fixed_phase_sdr: no targets");
        const arma::uword n = qs[0].n_rows, m = qs[0].n_cols;
        if (n == 0 || m == 0 || v.n_elem != n)
            raise(errc::dimension_mismatch, "solve_fixed_phase_sdr: channel/phase dimensions disagree");
        for (const auto &q : qs)
            if (q.n_rows != n || q.n_cols != m)
                raise(errc::dimension_mismatch, "solve_fixed_phase_sdr: unequal channel dimensions");
        if (!(p_max > 0.0) || !std::isfinite(p_max))
            raise(errc::invalid_argument, "solve_fixed_phase_sdr: power budget must be positive");
        if (!(eps > 0.0))
            raise(errc::invalid_argument, "solve_fixed_phase_sdr: leakage cap must be positive");

        std::vector<arma::cx_mat> a(k_count);
        for (arma::uword k = 0; k < k_count; k++)
        {
            arma::cx_vec h = qs[k].t() * v;
            a[k] = h * h.t();
        }

        ConicProblem p;
        std::vector<arma::uword> w_id(k_count);
        for (arma::uword k = 0; k < k_count; k++)
            w_id[k] = p.add_psd_var(m);
        arma::uword r_id = p.add_scalar_var(0.0, kInf);
        p.set_maximize(true);
        p.objective_scalar(r_id, 1.0);
        {
            arma::uword r = p.add_row(ConicProblem::RowSense::le, p_max);
            for (arma::uword k = 0; k < k_count; k++)
                p.row_trace(r, w_id[k], arma::cx_mat(arma::eye<arma::cx_mat>(m, m)));
        }
        for (arma::uword k = 0; k < k_count; k++)
        {
            arma::uword r = p.add_row(ConicProblem::RowSense::ge, 0.0);
            p.row_trace(r, w_id[k], a[k]);
            p.row_scalar(r, r_id, -1.0);
        }
        double v_energy = std::real(arma::cdot(v, v));
        if (std::isfinite(eps) && k_count >= 2 && !leakage_never_binds(qs, p_max, eps, v_energy))
            for (arma::uword k = 0; k < k_count; k++)
            {
                arma::uword r = p.add_row(ConicProblem::RowSense::le, eps);
                for (arma::uword kp = 0; kp < k_count; kp++)
                    if (kp != k)
                        p.row_trace(r, w_id[k], a[kp]);
            }

        ConicSolution sol = solve(p, tol);
        if (!sol.usable())
            raise(errc::solver_failure, "solve_fixed_phase_sdr: conic solve failed");
        FixedPhaseSdr out;
        out.beam_mats.resize(k_count);
        for (arma::uword k = 0; k < k_count; k++)
            out.beam_mats[k] = sol.psd_values[w_id[k]];
        out.min_gain = sol.objective;
        return out;
    }

    Beamformer extract_rank_one(const std::vector<arma::cx_mat> &beam_mats,
                                const arma::cx_mat &v_mat, const std::vector<arma::cx_mat> &qs)
    {
        const arma::uword k_count = beam_mats.size();
        if (k_count == 0 || qs.size() != k_count)
            raise(errc::invalid_argument, "extract_rank_one: beam and channel counts disagree");
        const arma::uword n = v_mat.n_rows, m = qs[0].n_cols;
        if (v_mat.n_cols != n || n == 0)
            raise(errc::dimension_mismatch, "extract_rank_one: phase matrix must be square");
        for (arma::uword k = 0; k < k_count; k++)
            if (qs[k].n_rows != n || qs[k].n_cols != m || beam_mats[k].n_rows != m ||
                beam_mats[k].n_cols != m)
                raise(errc::dimension_mismatch, "extract_rank_one: channel/beam dimensions disagree");

        arma::vec ev;
        arma::cx_mat u;
        if (!arma::eig_sym(ev, u, arma::cx_mat(0.5 * (v_mat + v_mat.t()))))
            raise(errc::degenerate, "extract_rank_one: eigendecomposition failed");
        double total = arma::sum(ev);
        double top = ev(ev.n_elem - 1);
        if (!(top > 0.0) || top < (1.0 - 1e-6) * total)
            raise(errc::degenerate, "extract_rank_one: phase matrix is not rank one within tolerance");
        arma::cx_vec vtop = u.col(ev.n_elem - 1);

        Beamformer bf;
        bf.w.set_size(m, k_count);
        bf.powers.resize(k_count);
        for (arma::uword k = 0; k < k_count; k++)
        {
            arma::cx_vec h = qs[k].t() * vtop;
            double d = std::real(arma::cdot(h, beam_mats[k] * h));
            if (!(d > 0.0))
                raise(errc::degenerate, "extract_rank_one: zero effective gain for a target");
            bf.w.col(k) = beam_mats[k] * h / std::sqrt(d);
            bf.powers[k] = std::pow(arma::norm(bf.w.col(k), 2), 2);
        }
        return bf;
    }

    SsSolution solve_ss(const SceneChannels &scene, double p_max, double eps,
                        const PenaltyConfig &config)
    {
        config.validate();
        scene.validate();
        if (!(p_max > 0.0) || !std::isfinite(p_max))
            raise(errc::invalid_argument, "solve_ss: power budget must be positive");
        if (!(eps > 0.0))
            raise(errc::invalid_argument, "solve_ss: leakage cap must be positive");
        const arma::uword k_count = scene.k();
        const arma::uword n = scene.geom.n();

        std::vector<arma::cx_mat> qs(k_count);
        for (arma::uword k = 0; k < k_count; k++)
            qs[k] = effective_channel(scene.geom, scene.targets[k], scene.g_bs_irs);

        SsSolution out;
        if (k_count == 1)
        {
            TdPhaseResult td = solve_td_phase(qs[0], config);
            out.beams = mrt_beamformer(td.phases, qs[0], p_max);
            out.phase = td.phases;
            out.gains = {beam_gain(td.phases.v, qs[0], out.beams.w.col(0))};
            out.leakages = {0.0};
            out.min_gain = out.gains(0);
            out.converged = td.converged;
            out.trace = td.trace;
            return out;
        }

        rng_stream rng(derive_seed(config.seed, 0x5353));
        arma::cx_vec v0 = rng.unit_phases(n);
        arma::cx_mat v_ref = v0 * v0.t();
        PhaseConfig pc0{v0, PhaseConfig::mode::unit_modulus};
        std::vector<arma::cx_mat> w_ref(k_count);
        for (arma::uword k = 0; k < k_count; k++)
        {
            arma::cx_vec w0 = mrt_beamformer(pc0, qs[k], p_max / double(k_count)).w.col(0);
            w_ref[k] = w0 * w0.t();
        }
        if (std::isfinite(eps))
        {
            arma::vec leaks0 = true_leaks(w_ref, v_ref, qs);
            for (arma::uword k = 0; k < k_count; k++)
                if (leaks0(k) > 0.9 * eps)
                    w_ref[k] *= 0.9 * eps / leaks0(k);
        }

        double eta = config.eta0;
        if (config.auto_eta0)
        {
            double obj0 = true_gains(w_ref, v_ref, qs).min();
            double rho_ref = (n > 1) ? double(n - 1) : 1.0;
            eta = rho_ref / (0.01 * std::max(obj0, 1e-12));
        }

        bool first_step = true;
        bool hit_rank = false;
        for (arma::uword outer = 0; outer < config.max_outer && !hit_rank; outer++)
        {
            double f_prev = true_gains(w_ref, v_ref, qs).min() - rank_penalty(v_ref) / eta;
            for (arma::uword inner = 0; inner < config.max_inner; inner++)
            {
                SpectralLinearization lin = linearize_spectral_norm(v_ref);
                SsStep step = ss_step(qs, w_ref, v_ref, lin, eta, p_max, eps, config.conic);
                if (step.infeasible)
                {
                    if (first_step)
                        report_infeasible_eps(qs, w_ref, v_ref, lin, eta, p_max, eps, config.conic);
                    raise(errc::solver_failure, "solve_ss: subproblem reported infeasible mid-run");
                }
                first_step = false;
                double f = true_gains(step.w, step.v, qs).min() - rank_penalty(step.v) / eta;
                if (f < f_prev - 1e-7 * (1.0 + std::abs(f_prev)))
                    break; // numerical regression: keep the previous iterate
                w_ref = step.w;
                v_ref = step.v;
                out.trace.push_back({outer, inner, eta, f, rank_penalty(v_ref), lin.degenerate_top});
                bool settled = std::abs(f - f_prev) <= config.eps_inner * (1.0 + std::abs(f_prev));
                f_prev = f;
                if (settled)
                    break;
            }
            hit_rank = rank_penalty(v_ref) <= config.eps_rank;
            if (!hit_rank)
                eta *= config.e;
        }

        arma::vec ev;
        arma::cx_mat u;
        arma::eig_sym(ev, u, arma::cx_mat(0.5 * (v_ref + v_ref.t())));
        arma::cx_vec vphase = unit_modulus_projection(u.col(ev.n_elem - 1));

        FixedPhaseSdr fixed = solve_fixed_phase_sdr(qs, vphase, p_max, eps, config.conic);
        out.beams = extract_rank_one(fixed.beam_mats, arma::cx_mat(vphase * vphase.t()), qs);
        out.phase.v = vphase;
        out.phase.kind = PhaseConfig::mode::unit_modulus;
        out.gains.set_size(k_count);
        out.leakages.zeros(k_count);
        for (arma::uword k = 0; k < k_count; k++)
        {
            out.gains(k) = beam_gain(vphase, qs[k], out.beams.w.col(k));
            for (arma::uword kp = 0; kp < k_count; kp++)
                if (kp != k)
                    out.leakages(k) += leakage(vphase, qs[kp], out.beams.w.col(k));
        }
        out.min_gain = out.gains.min();
        out.converged = hit_rank;
        if (!config.trace_path.empty())
            write_penalty_trace(config.trace_path, out.trace);
        return out;
    }

    void write_ss_solution(const SsSolution &sol, const std::string &path)
    {
        nlohmann::json j;
        j["min_gain"] = sol.min_gain;
        j["gains"] = std::vector<double>(sol.gains.begin(), sol.gains.end());
        j["leakages"] = std::vector<double>(sol.leakages.begin(), sol.leakages.end());
        j["phase"] = cx_cols_json(arma::cx_mat(sol.phase.v));
        j["beams"] = cx_cols_json(sol.beams.w);
        j["powers"] = sol.beams.powers;
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
            raise(errc::io_failure, "write_ss_solution: cannot open " + path);
        out << j.dump(2) << "\n";
    }

} // namespace irsense
