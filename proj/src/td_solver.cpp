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

#include "irsense/td_solver.hpp"

#include <cmath>
#include <fstream>

namespace irsense
{

    void PenaltyConfig::validate() const
    {
        if (!(eta0 > 0.0))
            raise(errc::invalid_argument, "PenaltyConfig: eta0 must be positive");
        if (!(e > 0.0) || !(e < 1.0))
            raise(errc::invalid_argument, "PenaltyConfig: e must lie in (0, 1)");
        if (!(eps_inner > 0.0) || !(eps_rank > 0.0))
            raise(errc::invalid_argument, "PenaltyConfig: accuracies must be positive");
        if (max_inner == 0 || max_outer == 0)
            raise(errc::invalid_argument, "PenaltyConfig: iteration caps must be positive");
    }

    void write_penalty_trace(const std::string &path, const std::vector<PenaltyTraceRow> &rows)
    {
        std::ofstream out(path);
        if (!out)
            raise(errc::io_failure, "write_penalty_trace: cannot open " + path);
        out << "outer,inner,eta,objective,rank_residual,degenerate_top\n";
        char line[160];
        for (const auto &r : rows)
        {
            std::snprintf(line, sizeof(line), "%llu,%llu,%.12e,%.12e,%.12e,%d\n",
                          (unsigned long long)r.outer, (unsigned long long)r.inner, r.eta,
                          r.objective, r.rank_residual, r.degenerate_top ? 1 : 0);
            out << line;
        }
    }

    namespace
    {

        void check_hermitian_psd(const arma::cx_mat &v, const char *who)
        {
            if (v.n_rows != v.n_cols)
                raise(errc::dimension_mismatch, std::string(who) + ": matrix must be square");
            if (arma::norm(arma::cx_mat(v - v.t()), "fro") > 1e-8 * (1.0 + arma::norm(v, "fro")))
                raise(errc::invalid_argument, std::string(who) + ": matrix must be Hermitian");
            arma::vec ev = arma::eig_sym(v);
            if (ev.min() < -1e-8 * std::max(1.0, ev.max()))
                raise(errc::invalid_argument, std::string(who) + ": matrix must be positive semidefinite");
        }

        // exact penalized objective Tr(QQ^H V) - (1/eta) (Tr(V) - ||V||_2)
        double penalized_objective(const arma::cx_mat &qqh, const arma::cx_mat &v, double eta)
        {
            double gain = arma::trace(arma::real(qqh * v));
            return gain - rank_penalty(v) / eta;
        }

        // one convex step: maximize Tr((QQ^H - (1/eta)(I - uu^H)) V) over the
        // unit-diagonal PSD set
        arma::cx_mat penalty_step(const arma::cx_mat &qqh, const SpectralLinearization &lin,
                                  double eta, const ConicTolerances &tol)
        {
            const arma::uword n = qqh.n_rows;
            ConicProblem p;
            arma::uword v = p.add_psd_var(n);
            p.set_maximize(true);
            arma::cx_mat obj = qqh - (1.0 / eta) * (arma::eye<arma::cx_mat>(n, n) - lin.gradient);
            p.objective_trace(v, obj);
            for (arma::uword i = 0; i < n; i++)
            {
                arma::cx_mat pin(n, n, arma::fill::zeros);
                pin(i, i) = 1.0;
                arma::uword r = p.add_row(ConicProblem::RowSense::eq, 1.0);
                p.row_trace(r, v, pin);
            }
            ConicSolution s = solve(p, tol);
            if (!s.usable())
                raise(errc::solver_failure, "solve_td_phase: conic subproblem failed");
            return s.psd_values[0];
        }

    } // namespace

    SpectralLinearization linearize_spectral_norm(const arma::cx_mat &v_ref)
    {
        check_hermitian_psd(v_ref, "linearize_spectral_norm");
        arma::vec ev;
        arma::cx_mat u;
        if (!arma::eig_sym(ev, u, 0.5 * (v_ref + v_ref.t())))
            raise(errc::degenerate, "linearize_spectral_norm: eigendecomposition failed");
        const arma::uword n = ev.n_elem;
        double top = ev(n - 1);
        SpectralLinearization lin;
        arma::cx_vec umax = u.col(n - 1);
        lin.gradient = umax * umax.t();
        lin.degenerate_top = n >= 2 && (top - ev(n - 2)) <= 1e-9 * std::max(1.0, top);
        lin.offset = -arma::trace(arma::real(lin.gradient * v_ref)) - top;
        return lin;
    }

    double rank_penalty(const arma::cx_mat &v)
    {
        check_hermitian_psd(v, "rank_penalty");
        arma::vec ev = arma::eig_sym(0.5 * (v + v.t()));
        return arma::trace(arma::real(v)) - ev.max();
    }

    Beamformer mrt_beamformer(const PhaseConfig &v, const arma::cx_mat &q, double p_max)
    {
        v.validate();
        if (q.n_rows != v.v.n_elem)
            raise(errc::dimension_mismatch, "mrt_beamformer: phase vector does not match channel rows");
        if (!(p_max > 0.0))
            raise(errc::invalid_argument, "mrt_beamformer: power budget must be positive");
        arma::cx_vec h = q.t() * v.v; // Q^H v
        double nrm = arma::norm(h, 2);
        if (nrm < 1e-12 * (1.0 + arma::norm(q, "fro")))
            raise(errc::degenerate, "mrt_beamformer: effective channel vanishes for this phase configuration");
        Beamformer bf;
        bf.w = std::sqrt(p_max) * h / nrm;
        bf.powers = {p_max};
        return bf;
    }

    TdPhaseResult solve_td_phase(const arma::cx_mat &q, const PenaltyConfig &config)
    {
        config.validate();
        const arma::uword n = q.n_rows;
        if (n == 0 || q.n_cols == 0)
            raise(errc::invalid_argument, "solve_td_phase: empty channel");
        if (arma::norm(q, "fro") < 1e-14)
            raise(errc::invalid_argument, "solve_td_phase: zero channel");

        const arma::cx_mat qqh = q * q.t();
        rng_stream rng(derive_seed(config.seed, 0x7D5E));
        arma::cx_vec v0 = rng.unit_phases(n);
        arma::cx_mat v = v0 * v0.t();

        double eta = config.eta0;
        if (config.auto_eta0)
        {
            double obj0 = arma::trace(arma::real(qqh * v));
            double rho_ref = (n > 1) ? double(n - 1) : 1.0;
            eta = rho_ref / (0.01 * std::max(obj0, 1e-12));
        }

        TdPhaseResult res;
        bool hit_rank = false;
        for (arma::uword outer = 0; outer < config.max_outer && !hit_rank; outer++)
        {
            double f_prev = penalized_objective(qqh, v, eta);
            for (arma::uword inner = 0; inner < config.max_inner; inner++)
            {
                SpectralLinearization lin = linearize_spectral_norm(v);
                arma::cx_mat v_next = penalty_step(qqh, lin, eta, config.conic);
                double f = penalized_objective(qqh, v_next, eta);
                if (f < f_prev - 1e-7 * (1.0 + std::abs(f_prev)))
                    break; // numerical regression: keep the previous iterate
                v = v_next;
                res.trace.push_back({outer, inner, eta, f, rank_penalty(v), lin.degenerate_top});
                bool settled = std::abs(f - f_prev) <= config.eps_inner * (1.0 + std::abs(f_prev));
                f_prev = f;
                if (settled)
                    break;
            }
            hit_rank = rank_penalty(v) <= config.eps_rank;
            if (!hit_rank)
                eta *= config.e;
        }

        arma::vec ev;
        arma::cx_mat u;
        arma::eig_sym(ev, u, 0.5 * (v + v.t()));
        arma::cx_vec vphase = unit_modulus_projection(u.col(ev.n_elem - 1));
        res.phases.v = vphase;
        res.phases.kind = PhaseConfig::mode::unit_modulus;
        res.v_matrix = v;
        res.channel_gain = std::pow(arma::norm(q.t() * vphase, 2), 2);
        res.rank_residual = rank_penalty(v);
        res.converged = hit_rank;
        if (!config.trace_path.empty())
            write_penalty_trace(config.trace_path, res.trace);
        return res;
    }

    double solve_td_sdr_bound(const arma::cx_mat &q, const ConicTolerances &tol)
    {
        const arma::uword n = q.n_rows;
        if (n == 0 || q.n_cols == 0)
            raise(errc::invalid_argument, "solve_td_sdr_bound: empty channel");
        ConicProblem p;
        arma::uword v = p.add_psd_var(n);
        p.set_maximize(true);
        p.objective_trace(v, arma::cx_mat(q * q.t()));
        for (arma::uword i = 0; i < n; i++)
        {
            arma::cx_mat pin(n, n, arma::fill::zeros);
            pin(i, i) = 1.0;
            arma::uword r = p.add_row(ConicProblem::RowSense::eq, 1.0);
            p.row_trace(r, v, pin);
        }
        ConicSolution s = solve(p, tol);
        if (!s.usable())
            raise(errc::solver_failure, "solve_td_sdr_bound: conic solve failed");
        return s.objective;
    }

    std::vector<TdTargetResult> td_scheme(const SceneChannels &scene, double p_max,
                                          const PenaltyConfig &config)
    {
        scene.validate();
        if (!(p_max > 0.0))
            raise(errc::invalid_argument, "td_scheme: power budget must be positive");
        std::vector<TdTargetResult> out;
        out.reserve(scene.k());
        for (arma::uword k = 0; k < scene.k(); k++)
        {
            PenaltyConfig per = config;
            per.seed = derive_seed(config.seed, 0x7D00); // position-independent: reordering targets permutes results
            if (!config.trace_path.empty())
                per.trace_path = config.trace_path + "." + std::to_string(k) + ".csv";
            arma::cx_mat q = effective_channel(scene.geom, scene.targets[k], scene.g_bs_irs);
            TdTargetResult tr;
            tr.phase = solve_td_phase(q, per);
            tr.beamformer = mrt_beamformer(tr.phase.phases, q, p_max);
            tr.gain = beam_gain(tr.phase.phases.v, q, arma::cx_vec(tr.beamformer.w.col(0)));
            out.push_back(std::move(tr));
        }
        return out;
    }

} // namespace irsense
