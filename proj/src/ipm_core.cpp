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

#include "ipm_core.hpp"

#include <cstdio>
#include <limits>

namespace irsense::ipm
{

    namespace
    {

        constexpr double inf = std::numeric_limits<double>::infinity();

        struct block_data
        {
            std::vector<arma::uword> rows; // global row ids with support here
            std::vector<std::vector<std::pair<arma::uword, double>>> cols;
            std::vector<std::pair<arma::uword, arma::uword>> coord_ij; // psd: svec coord -> (i, j)
        };

        struct nt_state
        {
            // psd
            arma::mat w_half, w_inv_half, lam_vecs;
            arma::vec lam_d;
            // soc: unit-determinant scaling point, its Jordan square root
            arma::vec wbar, wbar_half, lam_soc;
            double eta = 0.0;
            // nonneg
            arma::vec w_nn, lam_nn;
        };

        arma::subview_col<double> slice(arma::vec &v, const cone_block &blk)
        {
            return v.subvec(blk.offset, blk.offset + blk.coords() - 1);
        }

        arma::vec cslice(const arma::vec &v, const cone_block &blk)
        {
            return v.subvec(blk.offset, blk.offset + blk.coords() - 1);
        }

        void set_identity(const std::vector<cone_block> &blocks, arma::vec &v)
        {
            v.zeros();
            for (const auto &blk : blocks)
            {
                if (blk.kind == cone_kind::nonneg)
                    slice(v, blk).ones();
                else if (blk.kind == cone_kind::soc)
                    v(blk.offset) = 1.0;
                else
                    for (arma::uword i = 0; i < blk.size; i++)
                        v(blk.offset + svec_index(i, i)) = 1.0;
            }
        }

        // soc helpers -----------------------------------------------------------

        double soc_det(const arma::vec &u)
        {
            return u(0) * u(0) - arma::dot(u.tail(u.n_elem - 1), u.tail(u.n_elem - 1));
        }

        arma::vec soc_reflect(const arma::vec &u) // J u with J = diag(1, -I)
        {
            arma::vec r = -u;
            r(0) = u(0);
            return r;
        }

        // F^(+-1) and F^(+-1/2) via the quadratic representation P(u) v =
        // 2 u (u'v) - det(u) J v of unit-determinant points: F = eta^2 P(wbar),
        // F^(1/2) = eta P(wbar_half), inverses reflect the point through J.
        arma::vec soc_f_apply(const nt_state &st, const arma::vec &u, bool half, bool inverse)
        {
            const arma::vec &base = half ? st.wbar_half : st.wbar;
            arma::vec pt = inverse ? soc_reflect(base) : base;
            double s = half ? st.eta : st.eta * st.eta;
            if (inverse)
                s = 1.0 / s;
            return s * (2.0 * arma::dot(pt, u) * pt - soc_reflect(u));
        }

        // jordan product u o v within one block's coordinates
        arma::vec jordan_product_blk(const cone_block &blk, const arma::vec &u, const arma::vec &v)
        {
            switch (blk.kind)
            {
            case cone_kind::nonneg:
                return u % v;
            case cone_kind::soc:
            {
                arma::vec r(blk.size);
                r(0) = arma::dot(u, v);
                r.tail(blk.size - 1) = u(0) * v.tail(blk.size - 1) + v(0) * u.tail(blk.size - 1);
                return r;
            }
            case cone_kind::psd:
            {
                arma::mat a = smat(u, blk.size), b = smat(v, blk.size);
                return svec(0.5 * (a * b + b * a));
            }
            }
            return {};
        }

        // largest step keeping pt + alpha * dir inside the cone (inf if unbounded)
        double step_len_blk(const cone_block &blk, const arma::vec &pt, const arma::vec &dir)
        {
            switch (blk.kind)
            {
            case cone_kind::nonneg:
            {
                double a = inf;
                for (arma::uword i = 0; i < blk.size; i++)
                    if (dir(i) < 0.0)
                        a = std::min(a, -pt(i) / dir(i));
                return a;
            }
            case cone_kind::soc:
            {
                const arma::uword d = blk.size;
                double a2 = dir(0) * dir(0) - arma::dot(dir.tail(d - 1), dir.tail(d - 1));
                double a1 = pt(0) * dir(0) - arma::dot(pt.tail(d - 1), dir.tail(d - 1));
                double a0 = soc_det(pt);
                if (std::abs(a2) < 1e-300)
                    return (a1 < 0.0) ? -a0 / (2.0 * a1) : inf;
                double disc = a1 * a1 - a2 * a0;
                if (a2 < 0.0)
                    return (a1 + std::sqrt(std::max(disc, 0.0))) / (-a2);
                if (a1 >= 0.0 || disc <= 0.0)
                    return inf;
                return (-a1 - std::sqrt(disc)) / a2;
            }
            case cone_kind::psd:
            {
                arma::mat x = smat(pt, blk.size), d = smat(dir, blk.size);
                arma::mat l;
                arma::mat xr = x;
                if (!arma::chol(l, xr + 1e-14 * arma::trace(xr) / double(blk.size) * arma::eye(blk.size, blk.size), "lower"))
                    return 0.0;
                arma::mat m = arma::solve(arma::trimatl(l), d);
                m = arma::solve(arma::trimatl(l), m.t());
                arma::vec ev;
                if (!arma::eig_sym(ev, 0.5 * (m + m.t())))
                    return 0.0;
                double mn = ev.min();
                return (mn >= 0.0) ? inf : -1.0 / mn;
            }
            }
            return 0.0;
        }

    } // namespace

    result solve(const problem &p, const options &opt)
    {
        const arma::uword m = p.a.n_rows;
        const arma::uword n = p.n_coord;
        if (m == 0 || n == 0)
            raise(errc::invalid_argument, "ipm: problem needs at least one constraint and one cone coordinate");
        if (p.c.n_elem != n || p.b.n_elem != m || p.a.n_cols != n)
            raise(errc::dimension_mismatch, "ipm: inconsistent problem dimensions");

        // --- data scaling ------------------------------------------------------
        arma::vec row_sq(m, arma::fill::zeros);
        for (arma::sp_mat::const_iterator it = p.a.begin(); it != p.a.end(); ++it)
            row_sq(it.row()) += (*it) * (*it);
        arma::vec row_scale(m);
        for (arma::uword i = 0; i < m; i++)
            row_scale(i) = (row_sq(i) > 1e-300) ? std::sqrt(row_sq(i)) : 1.0;
        arma::sp_mat a_s;
        {
            arma::sp_mat d = arma::speye<arma::sp_mat>(m, m);
            for (arma::uword i = 0; i < m; i++)
                d(i, i) = 1.0 / row_scale(i);
            a_s = d * p.a;
        }
        arma::vec b_s = p.b / row_scale;
        const double b_scale = std::max(1.0, arma::norm(b_s, 2));
        const double c_scale = std::max(1.0, arma::norm(p.c, 2));
        b_s /= b_scale;
        arma::vec c_s = p.c / c_scale;
        arma::sp_mat a_st = a_s.t();

        // --- precompute per-block row structure --------------------------------
        std::vector<block_data> bdata(p.blocks.size());
        {
            std::vector<arma::uword> coord2blk(n);
            for (arma::uword bi = 0; bi < p.blocks.size(); bi++)
            {
                const auto &blk = p.blocks[bi];
                for (arma::uword kc = 0; kc < blk.coords(); kc++)
                    coord2blk[blk.offset + kc] = bi;
                if (blk.kind == cone_kind::psd)
                {
                    bdata[bi].coord_ij.resize(blk.coords());
                    for (arma::uword j = 0; j < blk.size; j++)
                        for (arma::uword i = 0; i <= j; i++)
                            bdata[bi].coord_ij[svec_index(i, j)] = {i, j};
                }
            }
            std::vector<std::vector<arma::sword>> rowpos(p.blocks.size()); // row id -> local index
            for (auto &rp : rowpos)
                rp.assign(m, -1);
            for (arma::sp_mat::const_iterator it = a_s.begin(); it != a_s.end(); ++it)
            {
                arma::uword bi = coord2blk[it.col()];
                auto &bd = bdata[bi];
                arma::sword &pos = rowpos[bi][it.row()];
                if (pos < 0)
                {
                    pos = arma::sword(bd.rows.size());
                    bd.rows.push_back(it.row());
                    bd.cols.emplace_back();
                }
                bd.cols[arma::uword(pos)].emplace_back(it.col() - p.blocks[bi].offset, *it);
            }
        }

        double nu = 1.0;
        for (const auto &blk : p.blocks)
            nu += double(blk.rank());

        // --- state -------------------------------------------------------------
        arma::vec x(n), z(n), y(m, arma::fill::zeros);
        set_identity(p.blocks, x);
        z = x;
        double tau = 1.0, kappa = 1.0;

        std::vector<nt_state> scal(p.blocks.size());
        arma::mat h(m, m), h_chol;
        arma::vec e_vec(n);
        set_identity(p.blocks, e_vec);

        result best;
        double best_score = inf;
        result out;
        double prev_mu = inf;
        arma::uword stall = 0;

        auto unscale_candidates = [&](double t, arma::vec &xo, arma::vec &yo, arma::vec &zo)
        {
            xo = (b_scale / t) * x;
            yo = (c_scale / t) * (y / row_scale);
            zo = (c_scale / t) * z;
        };

        auto apply_f = [&](const arma::vec &in, bool half, bool inverse) -> arma::vec
        {
            arma::vec out_v(n);
            for (arma::uword bi = 0; bi < p.blocks.size(); bi++)
            {
                const auto &blk = p.blocks[bi];
                const auto &st = scal[bi];
                arma::vec u = cslice(in, blk);
                switch (blk.kind)
                {
                case cone_kind::nonneg:
                {
                    arma::vec w = st.w_nn;
                    if (half && inverse)
                        out_v.subvec(blk.offset, blk.offset + blk.size - 1) = u / w;
                    else if (half)
                        out_v.subvec(blk.offset, blk.offset + blk.size - 1) = u % w;
                    else if (inverse)
                        out_v.subvec(blk.offset, blk.offset + blk.size - 1) = u / (w % w);
                    else
                        out_v.subvec(blk.offset, blk.offset + blk.size - 1) = u % (w % w);
                    break;
                }
                case cone_kind::soc:
                {
                    out_v.subvec(blk.offset, blk.offset + blk.size - 1) = soc_f_apply(st, u, half, inverse);
                    break;
                }
                case cone_kind::psd:
                {
                    const arma::mat &wm = (half && inverse) ? st.w_inv_half
                                          : half            ? st.w_half
                                                            : (inverse ? st.w_inv_half : st.w_half);
                    arma::mat um = smat(u, blk.size);
                    arma::mat r = wm * um * wm;
                    if (!half)
                        r = wm * r * wm;
                    out_v.subvec(blk.offset, blk.offset + blk.coords() - 1) = svec(r);
                    break;
                }
                }
            }
            return out_v;
        };

        auto jordan_solve_lam = [&](const arma::vec &rhs) -> arma::vec
        {
            arma::vec u(n);
            for (arma::uword bi = 0; bi < p.blocks.size(); bi++)
            {
                const auto &blk = p.blocks[bi];
                const auto &st = scal[bi];
                arma::vec r = cslice(rhs, blk);
                switch (blk.kind)
                {
                case cone_kind::nonneg:
                    u.subvec(blk.offset, blk.offset + blk.size - 1) = r / st.lam_nn;
                    break;
                case cone_kind::soc:
                {
                    const arma::vec &l = st.lam_soc;
                    double det = soc_det(l);
                    double u0 = (l(0) * r(0) - arma::dot(l.tail(blk.size - 1), r.tail(blk.size - 1))) / det;
                    arma::vec u1 = (r.tail(blk.size - 1) - u0 * l.tail(blk.size - 1)) / l(0);
                    u(blk.offset) = u0;
                    u.subvec(blk.offset + 1, blk.offset + blk.size - 1) = u1;
                    break;
                }
                case cone_kind::psd:
                {
                    arma::mat rm = st.lam_vecs.t() * smat(r, blk.size) * st.lam_vecs;
                    for (arma::uword jj = 0; jj < blk.size; jj++)
                        for (arma::uword ii = 0; ii < blk.size; ii++)
                            rm(ii, jj) *= 2.0 / (st.lam_d(ii) + st.lam_d(jj));
                    u.subvec(blk.offset, blk.offset + blk.coords() - 1) = svec(st.lam_vecs * rm * st.lam_vecs.t());
                    break;
                }
                }
            }
            return u;
        };

        auto jordan_product = [&](const arma::vec &u, const arma::vec &v) -> arma::vec
        {
            arma::vec r(n);
            for (const auto &blk : p.blocks)
                r.subvec(blk.offset, blk.offset + blk.coords() - 1) =
                    jordan_product_blk(blk, cslice(u, blk), cslice(v, blk));
            return r;
        };

        auto lambda_vec = [&]() -> arma::vec
        {
            arma::vec l(n);
            for (arma::uword bi = 0; bi < p.blocks.size(); bi++)
            {
                const auto &blk = p.blocks[bi];
                const auto &st = scal[bi];
                if (blk.kind == cone_kind::nonneg)
                    l.subvec(blk.offset, blk.offset + blk.size - 1) = st.lam_nn;
                else if (blk.kind == cone_kind::soc)
                    l.subvec(blk.offset, blk.offset + blk.size - 1) = st.lam_soc;
                else
                    l.subvec(blk.offset, blk.offset + blk.coords() - 1) =
                        svec(st.lam_vecs * arma::diagmat(st.lam_d) * st.lam_vecs.t());
            }
            return l;
        };

        auto step_len = [&](const arma::vec &pt, const arma::vec &dir) -> double
        {
            double a = inf;
            for (const auto &blk : p.blocks)
                a = std::min(a, step_len_blk(blk, cslice(pt, blk), cslice(dir, blk)));
            return a;
        };

        auto chol_solve = [&](const arma::vec &rhs) -> arma::vec
        {
            arma::vec u = arma::solve(arma::trimatl(h_chol), rhs);
            u = arma::solve(arma::trimatu(h_chol.t()), u);
            // one refinement pass
            arma::vec r2 = rhs - h * u;
            arma::vec du = arma::solve(arma::trimatl(h_chol), r2);
            du = arma::solve(arma::trimatu(h_chol.t()), du);
            return u + du;
        };

        const double gamma_step = 0.99;

        for (arma::uword iter = 0; iter <= opt.max_iter; iter++)
        {
            // --- residuals and termination ------------------------------------
            arma::vec ax = a_s * x;
            arma::vec aty = a_st * y;
            arma::vec r_p = ax - tau * b_s;
            arma::vec r_d = tau * c_s - aty - z;
            double r_g = arma::dot(b_s, y) - arma::dot(c_s, x) - kappa;
            double mu = (arma::dot(x, z) + tau * kappa) / nu;

            arma::vec xo, yo, zo;
            unscale_candidates(tau, xo, yo, zo);
            double pobj = arma::dot(p.c, xo);
            double dobj = arma::dot(p.b, yo);
            double pres = arma::norm(p.a * xo - p.b, 2) / (1.0 + arma::norm(p.b, 2));
            double dres = arma::norm(arma::vec(p.a.t() * yo) + zo - p.c, 2) / (1.0 + arma::norm(p.c, 2));
            double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
            double score = std::max({pres, dres, gap});

            if (opt.verbosity > 0)
                std::printf("ipm %3llu  mu %.2e  pres %.2e  dres %.2e  gap %.2e  tau %.2e  kappa %.2e\n",
                            (unsigned long long)iter, mu, pres, dres, gap, tau, kappa);

            if (score < best_score)
            {
                best_score = score;
                best.x = xo;
                best.y = yo;
                best.z = zo;
                best.obj = pobj;
                best.pres = pres;
                best.dres = dres;
                best.gap = gap;
                best.iters = iter;
            }

            if (pres <= opt.tol && dres <= opt.tol && gap <= opt.tol)
            {
                out = best;
                out.status = solve_status::optimal;
                out.iters = iter;
                return out;
            }

            // --- infeasibility certificates -----------------------------------
            {
                arma::vec y_cert = c_scale * (y / row_scale);
                arma::vec z_cert = c_scale * z;
                double ny = arma::norm(y_cert, 2) + arma::norm(z_cert, 2);
                if (ny > 1e-300)
                {
                    double by = arma::dot(p.b, y_cert);
                    double dfeas = arma::norm(arma::vec(p.a.t() * y_cert) + z_cert, 2);
                    if (by > 1e-12 * (1.0 + arma::norm(p.b, 2)) * ny && dfeas <= 1e-8 * by)
                    {
                        out.status = solve_status::infeasible;
                        out.x = xo;
                        out.y = y_cert / ny;
                        out.z = z_cert / ny;
                        out.obj = pobj;
                        out.pres = pres;
                        out.dres = dres;
                        out.gap = gap;
                        out.iters = iter;
                        return out;
                    }
                }
                arma::vec x_cert = b_scale * x;
                double nx = arma::norm(x_cert, 2);
                if (nx > 1e-300)
                {
                    double cx = -arma::dot(p.c, x_cert);
                    double pfeas = arma::norm(p.a * x_cert, 2);
                    if (cx > 1e-12 * (1.0 + arma::norm(p.c, 2)) * nx && pfeas <= 1e-8 * cx)
                    {
                        out.status = solve_status::unbounded;
                        out.x = x_cert / nx;
                        out.y = yo;
                        out.z = zo;
                        out.obj = pobj;
                        out.pres = pres;
                        out.dres = dres;
                        out.gap = gap;
                        out.iters = iter;
                        return out;
                    }
                }
            }

            if (iter == opt.max_iter)
                break;
            if (tau < 1e-12 || mu < 1e-16)
                break;
            if (mu > 0.999 * prev_mu)
            {
                if (++stall >= 12)
                    break;
            }
            else
                stall = 0;
            prev_mu = mu;

            // --- NT scalings ---------------------------------------------------
            bool scale_ok = true;
            for (arma::uword bi = 0; bi < p.blocks.size() && scale_ok; bi++)
            {
                const auto &blk = p.blocks[bi];
                auto &st = scal[bi];
                arma::vec xb = cslice(x, blk), zb = cslice(z, blk);
                switch (blk.kind)
                {
                case cone_kind::nonneg:
                    st.w_nn = arma::sqrt(xb / zb);
                    st.lam_nn = arma::sqrt(xb % zb);
                    break;
                case cone_kind::soc:
                {
                    double dx_ = soc_det(xb), dz_ = soc_det(zb);
                    if (dx_ <= 0.0 || dz_ <= 0.0)
                    {
                        scale_ok = false;
                        break;
                    }
                    arma::vec xbar = xb / std::sqrt(dx_), zbar = zb / std::sqrt(dz_);
                    double g2 = 0.5 * (1.0 + arma::dot(xbar, zbar));
                    if (g2 <= 0.0)
                    {
                        scale_ok = false;
                        break;
                    }
                    double g = std::sqrt(g2);
                    st.wbar = (xbar + soc_reflect(zbar)) / (2.0 * g);
                    st.wbar_half = st.wbar;
                    st.wbar_half(0) += 1.0;
                    st.wbar_half /= std::sqrt(2.0 * (1.0 + st.wbar(0)));
                    st.eta = std::pow(dx_ / dz_, 0.25);
                    st.lam_soc = soc_f_apply(st, zb, true, false);
                    break;
                }
                case cone_kind::psd:
                {
                    arma::mat xm = smat(xb, blk.size), zm = smat(zb, blk.size);
                    arma::mat rz;
                    if (!arma::chol(rz, zm)) // zm = rz' * rz
                    {
                        scale_ok = false;
                        break;
                    }
                    arma::mat t = rz * xm * rz.t();
                    arma::vec ev;
                    arma::mat u;
                    if (!arma::eig_sym(ev, u, 0.5 * (t + t.t())) || ev.min() <= 0.0)
                    {
                        scale_ok = false;
                        break;
                    }
                    arma::mat rzi_u = arma::solve(arma::trimatu(rz), u);
                    arma::mat w = rzi_u * arma::diagmat(arma::sqrt(ev)) * rzi_u.t();
                    arma::vec wd;
                    arma::mat wv;
                    if (!arma::eig_sym(wd, wv, 0.5 * (w + w.t())) || wd.min() <= 0.0)
                    {
                        scale_ok = false;
                        break;
                    }
                    st.w_half = wv * arma::diagmat(arma::sqrt(wd)) * wv.t();
                    st.w_inv_half = wv * arma::diagmat(1.0 / arma::sqrt(wd)) * wv.t();
                    arma::mat lam = st.w_half * zm * st.w_half;
                    if (!arma::eig_sym(st.lam_d, st.lam_vecs, 0.5 * (lam + lam.t())) || st.lam_d.min() <= 0.0)
                        scale_ok = false;
                    break;
                }
                }
            }
            if (!scale_ok)
                break;

            // --- Schur complement ---------------------------------------------
            h.zeros();
            for (arma::uword bi = 0; bi < p.blocks.size(); bi++)
            {
                const auto &blk = p.blocks[bi];
                const auto &bd = bdata[bi];
                const auto &st = scal[bi];
                const arma::uword mj = bd.rows.size();
                if (mj == 0)
                    continue;

                if (blk.kind == cone_kind::nonneg)
                {
                    arma::vec w2 = st.w_nn % st.w_nn;
                    for (arma::uword r1 = 0; r1 < mj; r1++)
                        for (arma::uword r2 = r1; r2 < mj; r2++)
                        {
                            // sparse dot over shared coords
                            double acc = 0.0;
                            const auto &c1 = bd.cols[r1];
                            const auto &c2 = bd.cols[r2];
                            arma::uword i1 = 0, i2 = 0;
                            while (i1 < c1.size() && i2 < c2.size())
                            {
                                if (c1[i1].first < c2[i2].first)
                                    i1++;
                                else if (c2[i2].first < c1[i1].first)
                                    i2++;
                                else
                                {
                                    acc += c1[i1].second * c2[i2].second * w2(c1[i1].first);
                                    i1++;
                                    i2++;
                                }
                            }
                            if (acc != 0.0)
                            {
                                h(bd.rows[r1], bd.rows[r2]) += acc;
                                if (r1 != r2)
                                    h(bd.rows[r2], bd.rows[r1]) += acc;
                            }
                        }
                    continue;
                }

                arma::mat bmat(blk.coords(), mj);
                for (arma::uword r = 0; r < mj; r++)
                {
                    const auto &ents = bd.cols[r];
                    if (blk.kind == cone_kind::soc)
                    {
                        arma::vec a_loc(blk.size, arma::fill::zeros);
                        for (const auto &e : ents)
                            a_loc(e.first) = e.second;
                        bmat.col(r) = soc_f_apply(st, a_loc, true, false);
                    }
                    else
                    {
                        const arma::uword s = blk.size;
                        arma::mat sw(s, s);
                        if (ents.size() * 8 <= s)
                        {
                            sw.zeros();
                            const double inv_rt2 = 0.70710678118654752440;
                            for (const auto &e : ents)
                            {
                                auto [ii, jj] = bd.coord_ij[e.first];
                                if (ii == jj)
                                    sw += e.second * (st.w_half.col(ii) * st.w_half.col(ii).t());
                                else
                                {
                                    arma::mat t = (e.second * inv_rt2) * (st.w_half.col(ii) * st.w_half.col(jj).t());
                                    sw += t + t.t();
                                }
                            }
                        }
                        else
                        {
                            arma::vec a_loc(blk.coords(), arma::fill::zeros);
                            for (const auto &e : ents)
                                a_loc(e.first) = e.second;
                            sw = st.w_half * smat(a_loc, s) * st.w_half;
                        }
                        bmat.col(r) = svec(sw);
                    }
                }
                arma::mat hj = bmat.t() * bmat;
                arma::uvec idx(mj);
                for (arma::uword r = 0; r < mj; r++)
                    idx(r) = bd.rows[r];
                h.submat(idx, idx) += hj;
            }

            double reg = 1e-13 * std::max(1.0, arma::trace(h) / double(m));
            bool chol_ok = false;
            for (int attempt = 0; attempt < 8 && !chol_ok; attempt++)
            {
                chol_ok = arma::chol(h_chol, h + reg * arma::eye(m, m), "lower");
                if (!chol_ok)
                    reg *= 100.0;
            }
            if (!chol_ok)
                break;

            // --- directions ----------------------------------------------------
            arma::vec fc = apply_f(c_s, false, false);
            arma::vec afc = a_s * fc;
            arma::vec frd = apply_f(r_d, false, false);
            arma::vec afrd = a_s * frd;
            arma::vec u2 = chol_solve(b_s + afc);
            arma::vec fq = apply_f(a_st * u2, false, false) - fc;

            arma::vec lam = lambda_vec();
            arma::vec lam_sq = jordan_product(lam, lam);

            arma::vec dx, dy, dz;
            double dtau = 0.0, dkappa = 0.0;

            auto direction = [&](double sigma_w, const arma::vec &rc, double rtk)
            {
                arma::vec g = jordan_solve_lam(rc);
                arma::vec fg = apply_f(g, true, false);
                double om = 1.0 - sigma_w;
                arma::vec u1 = chol_solve(om * (afrd - r_p) - a_s * fg);
                arma::vec pvec = apply_f(a_st * u1, false, false) - om * frd + fg;
                double num = -om * r_g - arma::dot(b_s, u1) + arma::dot(c_s, pvec) + rtk / tau;
                double den = arma::dot(b_s, u2) - arma::dot(c_s, fq) + kappa / tau;
                dtau = num / den;
                dy = u1 + dtau * u2;
                dx = pvec + dtau * fq;
                dz = -(a_st * dy) + dtau * c_s + om * r_d;
                dkappa = (rtk - kappa * dtau) / tau;
            };

            // predictor
            direction(0.0, -lam_sq, -tau * kappa);

            double ap = std::min({step_len(x, dx), step_len(z, dz),
                                  (dtau < 0.0) ? -tau / dtau : inf,
                                  (dkappa < 0.0) ? -kappa / dkappa : inf});
            double alpha_aff = std::min(1.0, ap);
            double mu_aff = (arma::dot(x + alpha_aff * dx, z + alpha_aff * dz) +
                             (tau + alpha_aff * dtau) * (kappa + alpha_aff * dkappa)) /
                            nu;
            double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-8, 1.0 - 1e-8);

            // corrector with Mehrotra second-order term
            arma::vec dxt = apply_f(dx, true, true); // F^{-1/2} dx
            arma::vec dzt = apply_f(dz, true, false);
            arma::vec rc = sigma * mu * e_vec - lam_sq - jordan_product(dxt, dzt);
            double rtk = sigma * mu - tau * kappa - dtau * dkappa;
            direction(sigma, rc, rtk);

            double am = std::min({step_len(x, dx), step_len(z, dz),
                                  (dtau < 0.0) ? -tau / dtau : inf,
                                  (dkappa < 0.0) ? -kappa / dkappa : inf});
            double alpha = gamma_step * am;
            if (alpha >= 1.0 / gamma_step)
                alpha = 1.0;
            alpha = std::min(alpha, 1.0);
            if (!(alpha > 0.0) || !std::isfinite(alpha))
                break;

            x += alpha * dx;
            y += alpha * dy;
            z += alpha * dz;
            tau += alpha * dtau;
            kappa += alpha * dkappa;
        }

        // --- classification at exit -------------------------------------------
        out = best;
        out.status = (best_score <= opt.near_tol) ? solve_status::near_optimal
                                                  : solve_status::numerical_failure;
        return out;
    }

} // namespace irsense::ipm
