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
//
// Internal conic solver: homogeneous self-dual embedding with Nesterov-Todd
// scaling and a Mehrotra predictor-corrector, over products of nonnegative,
// second-order and positive-semidefinite cones.
//
//   minimize    c'x
//   subject to  A x = b,  x in K
//
// PSD blocks use scaled svec coordinates (off-diagonals times sqrt(2)) so all
// inner products are plain dot products.

#ifndef irsense_ipm_core_H
#define irsense_ipm_core_H

#include "irsense/common.hpp"

#include <vector>

namespace irsense::ipm
{

    enum class cone_kind
    {
        nonneg,
        soc,
        psd
    };

    struct cone_block
    {
        cone_kind kind = cone_kind::nonneg;
        arma::uword size = 0;   // nonneg: entries, soc: dim (>= 2), psd: matrix side
        arma::uword offset = 0; // first coordinate

        arma::uword coords() const
        {
            return (kind == cone_kind::psd) ? size * (size + 1) / 2 : size;
        }
        arma::uword rank() const
        {
            return (kind == cone_kind::soc) ? 2 : size;
        }
    };

    struct problem
    {
        std::vector<cone_block> blocks;
        arma::uword n_coord = 0;
        arma::vec c;
        arma::sp_mat a; // m x n_coord
        arma::vec b;
    };

    enum class solve_status
    {
        optimal,
        near_optimal,
        infeasible,
        unbounded,
        numerical_failure
    };

    struct options
    {
        double tol = 1e-8;
        double near_tol = 1e-6;
        arma::uword max_iter = 200;
        int verbosity = 0;
    };

    struct result
    {
        solve_status status = solve_status::numerical_failure;
        arma::vec x, y, z; // de-homogenized, original scaling
        double obj = 0.0;
        double pres = 0.0, dres = 0.0, gap = 0.0;
        arma::uword iters = 0;
    };

    // svec index of entry (i, j), i <= j, in an upper-triangular column-major layout
    inline arma::uword svec_index(arma::uword i, arma::uword j)
    {
        return j * (j + 1) / 2 + i;
    }

    inline arma::vec svec(const arma::mat &s)
    {
        const arma::uword n = s.n_rows;
        arma::vec v(n * (n + 1) / 2);
        const double rt2 = 1.4142135623730950488;
        for (arma::uword j = 0; j < n; j++)
        {
            for (arma::uword i = 0; i < j; i++)
                v(svec_index(i, j)) = rt2 * s(i, j);
            v(svec_index(j, j)) = s(j, j);
        }
        return v;
    }

    inline arma::mat smat(const arma::vec &v, arma::uword n)
    {
        arma::mat s(n, n);
        const double inv_rt2 = 0.70710678118654752440;
        for (arma::uword j = 0; j < n; j++)
        {
            for (arma::uword i = 0; i < j; i++)
            {
                double e = inv_rt2 * v(svec_index(i, j));
                s(i, j) = e;
                s(j, i) = e;
            }
            s(j, j) = v(svec_index(j, j));
        }
        return s;
    }

    result solve(const problem &p, const options &opt);

} // namespace irsense::ipm

#endif
