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

#include "common.hpp"

namespace irsense
{

    // Standard real symmetric embedding [[Re H, -Im H], [Im H, Re H]] of a
    // Hermitian matrix. Positive semidefiniteness is preserved and every
    // eigenvalue appears with doubled multiplicity, so traces double.
    arma::mat complex_to_real_embedding(const arma::cx_mat &h);

    // Inverse map: averages the two diagonal and the two off-diagonal d x d
    // panels of a 2d x 2d symmetric matrix and returns the Hermitian part.
    arma::cx_mat real_to_complex_recovery(const arma::mat &s);

    // Hermitian basis whose Re-trace coordinates are (W_ii; rt2 Re W_ij;
    // rt2 Im W_ij), an isometry onto R^{d^2} for the Frobenius norm. One
    // equality row per element ties a full Hermitian matrix relation.
    std::vector<arma::cx_mat> hermitian_basis(arma::uword d);

    enum class ConicStatus
    {
        optimal,
        near_optimal,
        infeasible,
        unbounded,
        numerical_failure
    };

    struct ConicTolerances
    {
        double feasibility = 1e-8;
        double gap = 1e-8;
        arma::uword max_iterations = 200;
        int verbosity = 0;
    };

    struct ConicSolution
    {
        ConicStatus status = ConicStatus::numerical_failure;
        double objective = 0.0;
        std::vector<arma::cx_mat> psd_values;
        std::vector<double> scalar_values;
        std::vector<arma::cx_vec> cvec_values;
        std::vector<arma::vec> soc_values;
        double primal_residual = 0.0;
        double dual_residual = 0.0;
        double duality_gap = 0.0;
        arma::uword iterations = 0;

        bool usable() const
        {
            return status == ConicStatus::optimal || status == ConicStatus::near_optimal;
        }
    };

    class ConicProblem;
    ConicSolution solve(const ConicProblem &problem, const ConicTolerances &tol = {});

    // Declarative description of a linear conic program over complex
    // Hermitian-PSD matrix variables, box-bounded real scalars, complex
    // vectors with per-entry modulus bounds, and real second-order-cone
    // vectors x with x(0) >= ||x(1:)||. All trace and vector coefficients
    // contribute Re{Tr(C^H X)} resp. Re{c^H v}; the Hermitian part of a
    // matrix coefficient is what enters the problem.
    class ConicProblem
    {
    public:
        enum class RowSense
        {
            eq,
            le,
            ge
        };

        arma::uword add_psd_var(arma::uword dim);
        arma::uword add_scalar_var(double lower, double upper);
        arma::uword add_cvec_var(arma::uword dim, double entry_modulus_bound);
        arma::uword add_soc_var(arma::uword dim);

        void set_maximize(bool maximize);
        void objective_constant(double value);
        void objective_trace(arma::uword psd_id, const arma::cx_mat &coeff);
        void objective_scalar(arma::uword scalar_id, double coeff);
        void objective_cvec(arma::uword cvec_id, const arma::cx_vec &coeff);
        void objective_soc(arma::uword soc_id, arma::uword index, double coeff);

        arma::uword add_row(RowSense sense, double rhs);
        void row_trace(arma::uword row, arma::uword psd_id, const arma::cx_mat &coeff);
        void row_scalar(arma::uword row, arma::uword scalar_id, double coeff);
        void row_cvec(arma::uword row, arma::uword cvec_id, const arma::cx_vec &coeff);
        void row_soc(arma::uword row, arma::uword soc_id, arma::uword index, double coeff);

        // Convex quadratic cap v^H W v <= bound with W Hermitian PSD.
        void add_quadratic_bound(arma::uword cvec_id, const arma::cx_mat &weight, double bound);

        arma::uword psd_count() const { return psd_dims_.size(); }
        arma::uword scalar_count() const { return scalar_bounds_.size(); }
        arma::uword cvec_count() const { return cvec_dims_.size(); }
        arma::uword soc_count() const { return soc_dims_.size(); }
        arma::uword row_count() const { return rows_.size(); }

        void dump_json(const std::string &path) const;

        friend ConicSolution solve(const ConicProblem &problem, const ConicTolerances &tol);

    private:
        struct TraceTerm
        {
            arma::uword var;
            arma::cx_mat coeff;
        };
        struct ScalarTerm
        {
            arma::uword var;
            double coeff;
        };
        struct CvecTerm
        {
            arma::uword var;
            arma::cx_vec coeff;
        };
        struct SocTerm
        {
            arma::uword var;
            arma::uword index;
            double coeff;
        };
        struct Row
        {
            RowSense sense;
            double rhs;
            std::vector<TraceTerm> traces;
            std::vector<ScalarTerm> scalars;
            std::vector<CvecTerm> cvecs;
            std::vector<SocTerm> socs;
        };
        struct Quad
        {
            arma::uword var;
            arma::cx_mat weight;
            double bound;
        };

        std::vector<arma::uword> psd_dims_;
        std::vector<std::pair<double, double>> scalar_bounds_;
        std::vector<std::pair<arma::uword, double>> cvec_dims_; // (dim, modulus bound)
        std::vector<arma::uword> soc_dims_;
        std::vector<Row> rows_;
        std::vector<Quad> quads_;
        std::vector<TraceTerm> obj_traces_;
        std::vector<ScalarTerm> obj_scalars_;
        std::vector<CvecTerm> obj_cvecs_;
        std::vector<SocTerm> obj_socs_;
        double obj_const_ = 0.0;
        bool maximize_ = false;

        void check_psd(arma::uword id) const;
        void check_scalar(arma::uword id) const;
        void check_cvec(arma::uword id) const;
        void check_soc(arma::uword id, arma::uword index) const;
        void check_row(arma::uword row) const;
    };

} // namespace irsense
