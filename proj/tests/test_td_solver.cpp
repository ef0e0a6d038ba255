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

// Covered tests:
//   - rank penalty: zero on rank-one, trace-minus-top on general PSD,
//     non-PSD rejection
//   - spectral-norm linearization: expansion-point identity, minorant
//     property over random pairs, rank-one gradient
//   - MRT beamformer: power normalization, Cauchy-Schwarz gain identity,
//     single-antenna phase, randomized optimality, degenerate rejection
//   - phase-only design: single-element and two-element closed forms,
//     unit-modulus and rank-residual exit invariants, monotone inner
//     objective, quantized solution vs exhaustive grid, SDR bound sandwich
//   - scheme driver: single-target equivalence, reorder invariance,
//     trace CSV emission

#include <catch2/catch_amalgamated.hpp>

#include <armadillo>
#include <cstdio>
#include <fstream>

#include "irsense/array_channel.hpp"
#include "irsense/common.hpp"
#include "irsense/td_solver.hpp"

using namespace irsense;

namespace
{

    PenaltyConfig quick_config(std::uint64_t seed = 1)
    {
        PenaltyConfig c;
        c.seed = seed;
        return c;
    }

    arma::cx_vec quantize_phases(const arma::cx_vec &v, arma::uword levels)
    {
        arma::cx_vec q(v.n_elem);
        for (arma::uword n = 0; n < v.n_elem; n++)
        {
            double ph = std::arg(v(n));
            double step = 2.0 * irsense::pi / double(levels);
            double snapped = std::round(ph / step) * step;
            q(n) = std::polar(1.0, snapped);
        }
        return q;
    }

} // namespace

TEST_CASE("rank penalty vanishes on rank-one matrices and matches eigenvalues", "[td_solver]")
{
    rng_stream rng(81);
    arma::cx_vec v = rng.unit_phases(6);
    REQUIRE(std::abs(rank_penalty(arma::cx_mat(v * v.t()))) < 1e-10);

    REQUIRE(rank_penalty(arma::cx_mat(arma::eye<arma::cx_mat>(2, 2))) == Catch::Approx(1.0).margin(1e-12));

    // rank-3 with planted spectrum
    arma::vec d = {0.0, 0.0, 0.5, 1.5, 4.0};
    arma::cx_mat b = rng.cnormal_mat(5, 5);
    arma::cx_mat qmat, rmat;
    arma::qr(qmat, rmat, b);
    arma::cx_mat m = qmat * arma::diagmat(arma::cx_vec(d, arma::vec(5, arma::fill::zeros))) * qmat.t();
    REQUIRE(rank_penalty(m) == Catch::Approx(arma::sum(d) - d.max()).margin(1e-10));

    arma::cx_mat notpsd(2, 2, arma::fill::zeros);
    notpsd(0, 0) = -1.0;
    notpsd(1, 1) = 1.0;
    REQUIRE_THROWS_AS(rank_penalty(notpsd), irsense::error);
}

TEST_CASE("spectral-norm linearization is a minorant with the documented offset", "[td_solver]")
{
    // expansion-point identity for the 1x1 identity
    SpectralLinearization lin1 = linearize_spectral_norm(arma::cx_mat(arma::eye<arma::cx_mat>(1, 1)));
    REQUIRE(lin1.value(arma::cx_mat(arma::eye<arma::cx_mat>(1, 1))) == Catch::Approx(-1.0).margin(1e-12));

    rng_stream rng(82);
    for (int trial = 0; trial < 1000; trial++)
    {
        arma::uword n = 2 + arma::uword(rng.uniform(0.0, 4.0));
        arma::cx_mat a = rng.cnormal_mat(n, n), b = rng.cnormal_mat(n, n);
        arma::cx_mat vref = a * a.t();
        arma::cx_mat v = b * b.t();
        SpectralLinearization lin = linearize_spectral_norm(vref);
        double spec = arma::eig_sym(v).max();
        double spec_ref = arma::eig_sym(vref).max();
        // value() sits a fixed 2*||v_ref||_2 below the spectral-norm tangent
        REQUIRE(spec - (lin.value(v) + 2.0 * spec_ref) >= -1e-9 * (1.0 + spec));
        REQUIRE(lin.value(vref) == Catch::Approx(-spec_ref).margin(1e-9 * (1.0 + spec_ref)));
    }

    // rank-one reference: gradient is the projector onto its range
    arma::cx_vec u = rng.cnormal_vec(4);
    u /= arma::norm(u, 2);
    SpectralLinearization lin = linearize_spectral_norm(arma::cx_mat(3.0 * u * u.t()));
    REQUIRE(arma::norm(lin.gradient - u * u.t(), "fro") < 1e-9);
}

TEST_CASE("MRT beamformer saturates power and achieves the alignment gain", "[td_solver]")
{
    rng_stream rng(83);
    const double p_max = 2.0;
    for (int trial = 0; trial < 20; trial++)
    {
        arma::uword n = 4, m = 3;
        arma::cx_mat q = rng.cnormal_mat(n, m);
        PhaseConfig v{rng.unit_phases(n), PhaseConfig::mode::unit_modulus};
        Beamformer bf = mrt_beamformer(v, q, p_max);
        REQUIRE(arma::norm(arma::cx_vec(bf.w.col(0)), 2) == Catch::Approx(std::sqrt(p_max)).epsilon(1e-10));
        double gain = beam_gain(v.v, q, arma::cx_vec(bf.w.col(0)));
        double expect = p_max * std::pow(arma::norm(q.t() * v.v, 2), 2);
        REQUIRE(gain == Catch::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("single-antenna MRT reduces to a scaled phase", "[td_solver]")
{
    rng_stream rng(84);
    arma::cx_mat q = rng.cnormal_mat(3, 1);
    PhaseConfig v{rng.unit_phases(3), PhaseConfig::mode::unit_modulus};
    Beamformer bf = mrt_beamformer(v, q, 4.0);
    REQUIRE(std::abs(std::abs(bf.w(0, 0)) - 2.0) < 1e-12);
    std::complex<double> expected = arma::as_scalar(q.t() * v.v);
    expected /= std::abs(expected);
    REQUIRE(std::abs(bf.w(0, 0) / std::abs(bf.w(0, 0)) - expected) < 1e-12);
}

TEST_CASE("no random unit-power beamformer beats MRT", "[td_solver]")
{
    rng_stream rng(85);
    arma::cx_mat q = rng.cnormal_mat(6, 4);
    PhaseConfig v{rng.unit_phases(6), PhaseConfig::mode::unit_modulus};
    const double p_max = 1.7;
    Beamformer bf = mrt_beamformer(v, q, p_max);
    double best = beam_gain(v.v, q, arma::cx_vec(bf.w.col(0)));
    for (int trial = 0; trial < 10000; trial++)
    {
        arma::cx_vec w = rng.cnormal_vec(4);
        w *= std::sqrt(p_max) / arma::norm(w, 2);
        REQUIRE(beam_gain(v.v, q, w) <= best * (1.0 + 1e-12));
    }
}

TEST_CASE("MRT rejects a vanishing effective channel", "[td_solver]")
{
    arma::cx_mat q(3, 2, arma::fill::zeros);
    PhaseConfig v{arma::cx_vec(3, arma::fill::ones), PhaseConfig::mode::unit_modulus};
    REQUIRE_THROWS_AS(mrt_beamformer(v, q, 1.0), irsense::error);
}

TEST_CASE("single-element phase design reaches the full channel power", "[td_solver]")
{
    rng_stream rng(86);
    arma::cx_mat q = rng.cnormal_mat(1, 3);
    TdPhaseResult r = solve_td_phase(q, quick_config());
    REQUIRE(r.converged);
    REQUIRE(std::abs(std::abs(r.phases.v(0)) - 1.0) < 1e-9);
    REQUIRE(r.channel_gain == Catch::Approx(std::pow(arma::norm(q, "fro"), 2)).epsilon(1e-6));
}

TEST_CASE("two-element phase design aligns the entries coherently", "[td_solver]")
{
    rng_stream rng(87);
    for (int trial = 0; trial < 3; trial++)
    {
        arma::cx_mat q = rng.cnormal_mat(2, 1);
        TdPhaseResult r = solve_td_phase(q, quick_config(10 + trial));
        double expect = std::pow(std::abs(q(0, 0)) + std::abs(q(1, 0)), 2);
        REQUIRE(r.converged);
        REQUIRE(r.channel_gain == Catch::Approx(expect).epsilon(1e-5));
    }
}

TEST_CASE("phase design exit state satisfies the advertised invariants", "[td_solver]")
{
    rng_stream rng(88);
    arma::cx_mat q = rng.cnormal_mat(8, 4);
    PenaltyConfig cfg = quick_config(3);
    TdPhaseResult r = solve_td_phase(q, cfg);
    REQUIRE(r.converged);
    REQUIRE(r.rank_residual <= cfg.eps_rank);
    for (arma::uword n = 0; n < 8; n++)
        REQUIRE(std::abs(std::abs(r.phases.v(n)) - 1.0) <= 1e-9);
    // inner objective is non-decreasing within each fixed-penalty stretch
    for (size_t i = 1; i < r.trace.size(); i++)
        if (r.trace[i].outer == r.trace[i - 1].outer && r.trace[i].eta == r.trace[i - 1].eta)
            REQUIRE(r.trace[i].objective >= r.trace[i - 1].objective - 1e-6 * (1.0 + std::abs(r.trace[i - 1].objective)));
}

TEST_CASE("quantized four-element design stays near the exhaustive grid optimum", "[td_solver]")
{
    rng_stream rng(89);
    arma::cx_mat q = rng.cnormal_mat(4, 2);
    TdPhaseResult r = solve_td_phase(q, quick_config(5));
    const arma::uword levels = 16;
    arma::cx_vec snapped = quantize_phases(r.phases.v, levels);
    double mine = std::pow(arma::norm(q.t() * snapped, 2), 2);

    double best = 0.0;
    arma::cx_vec v(4);
    v(0) = 1.0; // global phase freedom: pin the first entry
    for (arma::uword i1 = 0; i1 < levels; i1++)
        for (arma::uword i2 = 0; i2 < levels; i2++)
            for (arma::uword i3 = 0; i3 < levels; i3++)
            {
                v(1) = std::polar(1.0, 2.0 * irsense::pi * double(i1) / double(levels));
                v(2) = std::polar(1.0, 2.0 * irsense::pi * double(i2) / double(levels));
                v(3) = std::polar(1.0, 2.0 * irsense::pi * double(i3) / double(levels));
                best = std::max(best, std::pow(arma::norm(q.t() * v, 2), 2));
            }
    REQUIRE(mine >= 0.98 * best);
}

TEST_CASE("relaxed bound sandwiches the unit-modulus design", "[td_solver]")
{
    rng_stream rng(90);
    arma::cx_mat q = rng.cnormal_mat(8, 3);
    TdPhaseResult r = solve_td_phase(q, quick_config(6));
    double bound = solve_td_sdr_bound(q);
    REQUIRE(r.channel_gain <= bound * (1.0 + 1e-7));
    REQUIRE(r.channel_gain >= 0.90 * bound);

    // two-element bound equals the coherent-alignment closed form
    arma::cx_mat q2 = rng.cnormal_mat(2, 1);
    double expect = std::pow(std::abs(q2(0, 0)) + std::abs(q2(1, 0)), 2);
    REQUIRE(solve_td_sdr_bound(q2) == Catch::Approx(expect).epsilon(1e-6));
}

TEST_CASE("scheme driver runs per-target designs independently", "[td_solver]")
{
    SceneChannels scene;
    scene.geom.m = 3;
    scene.geom.n_x = 2;
    scene.geom.n_y = 2;
    rng_stream rng(91);
    scene.g_bs_irs = rng.cnormal_mat(4, 3);
    scene.targets = {{0.4, 0.9}, {-0.7, 1.1}};
    const double p_max = 1.0;
    PenaltyConfig cfg = quick_config(7);
    auto res = td_scheme(scene, p_max, cfg);
    REQUIRE(res.size() == 2);
    for (const auto &t : res)
    {
        REQUIRE(t.phase.converged);
        REQUIRE(t.gain == Catch::Approx(p_max * t.phase.channel_gain).epsilon(1e-6));
    }

    // single-target run equals the direct phase solve with the derived seed
    SceneChannels one = scene;
    one.targets = {scene.targets[0]};
    auto single = td_scheme(one, p_max, cfg);
    PenaltyConfig direct = cfg;
    direct.seed = derive_seed(cfg.seed, 0x7D00);
    arma::cx_mat q = effective_channel(scene.geom, scene.targets[0], scene.g_bs_irs);
    TdPhaseResult ref = solve_td_phase(q, direct);
    REQUIRE(single[0].phase.channel_gain == Catch::Approx(ref.channel_gain).epsilon(1e-12));

    // reordering targets permutes the per-target results
    SceneChannels swapped = scene;
    std::swap(swapped.targets[0], swapped.targets[1]);
    auto res2 = td_scheme(swapped, p_max, cfg);
    REQUIRE(res2[1].gain == Catch::Approx(res[0].gain).epsilon(1e-12));
    REQUIRE(res2[0].gain == Catch::Approx(res[1].gain).epsilon(1e-12));
}

TEST_CASE("trace CSV is written when a path is configured", "[td_solver]")
{
    rng_stream rng(92);
    arma::cx_mat q = rng.cnormal_mat(3, 2);
    PenaltyConfig cfg = quick_config(8);
    cfg.trace_path = "td_trace_test.csv";
    TdPhaseResult r = solve_td_phase(q, cfg);
    std::ifstream in(cfg.trace_path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    REQUIRE(header == "outer,inner,eta,objective,rank_residual,degenerate_top");
    size_t lines = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty())
            lines++;
    REQUIRE(lines == r.trace.size());
    std::remove(cfg.trace_path.c_str());
}
