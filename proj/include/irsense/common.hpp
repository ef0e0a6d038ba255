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

#ifndef irsense_common_H
#define irsense_common_H

#include <armadillo>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace irsense
{

    // Error categories, mirrored 1:1 by the C API status codes
    enum class errc
    {
        invalid_argument,
        dimension_mismatch,
        degenerate,
        solver_failure,
        infeasible,
        io_failure,
        internal
    };

    class error : public std::runtime_error
    {
    public:
        error(errc code, const std::string &what) : std::runtime_error(what), code_(code) {}
        errc code() const { return code_; }

    private:
        errc code_;
    };

    [[noreturn]] inline void raise(errc code, const std::string &what)
    {
        throw error(code, what);
    }

    // Deterministic seeded RNG stream. Gaussian draws use an explicit Box-Muller
    // transform so that identical seeds give identical samples independent of the
    // standard library's distribution implementations.
    class rng_stream
    {
    public:
        explicit rng_stream(std::uint64_t seed) : state(seed == 0ULL ? 0x9E3779B97F4A7C15ULL : seed)
        {
            for (int i = 0; i < 4; i++)
                raw(); // decorrelate nearby seeds
        }

        std::uint64_t raw()
        {
            // splitmix64 step
            std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            return z ^ (z >> 31);
        }

        double uniform() // [0, 1)
        {
            return double(raw() >> 11) * 0x1.0p-53;
        }

        double uniform(double lo, double hi)
        {
            return lo + (hi - lo) * uniform();
        }

        double normal()
        {
            if (have_spare)
            {
                have_spare = false;
                return spare;
            }
            double u1 = 0.0;
            while (u1 <= 0.0)
                u1 = uniform();
            double u2 = uniform();
            double r = std::sqrt(-2.0 * std::log(u1));
            double a = 6.283185307179586476925286766559 * u2;
            spare = r * std::sin(a);
            have_spare = true;
            return r * std::cos(a);
        }

        arma::cx_double cnormal() // CN(0, 1)
        {
            double re = normal(), im = normal();
            return arma::cx_double(re * 0.70710678118654752440, im * 0.70710678118654752440);
        }

        arma::vec normal_vec(arma::uword n)
        {
            arma::vec out(n);
            for (arma::uword i = 0; i < n; i++)
                out(i) = normal();
            return out;
        }

        arma::cx_vec cnormal_vec(arma::uword n)
        {
            arma::cx_vec out(n);
            for (arma::uword i = 0; i < n; i++)
                out(i) = cnormal();
            return out;
        }

        arma::cx_mat cnormal_mat(arma::uword rows, arma::uword cols)
        {
            arma::cx_mat out(rows, cols);
            for (arma::uword c = 0; c < cols; c++)
                for (arma::uword r = 0; r < rows; r++)
                    out(r, c) = cnormal();
            return out;
        }

        // Random phases in [0, 2*pi)
        arma::cx_vec unit_phases(arma::uword n)
        {
            arma::cx_vec out(n);
            for (arma::uword i = 0; i < n; i++)
            {
                double a = uniform() * 6.283185307179586476925286766559;
                out(i) = arma::cx_double(std::cos(a), std::sin(a));
            }
            return out;
        }

    private:
        std::uint64_t state;
        bool have_spare = false;
        double spare = 0.0;
    };

    // Independent child seed for trial/job index "salt"
    inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t salt)
    {
        std::uint64_t z = root ^ (0x94D049BB133111EBULL * (salt + 1ULL));
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    inline constexpr double pi = 3.14159265358979323846264338327950288;

} // namespace irsense

#endif
