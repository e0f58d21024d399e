// SPDX-License-Identifier: Apache-2.0
//
// fdalab: reference-background residual laboratory for single-snapshot FDA-MIMO-GPR
// Copyright (C) 2026 The fdalab Authors
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

#ifndef FDALAB_COMMON_HPP
#define FDALAB_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fdalab
{
    using cplx = std::complex<double>;
    using CVec = Eigen::VectorXcd;
    using CMat = Eigen::MatrixXcd;
    using RVec = Eigen::VectorXd;

    inline constexpr double pi = std::numbers::pi;

    /// Vacuum permittivity (F/m).
    inline constexpr double eps0 = 8.8541878188e-12;
    /// Speed of light in vacuum (m/s).
    inline constexpr double c0 = 299792458.0;
    /// Vacuum permeability, tied to eps0 and c0 so that omega*sqrt(mu0*eps0) == omega/c0.
    inline constexpr double mu0 = 1.0 / (eps0 * c0 * c0);

    /// Invalid configuration or out-of-contract input (CLI exit code 2).
    class ConfigError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    /// Physically inadmissible or non-finite parameter values.
    class DomainError : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    /// Factorization failure, indefinite covariance, degenerate statistics (CLI exit code 3).
    class NumericalError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// 2-D position (x lateral, z depth, positive into the ground).
    struct Vec2
    {
        double x = 0.0;
        double z = 0.0;

        friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.z + b.z}; }
        friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.z - b.z}; }
        friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.z}; }
        friend bool operator==(const Vec2 &, const Vec2 &) = default;
    };

    inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.z - b.z); }

    inline double frobenius_sq(const CMat &A) { return A.squaredNorm(); }

    /// Real trace of a (nominally Hermitian) square matrix.
    inline double real_trace(const CMat &A) { return A.trace().real(); }

} // namespace fdalab

#endif // FDALAB_COMMON_HPP
