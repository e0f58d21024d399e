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


#ifndef FDALAB_STATS_HPP
#define FDALAB_STATS_HPP

#include "common.hpp"
#include "forward.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fdalab
{
    /// Hermitian PSD covariance with optional N x N block structure of M x M channel blocks.
    /// The eigendecomposition is computed lazily, once, and shared between copies.
    class HermitianCovariance
    {
    public:
        struct Eig
        {
            RVec values; ///< nonincreasing, tiny negatives clamped to zero
            CMat vectors; ///< columns ordered like `values`
        };

        HermitianCovariance() : HermitianCovariance(CMat::Zero(0, 0)) {}

        explicit HermitianCovariance(const CMat &R, std::size_t block_size = 0)
        {
            if (R.rows() != R.cols())
                throw ConfigError("HermitianCovariance: matrix is not square");
            const double nrm = R.norm();
            const double asym = (R - R.adjoint()).norm();
            if (!std::isfinite(nrm))
                throw NumericalError("HermitianCovariance: non-finite entries");
            if (asym > 1e-6 * nrm)
                throw NumericalError("HermitianCovariance: matrix is not Hermitian");
            R_ = 0.5 * (R + R.adjoint());
            block_size_ = block_size == 0 ? std::size_t(R.rows()) : block_size;
            if (R.rows() > 0 && std::size_t(R.rows()) % block_size_ != 0)
                throw ConfigError("HermitianCovariance: dimension is not a multiple of the block size");
            cache_ = std::make_shared<Cache>();
        }

        std::size_t dim() const { return std::size_t(R_.rows()); }
        std::size_t block_size() const { return block_size_; }
        std::size_t block_count() const { return block_size_ == 0 ? 0 : dim() / block_size_; }
        const CMat &matrix() const { return R_; }
        double trace() const { return real_trace(R_); }

        const Eig &eig() const
        {
            std::call_once(cache_->once, [this] { cache_->eig = decompose(R_); });
            return cache_->eig;
        }
        const RVec &eigenvalues() const { return eig().values; }
        const CMat &eigenvectors() const { return eig().vectors; }

        /// Eigendecomposition with nonincreasing eigenvalues; negatives below -1e-10 lambda_max are an error.
        static Eig decompose(const CMat &R)
        {
            Eig out;
            const auto n = R.rows();
            if (n == 0)
                return out;
            Eigen::SelfAdjointEigenSolver<CMat> es(R);
            if (es.info() != Eigen::Success)
                throw NumericalError("HermitianCovariance: eigendecomposition failed");
            out.values.resize(n);
            out.vectors.resize(n, n);
            // Eigen returns ascending order; reverse into nonincreasing order
            for (Eigen::Index i = 0; i < n; ++i)
            {
                out.values(i) = es.eigenvalues()(n - 1 - i);
                out.vectors.col(i) = es.eigenvectors().col(n - 1 - i);
            }
            const double lmax = std::max(out.values(0), 0.0);
            for (Eigen::Index i = 0; i < n; ++i)
            {
                if (out.values(i) < -1e-10 * lmax && out.values(i) < -std::numeric_limits<double>::min())
                    throw NumericalError("HermitianCovariance: matrix is indefinite (eigenvalue " +
                                         std::to_string(out.values(i)) + ")");
                if (out.values(i) < 0.0)
                    out.values(i) = 0.0;
            }
            return out;
        }

    private:
        struct Cache
        {
            std::once_flag once;
            Eig eig;
        };
        CMat R_;
        std::size_t block_size_ = 0;
        std::shared_ptr<Cache> cache_;
    };

    enum class CovNormalization
    {
        Unbiased,  ///< 1/(L-1)
        Population ///< 1/L
    };

    struct MeanCov
    {
        CVec mean;
        HermitianCovariance cov;
    };

    /// Sample mean and covariance of equal-length complex vectors.
    inline MeanCov sample_mean_cov(const std::vector<CVec> &samples, std::size_t block_size = 0,
                                   CovNormalization norm = CovNormalization::Unbiased)
    {
        const std::size_t L = samples.size();
        if (L < 2)
            throw NumericalError("sample_mean_cov: at least two samples are required");
        const Eigen::Index D = samples.front().size();
        CMat X(D, Eigen::Index(L));
        for (std::size_t i = 0; i < L; ++i)
        {
            if (samples[i].size() != D)
                throw ConfigError("sample_mean_cov: samples differ in length");
            X.col(Eigen::Index(i)) = samples[i];
        }
        CVec mean = X.rowwise().sum() / double(L);
        X.colwise() -= mean;
        const double denom = norm == CovNormalization::Unbiased ? double(L - 1) : double(L);
        CMat R = (X * X.adjoint()) / denom;
        return {std::move(mean), HermitianCovariance(R, block_size)};
    }

    /// Channel block R^(n,n2), 0-based indices.
    inline CMat block(const HermitianCovariance &R, std::size_t n, std::size_t n2)
    {
        const std::size_t N = R.block_count(), M = R.block_size();
        if (n >= N || n2 >= N)
            throw ConfigError("block: channel index out of range");
        return R.matrix().block(Eigen::Index(n * M), Eigen::Index(n2 * M), Eigen::Index(M), Eigen::Index(M));
    }

    /// Copy of R with every cross-channel block zeroed.
    inline CMat block_diagonal_part(const CMat &R, std::size_t M)
    {
        CMat B = CMat::Zero(R.rows(), R.cols());
        for (Eigen::Index off = 0; off < R.rows(); off += Eigen::Index(M))
            B.block(off, off, Eigen::Index(M), Eigen::Index(M)) = R.block(off, off, Eigen::Index(M), Eigen::Index(M));
        return B;
    }

    struct BlockCoupling
    {
        double chi_f = 0.0;   ///< +inf when the block diagonal vanishes but off-blocks do not
        double eps_blk = 0.0; ///< in [0,1]
    };

    inline BlockCoupling block_coupling_metrics(const HermitianCovariance &R)
    {
        const CMat B = block_diagonal_part(R.matrix(), R.block_size());
        const double diag_sq = B.squaredNorm();
        const double total_sq = R.matrix().squaredNorm();
        const double off_sq = (R.matrix() - B).squaredNorm();
        BlockCoupling out;
        if (diag_sq == 0.0)
            out.chi_f = off_sq == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        else
            out.chi_f = off_sq / diag_sq;
        out.eps_blk = total_sq == 0.0 ? 0.0 : std::sqrt(off_sq / total_sq);
        return out;
    }

    struct SpectralSummary
    {
        double trace = 0.0;
        double r_eff = 0.0;
        std::size_t p_0_9 = 0;
        double leading_ratio = 0.0;
    };

    /// Entropy effective rank, 90%-energy dimension and leading ratio of nonincreasing eigenvalues.
    inline SpectralSummary spectral_summary_from_eigenvalues(const RVec &lam)
    {
        SpectralSummary s;
        const double total = lam.sum();
        s.trace = total;
        if (!(total > 0.0))
            return s;
        double H = 0.0;
        for (Eigen::Index i = 0; i < lam.size(); ++i)
        {
            const double q = lam(i) / total;
            if (q > 0.0)
                H -= q * std::log(q);
        }
        s.r_eff = std::exp(H);
        // relative slack absorbs rounding in the cumulative sum (e.g. identity matrices)
        const double target = 0.9 * total * (1.0 - 1e-12);
        double cum = 0.0;
        for (Eigen::Index i = 0; i < lam.size(); ++i)
        {
            cum += lam(i);
            if (cum >= target)
            {
                s.p_0_9 = std::size_t(i) + 1;
                break;
            }
        }
        s.leading_ratio = lam(0) / total;
        return s;
    }

    inline SpectralSummary spectral_summary(const HermitianCovariance &R)
    {
        if (R.dim() == 0)
            return {};
        return spectral_summary_from_eigenvalues(R.eigenvalues());
    }

    /// D_f = sum ||c_n - mean||^2 / sum ||c_n||^2; nullopt for zero energy.
    inline std::optional<double> frequency_block_discrepancy(const ObservationResponse &c)
    {
        const auto &blocks = c.per_channel();
        if (blocks.empty())
            return std::nullopt;
        CVec mean = CVec::Zero(blocks.front().size());
        double energy = 0.0;
        for (const auto &b : blocks)
        {
            mean += b;
            energy += b.squaredNorm();
        }
        if (!(energy > 0.0))
            return std::nullopt;
        mean /= double(blocks.size());
        double dev = 0.0;
        for (const auto &b : blocks)
            dev += (b - mean).squaredNorm();
        return dev / energy;
    }

    // ---------------------------------------------------------------------------------------------
    // Matrix I/O
    // ---------------------------------------------------------------------------------------------

    inline std::string format_double(double v)
    {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    /// Row-major CSV with "re,im" cell pairs.
    inline void write_matrix_csv(const std::string &path, const CMat &A)
    {
        std::ofstream f(path, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot open '" + path + "' for writing");
        for (Eigen::Index r = 0; r < A.rows(); ++r)
        {
            for (Eigen::Index c = 0; c < A.cols(); ++c)
            {
                if (c)
                    f << ',';
                f << format_double(A(r, c).real()) << ',' << format_double(A(r, c).imag());
            }
            f << '\n';
        }
        if (!f)
            throw std::runtime_error("write failed for '" + path + "'");
    }

    inline CMat read_matrix_csv(const std::string &path)
    {
        std::ifstream f(path);
        if (!f)
            throw std::runtime_error("cannot open '" + path + "' for reading");
        std::vector<std::vector<cplx>> rows;
        std::string line;
        while (std::getline(f, line))
        {
            if (line.empty())
                continue;
            std::vector<double> vals;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ','))
                vals.push_back(std::stod(cell));
            if (vals.size() % 2 != 0)
                throw ConfigError("read_matrix_csv: odd number of cells in '" + path + "'");
            std::vector<cplx> row;
            for (std::size_t i = 0; i < vals.size(); i += 2)
                row.emplace_back(vals[i], vals[i + 1]);
            if (!rows.empty() && row.size() != rows.front().size())
                throw ConfigError("read_matrix_csv: ragged rows in '" + path + "'");
            rows.push_back(std::move(row));
        }
        CMat A(Eigen::Index(rows.size()), rows.empty() ? 0 : Eigen::Index(rows.front().size()));
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < rows[r].size(); ++c)
                A(Eigen::Index(r), Eigen::Index(c)) = rows[r][c];
        return A;
    }

    namespace detail
    {
        template <class T>
        void put_le(std::ostream &os, T v)
        {
            auto bits = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
            if constexpr (std::endian::native == std::endian::big)
                std::reverse(bits.begin(), bits.end());
            os.write(reinterpret_cast<const char *>(bits.data()), sizeof(T));
        }

        template <class T>
        T get_le(std::istream &is)
        {
            std::array<unsigned char, sizeof(T)> bits{};
            if (!is.read(reinterpret_cast<char *>(bits.data()), sizeof(T)))
                throw ConfigError("binary covariance: truncated input");
            if constexpr (std::endian::native == std::endian::big)
                std::reverse(bits.begin(), bits.end());
            return std::bit_cast<T>(bits);
        }
    } // namespace detail

    /// Binary container: u64 dim, u64 block_size, dim*dim row-major (re, im) doubles, little-endian.
    inline void write_covariance_binary(const std::string &path, const HermitianCovariance &R)
    {
        std::ofstream f(path, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot open '" + path + "' for writing");
        detail::put_le<std::uint64_t>(f, R.dim());
        detail::put_le<std::uint64_t>(f, R.block_size());
        for (Eigen::Index r = 0; r < R.matrix().rows(); ++r)
            for (Eigen::Index c = 0; c < R.matrix().cols(); ++c)
            {
                detail::put_le<double>(f, R.matrix()(r, c).real());
                detail::put_le<double>(f, R.matrix()(r, c).imag());
            }
        if (!f)
            throw std::runtime_error("write failed for '" + path + "'");
    }

    inline HermitianCovariance read_covariance_binary(const std::string &path)
    {
        std::ifstream f(path, std::ios::binary);
        if (!f)
            throw std::runtime_error("cannot open '" + path + "' for reading");
        const auto dim = detail::get_le<std::uint64_t>(f);
        const auto bs = detail::get_le<std::uint64_t>(f);
        if (dim > (1u << 16))
            throw ConfigError("binary covariance: implausible dimension");
        const auto n = static_cast<Eigen::Index>(dim);
        CMat A(n, n);
        for (Eigen::Index r = 0; r < A.rows(); ++r)
            for (Eigen::Index c = 0; c < A.cols(); ++c)
            {
                const double re = detail::get_le<double>(f);
                const double im = detail::get_le<double>(f);
                A(r, c) = {re, im};
            }
        return HermitianCovariance(A, std::size_t(bs));
    }

} // namespace fdalab

#endif // FDALAB_STATS_HPP
