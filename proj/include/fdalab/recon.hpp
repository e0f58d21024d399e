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


#ifndef FDALAB_RECON_HPP
#define FDALAB_RECON_HPP

#include "common.hpp"
#include "stats.hpp"

#include <Eigen/Cholesky>

#include <optional>
#include <vector>

namespace fdalab
{
    /// Vertical stack of H_n S_Omega in channel order (column j <-> selection[j]).
    inline CMat build_H_an(const std::vector<CMat> &Hs, const std::vector<std::size_t> &selection)
    {
        if (Hs.empty())
            throw ConfigError("build_H_an: no channel matrices");
        const Eigen::Index M = Hs.front().rows(), P = Hs.front().cols();
        for (const auto &H : Hs)
            if (H.rows() != M || H.cols() != P)
                throw ConfigError("build_H_an: channel matrices differ in shape");
        if (selection.empty())
            throw ConfigError("build_H_an: empty anomaly selection");
        CMat out(M * Eigen::Index(Hs.size()), Eigen::Index(selection.size()));
        for (std::size_t n = 0; n < Hs.size(); ++n)
            for (std::size_t j = 0; j < selection.size(); ++j)
            {
                if (Eigen::Index(selection[j]) >= P)
                    throw ConfigError("build_H_an: selection index out of range");
                out.block(Eigen::Index(n) * M, Eigen::Index(j), M, 1) = Hs[n].col(Eigen::Index(selection[j]));
            }
        return out;
    }

    /// Zero-order Tikhonov receiver G = (Q + lambda^2 I)^{-1} H_an^H with Q = H_an^H H_an.
    class TikhonovReceiver
    {
    public:
        TikhonovReceiver(CMat H_an, double lambda, std::size_t block_size = 0) : H_(std::move(H_an)), lambda_(lambda)
        {
            if (!(lambda > 0.0) || !std::isfinite(lambda))
                throw ConfigError("TikhonovReceiver: lambda must be positive and finite");
            block_size_ = block_size == 0 ? std::size_t(H_.rows()) : block_size;
            if (std::size_t(H_.rows()) % block_size_ != 0)
                throw ConfigError("TikhonovReceiver: row count is not a multiple of the block size");
            const Eigen::Index P = H_.cols();
            Q_ = H_.adjoint() * H_;
            Q_ = 0.5 * (Q_ + Q_.adjoint()).eval();
            normal_ = Q_ + (lambda * lambda) * CMat::Identity(P, P);
            llt_.compute(normal_);
            if (llt_.info() != Eigen::Success)
                throw NumericalError("TikhonovReceiver: Cholesky factorization of the normal matrix failed");
            auto e = HermitianCovariance::decompose(Q_);
            d_ = std::move(e.values);
            U_ = std::move(e.vectors);
            normal_inv_ = llt_.solve(CMat::Identity(P, P));
            G_ = llt_.solve(H_.adjoint());
        }

        double lambda() const { return lambda_; }
        const CMat &H_an() const { return H_; }
        const CMat &Q() const { return Q_; }
        const CMat &normal_matrix() const { return normal_; }
        const CMat &normal_inverse() const { return normal_inv_; }
        const CMat &G() const { return G_; }
        const RVec &d() const { return d_; }
        const CMat &U() const { return U_; }
        std::size_t block_size() const { return block_size_; }
        std::size_t block_count() const { return std::size_t(H_.rows()) / block_size_; }
        std::size_t P_an() const { return std::size_t(H_.cols()); }

        /// Rows of H_an belonging to channel n (0-based): H_n S_Omega.
        CMat channel_block(std::size_t n) const
        {
            return H_.block(Eigen::Index(n * block_size_), 0, Eigen::Index(block_size_), H_.cols());
        }

        /// Solves (Q + lambda^2 I) x = rhs.
        CVec solve_normal(const CVec &rhs) const { return llt_.solve(rhs); }

        CVec apply(const CVec &y) const
        {
            if (y.size() != H_.rows())
                throw ConfigError("tikhonov_apply: observation length mismatch");
            return llt_.solve(H_.adjoint() * y);
        }

    private:
        CMat H_;
        double lambda_;
        std::size_t block_size_;
        CMat Q_, normal_, normal_inv_, G_, U_;
        RVec d_;
        Eigen::LLT<CMat> llt_;
    };

    inline CVec tikhonov_apply(const TikhonovReceiver &rcv, const CVec &y) { return rcv.apply(y); }

    /// Spectral norm of G: max_i sqrt(d_i) / (d_i + lambda^2).
    inline double receiver_norm(const TikhonovReceiver &rcv)
    {
        const double l2 = rcv.lambda() * rcv.lambda();
        double best = 0.0;
        for (Eigen::Index i = 0; i < rcv.d().size(); ++i)
            best = std::max(best, std::sqrt(rcv.d()(i)) / (rcv.d()(i) + l2));
        return best;
    }

    /// ||G H_an - I||_F / ||I||_F from the spectrum of Q.
    inline double resolution_error(const TikhonovReceiver &rcv)
    {
        const double l2 = rcv.lambda() * rcv.lambda();
        double s = 0.0;
        for (Eigen::Index i = 0; i < rcv.d().size(); ++i)
        {
            const double r = l2 / (rcv.d()(i) + l2);
            s += r * r;
        }
        return std::sqrt(s / double(rcv.d().size()));
    }

    struct ErrorDecomposition
    {
        CVec bias;   ///< (G H_an - I) xi_an
        CVec pseudo; ///< G c_sh
        CVec noise;  ///< G n
    };

    inline ErrorDecomposition error_decomposition(const TikhonovReceiver &rcv, const CVec &xi_an, const CVec &c_sh,
                                                  const CVec &noise)
    {
        if (xi_an.size() != rcv.H_an().cols() || c_sh.size() != rcv.H_an().rows() || noise.size() != rcv.H_an().rows())
            throw ConfigError("error_decomposition: dimension mismatch");
        return {rcv.G() * (rcv.H_an() * xi_an) - xi_an, rcv.G() * c_sh, rcv.G() * noise};
    }

    struct ReconMoments
    {
        CVec mean;
        HermitianCovariance cov;
        double mse_energy = 0.0;
    };

    /// Reconstruction-domain mean G m, covariance G R G^H and E||e||^2 = ||G m||^2 + tr(G R G^H).
    inline ReconMoments recon_moments(const TikhonovReceiver &rcv, const CVec &m_sh, const HermitianCovariance &R_sh)
    {
        if (m_sh.size() != rcv.H_an().rows() || Eigen::Index(R_sh.dim()) != rcv.H_an().rows())
            throw ConfigError("recon_moments: dimension mismatch");
        CVec mean = rcv.G() * m_sh;
        CMat cov = rcv.G() * R_sh.matrix() * rcv.G().adjoint();
        ReconMoments out{mean, HermitianCovariance(cov), 0.0};
        out.mse_energy = mean.squaredNorm() + out.cov.trace();
        return out;
    }

    struct RhsPerturbation
    {
        std::vector<CVec> g; ///< per-channel adjoint projections S^H H_n^H c_n
        CVec b;              ///< sum of g
    };

    inline RhsPerturbation rhs_perturbation(const std::vector<CMat> &Hs, const std::vector<std::size_t> &selection,
                                            const std::vector<CVec> &responses)
    {
        if (Hs.size() != responses.size() || Hs.empty())
            throw ConfigError("rhs_perturbation: channel count mismatch");
        RhsPerturbation out;
        out.b = CVec::Zero(Eigen::Index(selection.size()));
        for (std::size_t n = 0; n < Hs.size(); ++n)
        {
            if (responses[n].size() != Hs[n].rows())
                throw ConfigError("rhs_perturbation: response length mismatch");
            CVec g(Eigen::Index(selection.size()));
            for (std::size_t j = 0; j < selection.size(); ++j)
                g(Eigen::Index(j)) = Hs[n].col(Eigen::Index(selection[j])).dot(responses[n]);
            out.b += g;
            out.g.push_back(std::move(g));
        }
        return out;
    }

    /// Same projection using the stacked receiver's channel blocks.
    inline RhsPerturbation rhs_perturbation(const TikhonovReceiver &rcv, const ObservationResponse &c)
    {
        if (c.block_count() != rcv.block_count())
            throw ConfigError("rhs_perturbation: channel count mismatch");
        RhsPerturbation out;
        out.b = CVec::Zero(rcv.H_an().cols());
        for (std::size_t n = 0; n < c.block_count(); ++n)
        {
            CVec g = rcv.channel_block(n).adjoint() * c.block(n);
            out.b += g;
            out.g.push_back(std::move(g));
        }
        return out;
    }

    /// rho = ||sum g_n||^2 / (N sum ||g_n||^2); nullopt when every g_n vanishes.
    inline std::optional<double> path_coherence(const RhsPerturbation &rhs)
    {
        double s = 0.0;
        for (const auto &g : rhs.g)
            s += g.squaredNorm();
        if (!(s > 0.0))
            return std::nullopt;
        return rhs.b.squaredNorm() / (double(rhs.g.size()) * s);
    }

    struct RhsCovariance
    {
        HermitianCovariance R_b;            ///< uncentered sample E[b b^H]
        double eta_cross = 0.0;             ///< cross-channel trace-mass fraction
        std::vector<std::vector<CMat>> cross_blocks; ///< sample E[g_n g_m^H]
    };

    inline RhsCovariance rhs_covariance(const std::vector<RhsPerturbation> &samples)
    {
        const std::size_t L = samples.size();
        if (L < 2)
            throw NumericalError("rhs_covariance: at least two samples are required");
        const std::size_t N = samples.front().g.size();
        const Eigen::Index P = samples.front().b.size();
        std::vector<CMat> Gs(N, CMat(P, Eigen::Index(L)));
        CMat B(P, Eigen::Index(L));
        for (std::size_t i = 0; i < L; ++i)
        {
            if (samples[i].g.size() != N || samples[i].b.size() != P)
                throw ConfigError("rhs_covariance: inconsistent sample shapes");
            B.col(Eigen::Index(i)) = samples[i].b;
            for (std::size_t n = 0; n < N; ++n)
                Gs[n].col(Eigen::Index(i)) = samples[i].g[n];
        }
        RhsCovariance out;
        out.R_b = HermitianCovariance((B * B.adjoint()) / double(L));
        out.cross_blocks.assign(N, std::vector<CMat>(N));
        double cross = 0.0, total = 0.0;
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t m = 0; m < N; ++m)
            {
                out.cross_blocks[n][m] = (Gs[n] * Gs[m].adjoint()) / double(L);
                const double t = std::abs(out.cross_blocks[n][m].trace());
                total += t;
                if (n != m)
                    cross += t;
            }
        out.eta_cross = total > 0.0 ? cross / total : 0.0;
        return out;
    }

    struct CrossFrequencyTransfer
    {
        CMat K_sh, K_diag, K_cf;
        CMat R_e_full, R_e_diag, delta_R_cf;
        double chi_cf = 0.0;
        double eps_diag_shape = 0.0;
        double eps_diag_trace = 0.0;
        RVec modal_variances;     ///< [U^H K_sh U]_ii / (d_i + lambda^2)^2
        RVec modal_cf_increments; ///< [U^H K_cf U]_ii / (d_i + lambda^2)^2
    };

    /// Back-projects the channel-block covariance through the anomaly dictionary and splits it into
    /// per-channel and cross-channel parts.
    inline CrossFrequencyTransfer cross_frequency_transfer(const TikhonovReceiver &rcv, const HermitianCovariance &R_sh)
    {
        const std::size_t N = rcv.block_count(), M = rcv.block_size();
        if (R_sh.dim() != N * M)
            throw ConfigError("cross_frequency_transfer: covariance dimension mismatch");
        const Eigen::Index P = rcv.H_an().cols();
        std::vector<CMat> A(N);
        for (std::size_t n = 0; n < N; ++n)
            A[n] = rcv.channel_block(n);

        CrossFrequencyTransfer out;
        out.K_sh = rcv.H_an().adjoint() * R_sh.matrix() * rcv.H_an();
        out.K_diag = CMat::Zero(P, P);
        out.K_cf = CMat::Zero(P, P);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t n2 = 0; n2 < N; ++n2)
            {
                const CMat term = A[n].adjoint() * block(R_sh, n, n2) * A[n2];
                (n == n2 ? out.K_diag : out.K_cf) += term;
            }

        const CMat &Ninv = rcv.normal_inverse();
        out.R_e_full = Ninv * out.K_sh * Ninv;
        out.R_e_diag = Ninv * out.K_diag * Ninv;
        out.delta_R_cf = Ninv * out.K_cf * Ninv;

        const double full_norm = out.R_e_full.norm();
        const double tr_full = real_trace(out.R_e_full);
        out.chi_cf = full_norm > 0.0 ? out.delta_R_cf.norm() / full_norm : 0.0;
        out.eps_diag_shape = full_norm > 0.0 ? (out.R_e_full - out.R_e_diag).norm() / full_norm : 0.0;
        out.eps_diag_trace = tr_full > 0.0 ? std::abs(tr_full - real_trace(out.R_e_diag)) / tr_full : 0.0;

        const double l2 = rcv.lambda() * rcv.lambda();
        const CMat UK = rcv.U().adjoint() * out.K_sh * rcv.U();
        const CMat UKcf = rcv.U().adjoint() * out.K_cf * rcv.U();
        out.modal_variances.resize(P);
        out.modal_cf_increments.resize(P);
        for (Eigen::Index i = 0; i < P; ++i)
        {
            const double den = (rcv.d()(i) + l2) * (rcv.d()(i) + l2);
            out.modal_variances(i) = UK(i, i).real() / den;
            out.modal_cf_increments(i) = UKcf(i, i).real() / den;
        }
        return out;
    }

} // namespace fdalab

#endif // FDALAB_RECON_HPP
