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


#ifndef FDALAB_FORWARD_HPP
#define FDALAB_FORWARD_HPP

#include "common.hpp"
#include "grid.hpp"
#include "media.hpp"

#include <numeric>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace fdalab
{
    // ---------------------------------------------------------------------------------------------
    // FDA coding
    // ---------------------------------------------------------------------------------------------

    enum class PatternTag
    {
        C1, ///< linear FDA: (omega_n, s_n)
        C2, ///< same-frequency MIMO: (omega_c, s_n)
        C3, ///< fixed-position FDA: (omega_n, s_c)
        C4  ///< permuted FDA: (omega_pi(n), s_n)
    };

    inline std::string_view to_string(PatternTag t)
    {
        switch (t)
        {
        case PatternTag::C1: return "C1";
        case PatternTag::C2: return "C2";
        case PatternTag::C3: return "C3";
        case PatternTag::C4: return "C4";
        }
        return "?";
    }

    inline PatternTag parse_pattern(std::string_view tag)
    {
        if (tag == "C1") return PatternTag::C1;
        if (tag == "C2") return PatternTag::C2;
        if (tag == "C3") return PatternTag::C3;
        if (tag == "C4") return PatternTag::C4;
        throw ConfigError("unknown coding pattern '" + std::string(tag) + "'");
    }

    /// Default C4 permutation (1-based).
    inline const std::vector<std::size_t> &default_permutation()
    {
        static const std::vector<std::size_t> perm{3, 1, 5, 2, 6, 4};
        return perm;
    }

    struct CodingPattern
    {
        PatternTag tag = PatternTag::C1;
        std::vector<std::size_t> permutation; ///< 1-based, C4 only; empty means default_permutation()

        /// Permutation to use for N channels (identity unless C4).
        std::vector<std::size_t> resolved_permutation(std::size_t N) const
        {
            std::vector<std::size_t> perm(N);
            std::iota(perm.begin(), perm.end(), std::size_t{1});
            if (tag != PatternTag::C4)
                return perm;
            if (!permutation.empty())
                perm = permutation;
            else if (default_permutation().size() == N)
                perm = default_permutation();
            else
                throw ConfigError("coding: C4 requires an explicit permutation for N = " + std::to_string(N));
            if (perm.size() != N)
                throw ConfigError("coding: permutation length differs from N");
            std::vector<bool> seen(N, false);
            for (auto v : perm)
            {
                if (v < 1 || v > N || seen[v - 1])
                    throw ConfigError("coding: permutation is not a bijection on 1..N");
                seen[v - 1] = true;
            }
            return perm;
        }
    };

    struct CodedChannel
    {
        std::size_t n = 1;  ///< 1-based channel index
        double kappa = 0.0; ///< centred index n - (N+1)/2
        double omega = 0.0; ///< rad/s
        Vec2 tx_pos{};
    };

    inline double centered_index(std::size_t n, std::size_t N) { return double(n) - (double(N) + 1.0) / 2.0; }

    /// Samples of the coding path in (omega, s) for the given organization.
    inline std::vector<CodedChannel> coding_path(const CodingPattern &pattern, std::size_t N, double f_c, double delta_f,
                                                 Vec2 s_c, Vec2 delta_s)
    {
        if (N < 1)
            throw ConfigError("coding: N must be at least 1");
        if (!(f_c > 0.0) || !std::isfinite(f_c) || !std::isfinite(delta_f))
            throw ConfigError("coding: f_c must be positive and finite");
        const auto perm = pattern.resolved_permutation(N);
        const double w_c = 2.0 * pi * f_c, dw = 2.0 * pi * delta_f;

        std::vector<CodedChannel> out;
        out.reserve(N);
        for (std::size_t n = 1; n <= N; ++n)
        {
            const double kappa = centered_index(n, N);
            CodedChannel ch;
            ch.n = n;
            ch.kappa = kappa;
            switch (pattern.tag)
            {
            case PatternTag::C1:
                ch.omega = w_c + kappa * dw;
                ch.tx_pos = s_c + kappa * delta_s;
                break;
            case PatternTag::C2:
                ch.omega = w_c;
                ch.tx_pos = s_c + kappa * delta_s;
                break;
            case PatternTag::C3:
                ch.omega = w_c + kappa * dw;
                ch.tx_pos = s_c;
                break;
            case PatternTag::C4:
                ch.omega = w_c + centered_index(perm[n - 1], N) * dw;
                ch.tx_pos = s_c + kappa * delta_s;
                break;
            }
            if (!(ch.omega > 0.0))
                throw ConfigError("coding: channel " + std::to_string(n) + " has non-positive frequency");
            out.push_back(ch);
        }
        return out;
    }

    // ---------------------------------------------------------------------------------------------
    // Scalar half-space kernel
    // ---------------------------------------------------------------------------------------------

    /// Knobs of the scalar kernel. Defaults reproduce the plain model.
    struct KernelModel
    {
        double distance_floor = 0.0;                      ///< lower bound on the spreading distance
        cplx gain{1.0, 0.0};                              ///< global complex factor on every kernel value
        std::optional<cplx> transmission_override;        ///< replaces the Fresnel factor on crossing paths
        double eps_air_rel = 1.0;                         ///< relative permittivity of the upper half-space
    };

    /// Wavenumber omega*sqrt(mu0*eps) on the branch with Im(k) <= 0 (decay under exp(+j omega t)).
    inline cplx wavenumber(double omega, cplx eps)
    {
        cplx k = omega * std::sqrt(mu0 * eps);
        if (k.imag() > 0.0)
            k = -k;
        return k;
    }

    /// Scalar propagation kernel between two points across the planar interface z = 0.
    /// The straight segment is split at its crossing point; the air part uses k0, the subsurface part
    /// uses eps_ref, and a crossing picks up T = 2 sqrt(eps_air) / (sqrt(eps_air) + sqrt(eps_r)).
    inline cplx halfspace_kernel(Vec2 src, Vec2 obs, double omega, cplx eps_ref, const KernelModel &km = {})
    {
        if (!(omega > 0.0))
            throw DomainError("halfspace_kernel: omega must be positive");
        const double d = distance(src, obs);
        const bool src_med = src.z > 0.0, obs_med = obs.z > 0.0;

        double d_air = 0.0, d_med = 0.0;
        cplx T{1.0, 0.0};
        if (src_med && obs_med)
            d_med = d;
        else if (!src_med && !obs_med)
            d_air = d;
        else
        {
            // fraction of the segment lying above the interface
            const double above = src_med ? (-obs.z) / (src.z - obs.z) : (-src.z) / (obs.z - src.z);
            d_air = above * d;
            d_med = d - d_air;
            const cplx n_air = std::sqrt(cplx(km.eps_air_rel, 0.0));
            const cplx n_med = std::sqrt(eps_ref / eps0);
            T = km.transmission_override ? *km.transmission_override : 2.0 * n_air / (n_air + n_med);
        }

        const double k_air = omega * std::sqrt(km.eps_air_rel) / c0;
        const cplx k_med = wavenumber(omega, eps_ref);
        const cplx j{0.0, 1.0};
        const double spread = 4.0 * pi * std::max(d, km.distance_floor);
        if (!(spread > 0.0))
            throw DomainError("halfspace_kernel: coincident points with zero distance floor");
        return km.gain * T * std::exp(-j * k_air * d_air) * std::exp(-j * k_med * d_med) / spread;
    }

    // ---------------------------------------------------------------------------------------------
    // Per-channel operators
    // ---------------------------------------------------------------------------------------------

    struct PropagationMatrix
    {
        CodedChannel channel;
        CMat entries; ///< M x P
    };

    /// Reference permittivity per voxel at angular frequency omega.
    inline CVec reference_permittivity(const MediumField &ref_field, double omega)
    {
        CVec e(ref_field.size());
        for (std::size_t p = 0; p < ref_field.size(); ++p)
            e(Eigen::Index(p)) = cole_cole_eval(ref_field[p], omega);
        return e;
    }

    /// Contrast with the reference permittivities already evaluated at omega.
    inline CVec contrast_vector(const MediumField &ref_field, const CVec &eps_ref, const MediumField &residual,
                                double omega)
    {
        if (ref_field.size() != residual.size() || std::size_t(eps_ref.size()) != ref_field.size())
            throw ConfigError("contrast_vector: reference and residual fields differ in size");
        CVec xi(ref_field.size());
        for (std::size_t p = 0; p < ref_field.size(); ++p)
        {
            const cplx e_ref = eps_ref(Eigen::Index(p));
            if (e_ref == cplx(0.0, 0.0))
                throw NumericalError("contrast_vector: singular reference permittivity at voxel " + std::to_string(p));
            const auto &d = residual[p];
            if (d.eps_inf == 0.0 && d.delta_eps == 0.0 && d.tau == 0.0 && d.alpha == 0.0 && d.sigma == 0.0)
            {
                xi(Eigen::Index(p)) = 0.0;
                continue;
            }
            xi(Eigen::Index(p)) = (cole_cole_eval(ref_field[p] + d, omega) - e_ref) / e_ref;
        }
        return xi;
    }

    /// Normalized contrast [F(mu_ref + d) - F(mu_ref)] / F(mu_ref), exact in the increment.
    inline CVec contrast_vector(const MediumField &ref_field, const MediumField &residual, double omega)
    {
        return contrast_vector(ref_field, reference_permittivity(ref_field, omega), residual, omega);
    }

    /// Precomputed kernels for one coded channel under a fixed reference medium.
    ///
    /// gt(p)       = G_t^(0)(x_p, s_n)          transmit kernel
    /// gr(m,p)     = G_r^(0)(r_m, x_p)          receive kernel
    /// H(m,p)      = gr(m,p) * gt(p) * w_p      main propagation matrix
    /// W(p,p')     = G0(x_p <- x_p'), p != p'   in-medium voxel coupling, zero diagonal
    class ChannelOperator
    {
    public:
        ChannelOperator(const Grid &grid, const ArrayGeometry &arr, const CodedChannel &ch, const MediumField &ref_field,
                        KernelModel km = {}, bool with_feedback = true)
            : channel_(ch), ref_field_(ref_field), feedback_(with_feedback)
        {
            ref_field.require_grid(grid);
            arr.validate();
            if (km.distance_floor <= 0.0)
                km.distance_floor = grid.distance_floor();
            const auto P = Eigen::Index(grid.size());
            const auto M = Eigen::Index(arr.M());
            eps_ref_ = reference_permittivity(ref_field, ch.omega);
            weights_.resize(P);
            gt_.resize(P);
            gr_.resize(M, P);
            for (Eigen::Index p = 0; p < P; ++p)
            {
                const Vec2 xp = grid.center(std::size_t(p));
                weights_(p) = grid.weight(std::size_t(p));
                gt_(p) = halfspace_kernel(ch.tx_pos, xp, ch.omega, eps_ref_(p), km);
                for (Eigen::Index m = 0; m < M; ++m)
                    gr_(m, p) = halfspace_kernel(xp, arr.rx_positions[std::size_t(m)], ch.omega, eps_ref_(p), km);
            }
            H_ = gr_ * (gt_.cwiseProduct(weights_.cast<cplx>())).asDiagonal();

            if (feedback_)
            {
                W_ = CMat::Zero(P, P);
                for (Eigen::Index p = 0; p < P; ++p)
                    for (Eigen::Index q = 0; q < P; ++q)
                        if (p != q)
                            W_(p, q) = halfspace_kernel(grid.center(std::size_t(q)), grid.center(std::size_t(p)), ch.omega,
                                                        eps_ref_(q), km);
            }
        }

        const CodedChannel &channel() const { return channel_; }
        const CMat &H() const { return H_; }
        const CVec &gt() const { return gt_; }
        const CMat &gr() const { return gr_; }
        const CVec &eps_ref() const { return eps_ref_; }
        bool feedback_enabled() const { return feedback_; }

        CVec contrast(const MediumField &residual) const
        {
            return contrast_vector(ref_field_, eps_ref_, residual, channel_.omega);
        }

        /// First-order kernel feedback q_n for contrast xi (zero if feedback is disabled).
        CVec feedback(const CVec &xi) const
        {
            if (!feedback_)
                return CVec::Zero(H_.rows());
            const double k2 = channel_.omega * channel_.omega * mu0;
            const CVec w = weights_.cast<cplx>();
            const CVec deps = xi.cwiseProduct(eps_ref_); // absolute permittivity increment
            // transmit side: dGt(p) = k2 sum_p' W(p,p') deps(p') gt(p') w(p')
            const CVec dGt = k2 * (W_ * deps.cwiseProduct(gt_).cwiseProduct(w));
            const CVec q_t = gr_ * xi.cwiseProduct(dGt).cwiseProduct(w);
            // receive side: dGr(m,p) = k2 sum_p' gr(m,p') deps(p') W(p,p') w(p')
            const CVec u = W_.transpose() * xi.cwiseProduct(gt_).cwiseProduct(w);
            const CVec q_r = k2 * (gr_ * deps.cwiseProduct(w).cwiseProduct(u));
            return q_t + q_r;
        }

        /// c_n = H_n xi + q_n(xi)
        CVec response_from_contrast(const CVec &xi) const
        {
            CVec c = H_ * xi;
            if (feedback_)
                c += feedback(xi);
            return c;
        }

        CVec response(const MediumField &residual) const { return response_from_contrast(contrast(residual)); }

        /// Column-wise response for a P x L block of contrasts.
        CMat responses_from_contrasts(const CMat &Xi) const
        {
            if (Xi.rows() != H_.cols())
                throw ConfigError("ChannelOperator: contrast block has the wrong row count");
            CMat C = H_ * Xi;
            if (!feedback_)
                return C;
            const double k2 = channel_.omega * channel_.omega * mu0;
            const CVec w = weights_.cast<cplx>();
            const CMat grw = gr_ * w.asDiagonal();
            const CMat dGt = k2 * (W_ * (eps_ref_.cwiseProduct(gt_).cwiseProduct(w).asDiagonal() * Xi));
            C.noalias() += grw * Xi.cwiseProduct(dGt);
            const CMat U = W_.transpose() * (gt_.cwiseProduct(w).asDiagonal() * Xi);
            C.noalias() += k2 * (grw * (eps_ref_.asDiagonal() * Xi.cwiseProduct(U)));
            return C;
        }

    private:
        CodedChannel channel_;
        MediumField ref_field_;
        bool feedback_;
        CVec eps_ref_, weights_, gt_;
        CMat gr_, H_, W_;
    };

    inline PropagationMatrix assemble_H(const Grid &grid, const ArrayGeometry &arr, const CodedChannel &ch,
                                        const MediumField &ref_field, const KernelModel &km = {})
    {
        ChannelOperator op(grid, arr, ch, ref_field, km, false);
        return {ch, op.H()};
    }

    inline CVec kernel_feedback(const Grid &grid, const ArrayGeometry &arr, const CodedChannel &ch,
                                const MediumField &ref_field, const CVec &xi, const KernelModel &km = {})
    {
        if (std::size_t(xi.size()) != grid.size())
            throw ConfigError("kernel_feedback: contrast length differs from voxel count");
        ChannelOperator op(grid, arr, ch, ref_field, km, true);
        return op.feedback(xi);
    }

    inline CVec channel_response(const Grid &grid, const ArrayGeometry &arr, const CodedChannel &ch,
                                 const MediumField &ref_field, const MediumField &residual, bool with_feedback = true,
                                 const KernelModel &km = {})
    {
        residual.require_grid(grid);
        ChannelOperator op(grid, arr, ch, ref_field, km, with_feedback);
        return op.response(residual);
    }

    // ---------------------------------------------------------------------------------------------
    // Stacked response
    // ---------------------------------------------------------------------------------------------

    /// Residual response over all coded channels; `stacked` is channel-major.
    class ObservationResponse
    {
    public:
        ObservationResponse() = default;

        std::size_t block_count() const { return per_channel_.size(); }
        std::size_t block_size() const { return per_channel_.empty() ? 0 : std::size_t(per_channel_.front().size()); }
        const std::vector<CVec> &per_channel() const { return per_channel_; }
        const CVec &stacked() const { return stacked_; }
        const CVec &block(std::size_t n) const { return per_channel_.at(n); }

        static ObservationResponse from_blocks(std::vector<CVec> blocks)
        {
            if (blocks.empty())
                throw ConfigError("stacked_response: no channel blocks");
            const auto M = blocks.front().size();
            for (const auto &b : blocks)
                if (b.size() != M)
                    throw ConfigError("stacked_response: channel blocks differ in length");
            ObservationResponse r;
            r.stacked_.resize(M * Eigen::Index(blocks.size()));
            for (std::size_t n = 0; n < blocks.size(); ++n)
                r.stacked_.segment(Eigen::Index(n) * M, M) = blocks[n];
            r.per_channel_ = std::move(blocks);
            return r;
        }

        static ObservationResponse from_stacked(const CVec &stacked, std::size_t block_size)
        {
            if (block_size == 0 || std::size_t(stacked.size()) % block_size != 0)
                throw ConfigError("stacked_response: length is not a multiple of the block size");
            std::vector<CVec> blocks;
            for (Eigen::Index off = 0; off < stacked.size(); off += Eigen::Index(block_size))
                blocks.emplace_back(stacked.segment(off, Eigen::Index(block_size)));
            return from_blocks(std::move(blocks));
        }

    private:
        std::vector<CVec> per_channel_;
        CVec stacked_;
    };

    inline ObservationResponse stacked_response(std::vector<CVec> per_channel)
    {
        return ObservationResponse::from_blocks(std::move(per_channel));
    }

    /// All coded channels of one configuration, built once and reused for every residual draw.
    class ForwardModel
    {
    public:
        ForwardModel(const Grid &grid, const ArrayGeometry &arr, const std::vector<CodedChannel> &channels,
                     const MediumField &ref_field, bool with_feedback = true, KernelModel km = {})
            : grid_(grid)
        {
            ops_.reserve(channels.size());
            for (const auto &ch : channels)
                ops_.emplace_back(grid, arr, ch, ref_field, km, with_feedback);
        }

        const Grid &grid() const { return grid_; }
        std::size_t N() const { return ops_.size(); }
        std::size_t M() const { return ops_.empty() ? 0 : std::size_t(ops_.front().H().rows()); }
        const ChannelOperator &channel(std::size_t n) const { return ops_.at(n); }

        std::vector<CMat> propagation_matrices() const
        {
            std::vector<CMat> Hs;
            for (const auto &op : ops_)
                Hs.push_back(op.H());
            return Hs;
        }

        ObservationResponse response(const MediumField &residual) const
        {
            residual.require_grid(grid_);
            std::vector<CVec> blocks;
            blocks.reserve(ops_.size());
            for (const auto &op : ops_)
                blocks.push_back(op.response(residual));
            return stacked_response(std::move(blocks));
        }

        /// Responses to a batch of residual draws; same values as response() up to rounding.
        std::vector<ObservationResponse> responses(const std::vector<MediumField> &residuals) const
        {
            const auto L = Eigen::Index(residuals.size());
            const auto P = Eigen::Index(grid_.size());
            std::vector<std::vector<CVec>> blocks(residuals.size());
            for (const auto &op : ops_)
            {
                CMat Xi(P, L);
                for (Eigen::Index i = 0; i < L; ++i)
                {
                    residuals[std::size_t(i)].require_grid(grid_);
                    Xi.col(i) = op.contrast(residuals[std::size_t(i)]);
                }
                const CMat C = op.responses_from_contrasts(Xi);
                for (Eigen::Index i = 0; i < L; ++i)
                    blocks[std::size_t(i)].push_back(C.col(i));
            }
            std::vector<ObservationResponse> out;
            out.reserve(residuals.size());
            for (auto &b : blocks)
                out.push_back(stacked_response(std::move(b)));
            return out;
        }

        /// Per-channel contrast vectors (length P each).
        std::vector<CVec> contrasts(const MediumField &residual) const
        {
            std::vector<CVec> out;
            for (const auto &op : ops_)
                out.push_back(op.contrast(residual));
            return out;
        }

    private:
        Grid grid_;
        std::vector<ChannelOperator> ops_;
    };

} // namespace fdalab

#endif // FDALAB_FORWARD_HPP
