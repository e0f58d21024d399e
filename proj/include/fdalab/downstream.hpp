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


#ifndef FDALAB_DOWNSTREAM_HPP
#define FDALAB_DOWNSTREAM_HPP

#include "common.hpp"
#include "grid.hpp"
#include "stats.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <vector>

namespace fdalab
{
    enum class TemplateKind
    {
        Point,
        DualPoint
    };

    inline std::string_view to_string(TemplateKind k) { return k == TemplateKind::Point ? "point" : "dual-point"; }

    /// Ideal anomaly over the candidate region; support holds positions into the anomaly selection.
    struct AnomalyTemplate
    {
        TemplateKind kind = TemplateKind::Point;
        std::vector<std::size_t> support;
        cplx amplitude{1000.0, 0.0};

        static AnomalyTemplate make(const Grid &grid, TemplateKind kind, cplx amplitude = {1000.0, 0.0})
        {
            const auto &sel = grid.anomaly_selection();
            if (sel.empty())
                throw ConfigError("AnomalyTemplate: empty anomaly selection");
            // candidate-region centre = midpoint of the selected voxel bounding box
            double x0 = std::numeric_limits<double>::max(), x1 = -x0, z0 = x0, z1 = -x0;
            for (auto p : sel)
            {
                const Vec2 c = grid.center(p);
                x0 = std::min(x0, c.x), x1 = std::max(x1, c.x);
                z0 = std::min(z0, c.z), z1 = std::max(z1, c.z);
            }
            const Vec2 mid{0.5 * (x0 + x1), 0.5 * (z0 + z1)};
            auto nearest_to = [&](Vec2 target, std::optional<std::size_t> exclude) {
                std::size_t best = sel.size();
                double best_d = std::numeric_limits<double>::max();
                // selection is in lexicographic grid order, so strict '<' keeps the lowest index on ties
                for (std::size_t j = 0; j < sel.size(); ++j)
                {
                    if (exclude && *exclude == j)
                        continue;
                    const double d = distance(grid.center(sel[j]), target);
                    if (d < best_d - 1e-12)
                    {
                        best_d = d;
                        best = j;
                    }
                }
                return best;
            };
            AnomalyTemplate t;
            t.kind = kind;
            t.amplitude = amplitude;
            const std::size_t first = nearest_to(mid, std::nullopt);
            t.support.push_back(first);
            if (kind == TemplateKind::DualPoint)
            {
                if (sel.size() < 2)
                    throw ConfigError("AnomalyTemplate: dual-point template needs two voxels");
                t.support.push_back(nearest_to(grid.center(sel[first]), first));
            }
            return t;
        }

        CVec vector(std::size_t P_an) const
        {
            CVec x = CVec::Zero(Eigen::Index(P_an));
            for (auto j : support)
                x(Eigen::Index(j)) = amplitude;
            return x;
        }
    };

    struct ReconQuality
    {
        double eps_loc = 0.0;
        double max_spurious = 0.0;
        double gamma_tp = 0.0; ///< +inf when every off-support entry is zero
        std::optional<double> nmse;
        std::size_t false_alarms = 0;
    };

    /// Index of the largest magnitude; ties resolved to the lowest index.
    inline std::size_t argmax_abs(const CVec &v)
    {
        std::size_t best = 0;
        double best_v = -1.0;
        for (Eigen::Index i = 0; i < v.size(); ++i)
            if (std::abs(v(i)) > best_v)
            {
                best_v = std::abs(v(i));
                best = std::size_t(i);
            }
        return best;
    }

    /// Ideal-anomaly metrics. The true peak position comes from `peak_reference` when given
    /// (e.g. the residual-free reconstruction), otherwise from x_true.
    inline ReconQuality recon_quality(const CVec &x_hat, const CVec &x_true, const Grid &grid,
                                      const std::vector<std::size_t> &selection,
                                      const std::optional<CVec> &peak_reference = std::nullopt)
    {
        const auto P = x_true.size();
        if (x_hat.size() != P || std::size_t(P) != selection.size())
            throw ConfigError("recon_quality: vector lengths must equal the anomaly selection size");
        const CVec &ref = peak_reference ? *peak_reference : x_true;
        if (ref.size() != P)
            throw ConfigError("recon_quality: peak reference length mismatch");

        ReconQuality q;
        const Vec2 est = grid.center(selection[argmax_abs(x_hat)]);
        const Vec2 tru = grid.center(selection[argmax_abs(ref)]);
        q.eps_loc = distance(est, tru);

        const double true_max = x_true.cwiseAbs().maxCoeff();
        double on = 0.0, off = 0.0;
        for (Eigen::Index i = 0; i < P; ++i)
        {
            const double a = std::abs(x_hat(i));
            if (x_true(i) != cplx(0.0, 0.0))
                on = std::max(on, a);
            else
            {
                off = std::max(off, a);
                if (a > 0.5 * true_max)
                    ++q.false_alarms;
            }
        }
        q.max_spurious = off;
        q.gamma_tp = off > 0.0 ? on / off : std::numeric_limits<double>::infinity();
        const double tn = x_true.squaredNorm();
        if (tn > 0.0)
            q.nmse = (x_hat - x_true).squaredNorm() / tn;
        return q;
    }

    enum class CovarianceModelKind
    {
        Full,
        BlockDiagonal,
        Diagonal
    };

    inline std::string_view to_string(CovarianceModelKind k)
    {
        switch (k)
        {
        case CovarianceModelKind::Full: return "full";
        case CovarianceModelKind::BlockDiagonal: return "block-diagonal";
        case CovarianceModelKind::Diagonal: return "diagonal";
        }
        return "?";
    }

    inline HermitianCovariance approximate_covariance(const HermitianCovariance &R, CovarianceModelKind kind)
    {
        switch (kind)
        {
        case CovarianceModelKind::Full: return R;
        case CovarianceModelKind::BlockDiagonal:
            return HermitianCovariance(block_diagonal_part(R.matrix(), R.block_size()), R.block_size());
        case CovarianceModelKind::Diagonal:
        {
            CMat D = CMat::Zero(R.matrix().rows(), R.matrix().cols());
            D.diagonal() = R.matrix().diagonal();
            return HermitianCovariance(D, R.block_size());
        }
        }
        throw ConfigError("approximate_covariance: unknown kind");
    }

    /// R^{-1/2} and R^{-1} after a ridge of 1e-8 * tr(R)/dim.
    struct WhiteningOperator
    {
        CMat inv_sqrt;
        CMat inv;

        explicit WhiteningOperator(const HermitianCovariance &R)
        {
            const auto n = Eigen::Index(R.dim());
            if (n == 0)
                throw NumericalError("whitening: empty covariance model");
            const double ridge = 1e-8 * R.trace() / double(n);
            const auto &e = R.eig();
            RVec s(n), si(n);
            for (Eigen::Index i = 0; i < n; ++i)
            {
                const double l = e.values(i) + ridge;
                if (!(l > 0.0))
                    throw NumericalError("whitening: covariance model is singular");
                s(i) = 1.0 / std::sqrt(l);
                si(i) = 1.0 / l;
            }
            inv_sqrt = e.vectors * s.cast<cplx>().asDiagonal() * e.vectors.adjoint();
            inv = e.vectors * si.cast<cplx>().asDiagonal() * e.vectors.adjoint();
        }
    };

    /// ||cov(R^{-1/2} x_i) - I||_F / ||I||_F over the given samples.
    inline double whitening_error(const HermitianCovariance &R_model, const std::vector<CVec> &samples)
    {
        const WhiteningOperator W(R_model);
        std::vector<CVec> white;
        white.reserve(samples.size());
        for (const auto &x : samples)
        {
            if (x.size() != W.inv_sqrt.cols())
                throw ConfigError("whitening_error: sample length mismatch");
            white.push_back(W.inv_sqrt * x);
        }
        const auto mc = sample_mean_cov(white);
        const auto n = Eigen::Index(R_model.dim());
        return (mc.cov.matrix() - CMat::Identity(n, n)).norm() / std::sqrt(double(n));
    }

    /// Linear-interpolation percentile (q in [0,100]) of unsorted values.
    inline double percentile(std::vector<double> v, double q)
    {
        if (v.empty())
            throw NumericalError("percentile: no values");
        std::sort(v.begin(), v.end());
        const double pos = q / 100.0 * double(v.size() - 1);
        const auto lo = std::size_t(std::floor(pos));
        const auto hi = std::min(lo + 1, v.size() - 1);
        return v[lo] + (pos - double(lo)) * (v[hi] - v[lo]);
    }

    struct DetectionResult
    {
        double p_d = 0.0;
        std::optional<double> z_margin;
        double threshold = 0.0;
        double p_fa_background = 0.0; ///< fraction of background scores above the threshold
        std::vector<double> background_scores;
        std::vector<double> target_scores;
    };

    /// Whitened matched-filter score |t^H R^{-1} x|^2 / (t^H R^{-1} t).
    inline std::vector<double> matched_filter_scores(const WhiteningOperator &W, const CVec &target,
                                                     const std::vector<CVec> &xs)
    {
        const CVec w = W.inv * target;
        const double norm = std::real(target.dot(w));
        if (!(norm > 0.0))
            throw NumericalError("detection: degenerate target direction");
        std::vector<double> s;
        s.reserve(xs.size());
        for (const auto &x : xs)
            s.push_back(std::norm(w.dot(x)) / norm);
        return s;
    }

    /// P_D at the 95th-percentile background threshold and the separation margin z.
    inline DetectionResult detection_eval(const HermitianCovariance &R_model, const CVec &target,
                                          const std::vector<CVec> &bg_samples, const std::vector<CVec> &tgt_samples)
    {
        if (bg_samples.size() < 2 || tgt_samples.empty())
            throw NumericalError("detection_eval: not enough samples");
        const WhiteningOperator W(R_model);
        DetectionResult r;
        r.background_scores = matched_filter_scores(W, target, bg_samples);
        r.target_scores = matched_filter_scores(W, target, tgt_samples);
        r.threshold = percentile(r.background_scores, 95.0);

        auto frac_above = [&](const std::vector<double> &s) {
            std::size_t k = 0;
            for (double v : s)
                if (v > r.threshold)
                    ++k;
            return double(k) / double(s.size());
        };
        r.p_d = frac_above(r.target_scores);
        r.p_fa_background = frac_above(r.background_scores);

        double mb = 0.0, mt = 0.0;
        for (double v : r.background_scores)
            mb += v;
        for (double v : r.target_scores)
            mt += v;
        mb /= double(r.background_scores.size());
        mt /= double(r.target_scores.size());
        double var = 0.0;
        for (double v : r.background_scores)
            var += (v - mb) * (v - mb);
        const double sd = std::sqrt(var / double(r.background_scores.size() - 1));
        if (sd > 0.0)
            r.z_margin = (mt - mb) / sd;
        return r;
    }

} // namespace fdalab

#endif // FDALAB_DOWNSTREAM_HPP
