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


#ifndef FDALAB_STUDIES_HPP
#define FDALAB_STUDIES_HPP

#include "config.hpp"
#include "downstream.hpp"
#include "forward.hpp"
#include "media.hpp"
#include "recon.hpp"
#include "stats.hpp"
#include "table.hpp"

#include <random>
#include <string>
#include <vector>

namespace fdalab
{
    /// One point of the scene x reference x pattern x delta_f sweep.
    struct CaseKey
    {
        SceneId scene = SceneId::S1;
        ReferenceKind reference = ReferenceKind::R0;
        PatternTag pattern = PatternTag::C1;
        double delta_f = 1e5;
    };

    /// Everything needed to draw residual responses for one case.
    struct CaseSetup
    {
        CaseKey key;
        Grid grid;
        MediumField reference_field;
        ResidualModel model;
        ForwardModel forward;

        CaseSetup(const ExperimentConfig &cfg, const CaseKey &k)
            : key(k), grid(cfg.grid()),
              reference_field(build_reference_field(cfg.scene_background(k.scene), cfg.reference_spec(k.reference), grid)),
              model{reference_field,
                    residual_mean_field(cfg.scene_background(k.scene), cfg.reference_spec(k.reference), grid), cfg.rel_std},
              forward(grid, cfg.array(), cfg.channels(k.pattern, k.delta_f), reference_field, cfg.feedback_on)
        {
        }

        std::uint64_t seed_for(const ExperimentConfig &cfg, std::size_t sample_index) const
        {
            return stream_seed(cfg.master_seed, std::uint64_t(key.scene), std::uint64_t(key.reference),
                               std::uint64_t(key.pattern), key.delta_f, sample_index);
        }

        MediumField draw(const ExperimentConfig &cfg, std::size_t sample_index) const
        {
            std::mt19937_64 rng(seed_for(cfg, sample_index));
            return sample_residual(model, rng);
        }

        /// Responses for sample indices [begin, begin + count), evaluated in fixed-size batches.
        std::vector<ObservationResponse> responses(const ExperimentConfig &cfg, std::size_t begin, std::size_t count) const
        {
            constexpr std::size_t batch = 128;
            std::vector<ObservationResponse> out;
            out.reserve(count);
            for (std::size_t b = 0; b < count; b += batch)
            {
                std::vector<MediumField> fields;
                for (std::size_t i = b; i < std::min(count, b + batch); ++i)
                    fields.push_back(draw(cfg, begin + i));
                for (auto &r : forward.responses(fields))
                    out.push_back(std::move(r));
            }
            return out;
        }

        TikhonovReceiver receiver(double lambda) const
        {
            return TikhonovReceiver(build_H_an(forward.propagation_matrices(), grid.anomaly_selection()), lambda,
                                    forward.M());
        }
    };

    inline std::vector<CVec> stacked_all(const std::vector<ObservationResponse> &rs)
    {
        std::vector<CVec> out;
        out.reserve(rs.size());
        for (const auto &r : rs)
            out.push_back(r.stacked());
        return out;
    }

    inline std::vector<CaseKey> sweep_cases(const ExperimentConfig &cfg)
    {
        std::vector<CaseKey> out;
        for (auto s : cfg.scenes)
            for (auto r : cfg.references)
                for (auto p : cfg.patterns)
                    for (double df : cfg.delta_f_list)
                        out.push_back({s, r, p, df});
        return out;
    }

    inline std::vector<CaseKey> design_cases(const ExperimentConfig &cfg)
    {
        std::vector<CaseKey> out;
        for (auto s : cfg.scenes)
            for (auto r : cfg.references)
                out.push_back({s, r, cfg.design_pattern, cfg.design_delta_f});
        return out;
    }

    inline std::vector<std::string> base_key_columns()
    {
        return {"scene", "reference", "pattern", "delta_f", "lambda", "seed"};
    }

    inline std::vector<KeyValue> base_keys(const ExperimentConfig &cfg, const CaseKey &k, std::optional<double> lambda)
    {
        std::vector<KeyValue> keys{std::string(to_string(k.scene)), std::string(to_string(k.reference)),
                                   std::string(to_string(k.pattern)), k.delta_f};
        keys.push_back(lambda ? KeyValue{*lambda} : KeyValue{});
        keys.push_back(std::to_string(cfg.master_seed));
        return keys;
    }

    // ---------------------------------------------------------------------------------------------
    // Observation-domain study
    // ---------------------------------------------------------------------------------------------

    inline Table run_observation_study(const ExperimentConfig &cfg)
    {
        cfg.validate();
        Table t{"observation",
                base_key_columns(),
                {"param_diff_norm", "mean_contrast_norm", "c_norm", "D_f", "trace", "chi_f", "eps_blk", "r_eff", "p_0_9",
                 "leading_ratio"},
                {}};
        const auto cases = sweep_cases(cfg);
        std::vector<MetricRow> rows(cases.size());
        parallel_for(cases.size(), [&](std::size_t i) {
            const CaseSetup cs(cfg, cases[i]);
            const MediumField &det = cs.model.deterministic;
            double xi_norm = 0.0;
            for (const auto &xi : cs.forward.contrasts(det))
                xi_norm += xi.norm();
            xi_norm /= double(cs.forward.N());
            const ObservationResponse c = cs.forward.response(det);

            const auto samples = stacked_all(cs.responses(cfg, 0, cfg.L_cov));
            const auto mc = sample_mean_cov(samples, cs.forward.M());
            const auto bc = block_coupling_metrics(mc.cov);
            const auto ss = spectral_summary(mc.cov);
            rows[i] = {base_keys(cfg, cases[i], std::nullopt),
                       {parameter_difference_norm(det), xi_norm, c.stacked().norm(), frequency_block_discrepancy(c),
                        ss.trace, bc.chi_f, bc.eps_blk, ss.r_eff, double(ss.p_0_9), ss.leading_ratio}};
        });
        for (auto &r : rows)
            t.add(std::move(r));
        t.sort_rows();
        return t;
    }

    // ---------------------------------------------------------------------------------------------
    // Reconstruction-domain study
    // ---------------------------------------------------------------------------------------------

    struct ReconTables
    {
        Table lambda;  ///< receiver and transfer metrics per lambda
        Table coding;  ///< lambda-independent right-hand-side organization per pattern
        Table summary; ///< medians per grouping axis and pooled
    };

    /// Largest relative gap between G c and (Q + lambda^2 I)^{-1} b over the samples.
    inline double route_discrepancy(const TikhonovReceiver &rcv, const std::vector<ObservationResponse> &rs,
                                    const std::vector<RhsPerturbation> &rhs)
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < rs.size(); ++i)
        {
            const CVec a = rcv.G() * rs[i].stacked();
            const CVec b = rcv.solve_normal(rhs[i].b);
            const double s = std::max(a.norm(), b.norm());
            if (s > 0.0)
                worst = std::max(worst, (a - b).norm() / s);
        }
        return worst;
    }

    inline Table median_summary(const std::string &name, const std::vector<const Table *> &sources,
                                const std::vector<std::string> &axes)
    {
        Table out{name, {"table", "metric", "axis", "level"}, {"median", "count"}, {}};
        for (const Table *src : sources)
            for (std::size_t m = 0; m < src->metric_columns.size(); ++m)
            {
                auto collect = [&](std::optional<std::size_t> axis, const std::string &level) {
                    std::vector<double> v;
                    for (const auto &r : src->rows)
                        if (!axis || format_key(r.keys[*axis]) == level)
                            if (r.values[m] && std::isfinite(*r.values[m]))
                                v.push_back(*r.values[m]);
                    return v;
                };
                auto v = collect(std::nullopt, "");
                out.add({{src->name, src->metric_columns[m], std::string("pooled"), std::string("all")},
                         {median(v), double(v.size())}});
                for (const auto &axis : axes)
                {
                    const std::size_t a = src->key_column(axis);
                    std::vector<std::string> levels;
                    for (const auto &r : src->rows)
                        if (!std::holds_alternative<std::monostate>(r.keys[a]))
                        {
                            const auto l = format_key(r.keys[a]);
                            if (std::find(levels.begin(), levels.end(), l) == levels.end())
                                levels.push_back(l);
                        }
                    for (const auto &l : levels)
                    {
                        auto w = collect(a, l);
                        out.add({{src->name, src->metric_columns[m], axis, l}, {median(w), double(w.size())}});
                    }
                }
            }
        out.sort_rows();
        return out;
    }

    inline ReconTables run_recon_study(const ExperimentConfig &cfg)
    {
        cfg.validate();
        ReconTables out{{"recon_lambda",
                         base_key_columns(),
                         {"G_norm", "eps_Q", "E_lambda", "tr_R_e", "re_r_eff", "re_p_0_9", "re_leading_ratio", "chi_cf",
                          "eps_diag_shape", "eps_diag_trace", "route_discrepancy"},
                         {}},
                        {"recon_coding",
                         base_key_columns(),
                         {"rho_path", "rho_path_min", "eta_cross", "rb_trace", "rb_r_eff", "rb_p_0_9", "rb_leading_ratio"},
                         {}},
                        {}};
        const auto cases = sweep_cases(cfg);
        std::vector<std::vector<MetricRow>> lam_rows(cases.size());
        std::vector<MetricRow> coding_rows(cases.size());
        parallel_for(cases.size(), [&](std::size_t i) {
            const CaseSetup cs(cfg, cases[i]);
            const auto rs = cs.responses(cfg, 0, cfg.L_recon);
            const auto samples = stacked_all(rs);
            const auto mc = sample_mean_cov(samples, cs.forward.M());

            const auto Hs = cs.forward.propagation_matrices();
            const auto &sel = cs.grid.anomaly_selection();
            std::vector<RhsPerturbation> rhs;
            rhs.reserve(rs.size());
            std::vector<double> rho;
            for (const auto &r : rs)
            {
                rhs.push_back(rhs_perturbation(Hs, sel, r.per_channel()));
                if (auto p = path_coherence(rhs.back()))
                    rho.push_back(*p);
            }
            const auto rb = rhs_covariance(rhs);
            const auto sb = spectral_summary(rb.R_b);
            std::optional<double> rho_min;
            if (!rho.empty())
                rho_min = *std::min_element(rho.begin(), rho.end());
            coding_rows[i] = {base_keys(cfg, cases[i], std::nullopt),
                              {median(rho), rho_min, rb.eta_cross, sb.trace, sb.r_eff, double(sb.p_0_9),
                               sb.leading_ratio}};

            for (double lambda : cfg.lambda_list)
            {
                const TikhonovReceiver rcv = cs.receiver(lambda);
                double E = 0.0;
                for (const auto &c : samples)
                    E += (rcv.G() * c).squaredNorm();
                E /= double(samples.size());
                const auto cft = cross_frequency_transfer(rcv, mc.cov);
                const HermitianCovariance Re(cft.R_e_full);
                const auto se = spectral_summary(Re);
                lam_rows[i].push_back({base_keys(cfg, cases[i], lambda),
                                       {receiver_norm(rcv), resolution_error(rcv), E, Re.trace(), se.r_eff,
                                        double(se.p_0_9), se.leading_ratio, cft.chi_cf, cft.eps_diag_shape,
                                        cft.eps_diag_trace, route_discrepancy(rcv, rs, rhs)}});
            }
        });
        for (auto &rows : lam_rows)
            for (auto &r : rows)
                out.lambda.add(std::move(r));
        for (auto &r : coding_rows)
            out.coding.add(std::move(r));
        out.lambda.sort_rows();
        out.coding.sort_rows();
        out.summary = median_summary("recon_summary", {&out.lambda, &out.coding},
                                     {"scene", "reference", "pattern", "delta_f", "lambda"});
        return out;
    }

    // ---------------------------------------------------------------------------------------------
    // Downstream study
    // ---------------------------------------------------------------------------------------------

    struct DownstreamTables
    {
        Table ideal;
        Table whitening;
    };

    inline DownstreamTables run_downstream_study(const ExperimentConfig &cfg)
    {
        cfg.validate();
        auto ideal_keys = base_key_columns();
        ideal_keys.push_back("template");
        auto white_keys = base_key_columns();
        white_keys.push_back("covariance_model");
        DownstreamTables out{{"downstream_ideal",
                              ideal_keys,
                              {"eps_loc", "max_spurious", "gamma_tp", "nmse", "false_alarms"},
                              {}},
                             {"downstream_whitening",
                              white_keys,
                              {"eps_white", "p_d", "z_margin", "threshold", "p_fa_background"},
                              {}}};
        const auto cases = design_cases(cfg);
        std::vector<std::vector<MetricRow>> ideal_rows(cases.size()), white_rows(cases.size());
        parallel_for(cases.size(), [&](std::size_t i) {
            const CaseSetup cs(cfg, cases[i]);
            const TikhonovReceiver rcv = cs.receiver(cfg.design_lambda);
            const auto &sel = cs.grid.anomaly_selection();
            const auto keys = base_keys(cfg, cases[i], cfg.design_lambda);

            const CVec m_det = cs.forward.response(cs.model.deterministic).stacked();
            for (auto kind : {TemplateKind::Point, TemplateKind::DualPoint})
            {
                const CVec x = AnomalyTemplate::make(cs.grid, kind).vector(sel.size());
                const CVec y = rcv.H_an() * x;
                const CVec x_pure = rcv.G() * y;
                const CVec x_hat = rcv.G() * (y + m_det);
                const auto q = recon_quality(x_hat, x, cs.grid, sel, x_pure);
                auto k = keys;
                k.push_back(std::string(to_string(kind)));
                ideal_rows[i].push_back(
                    {k, {q.eps_loc, q.max_spurious, q.gamma_tp, q.nmse, double(q.false_alarms)}});
            }

            // covariance models from the first L_cov draws, evaluation on the next L_recon draws
            const auto model_samples = stacked_all(cs.responses(cfg, 0, cfg.L_cov));
            const auto mc = sample_mean_cov(model_samples, cs.forward.M());
            std::vector<CVec> bg, tg;
            const CVec t = rcv.G() * (rcv.H_an() * AnomalyTemplate::make(cs.grid, TemplateKind::Point).vector(sel.size()));
            for (const auto &r : cs.responses(cfg, cfg.L_cov, cfg.L_recon))
            {
                bg.push_back(rcv.G() * r.stacked());
                tg.push_back(bg.back() + t);
            }
            for (auto kind : {CovarianceModelKind::Full, CovarianceModelKind::BlockDiagonal, CovarianceModelKind::Diagonal})
            {
                const auto approx = approximate_covariance(mc.cov, kind);
                const HermitianCovariance R_e(rcv.G() * approx.matrix() * rcv.G().adjoint());
                const double ew = whitening_error(R_e, bg);
                const auto de = detection_eval(R_e, t, bg, tg);
                auto k = keys;
                k.push_back(std::string(to_string(kind)));
                white_rows[i].push_back({k, {ew, de.p_d, de.z_margin, de.threshold, de.p_fa_background}});
            }
        });
        for (auto &rows : ideal_rows)
            for (auto &r : rows)
                out.ideal.add(std::move(r));
        for (auto &rows : white_rows)
            for (auto &r : rows)
                out.whitening.add(std::move(r));
        out.ideal.sort_rows();
        out.whitening.sort_rows();
        return out;
    }

} // namespace fdalab

#endif // FDALAB_STUDIES_HPP
