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


#ifndef FDALAB_MEDIA_HPP
#define FDALAB_MEDIA_HPP

#include "common.hpp"
#include "grid.hpp"

#include <array>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace fdalab
{
    /// Five-parameter Cole-Cole medium vector. Also used, unconstrained, as a parameter increment.
    struct ColeColeParams
    {
        double eps_inf = 1.0;   ///< high-frequency relative permittivity
        double delta_eps = 0.0; ///< relaxation strength
        double tau = 1e-9;      ///< relaxation time (s)
        double alpha = 0.0;     ///< broadening exponent in [0,1)
        double sigma = 0.0;     ///< DC conductivity (S/m)

        static constexpr std::array<std::string_view, 5> names{"eps_inf", "delta_eps", "tau", "alpha", "sigma"};

        std::array<double, 5> to_array() const { return {eps_inf, delta_eps, tau, alpha, sigma}; }
        static ColeColeParams from_array(const std::array<double, 5> &a) { return {a[0], a[1], a[2], a[3], a[4]}; }

        double static_permittivity() const { return eps_inf + delta_eps; }

        bool admissible() const
        {
            return std::isfinite(eps_inf) && std::isfinite(delta_eps) && std::isfinite(tau) && std::isfinite(alpha) &&
                   std::isfinite(sigma) && eps_inf > 0.0 && delta_eps >= 0.0 && tau > 0.0 && alpha >= 0.0 &&
                   alpha < 1.0 && sigma >= 0.0;
        }

        friend ColeColeParams operator+(const ColeColeParams &a, const ColeColeParams &b)
        {
            return {a.eps_inf + b.eps_inf, a.delta_eps + b.delta_eps, a.tau + b.tau, a.alpha + b.alpha, a.sigma + b.sigma};
        }
        friend ColeColeParams operator-(const ColeColeParams &a, const ColeColeParams &b)
        {
            return {a.eps_inf - b.eps_inf, a.delta_eps - b.delta_eps, a.tau - b.tau, a.alpha - b.alpha, a.sigma - b.sigma};
        }
        friend bool operator==(const ColeColeParams &, const ColeColeParams &) = default;

        /// Euclidean norm over the five raw parameter values.
        double norm() const
        {
            double s = 0.0;
            for (double v : to_array())
                s += v * v;
            return std::sqrt(s);
        }
    };

    /// Complex permittivity (F/m) of the Cole-Cole law under the exp(+j omega t) convention:
    /// eps0 * [eps_inf + delta_eps / (1 + (j omega tau)^(1-alpha)) - j sigma / (omega eps0)].
    inline cplx cole_cole_eval(const ColeColeParams &p, double omega)
    {
        if (!(omega > 0.0) || !std::isfinite(omega))
            throw DomainError("cole_cole_eval: omega must be positive and finite");
        if (!p.admissible())
        {
            auto a = p.to_array();
            std::string bad = "unknown";
            if (!(std::isfinite(a[0]) && a[0] > 0.0))
                bad = "eps_inf";
            else if (!(std::isfinite(a[1]) && a[1] >= 0.0))
                bad = "delta_eps";
            else if (!(std::isfinite(a[2]) && a[2] > 0.0))
                bad = "tau";
            else if (!(std::isfinite(a[3]) && a[3] >= 0.0 && a[3] < 1.0))
                bad = "alpha";
            else
                bad = "sigma";
            throw DomainError("cole_cole_eval: inadmissible parameter " + bad);
        }

        // (j omega tau)^(1-alpha) in polar form; j^(1-alpha) = exp(j pi (1-alpha) / 2)
        const double expo = 1.0 - p.alpha;
        const double mag = std::pow(omega * p.tau, expo);
        if (!std::isfinite(mag))
            throw DomainError("cole_cole_eval: (j omega tau)^(1-alpha) overflows; offending parameter tau");
        const cplx jwt = std::polar(mag, 0.5 * pi * expo);
        const double loss = p.sigma / (omega * eps0);
        if (!std::isfinite(loss))
            throw DomainError("cole_cole_eval: conduction term overflows; offending parameter sigma");

        const cplx rel = p.eps_inf + p.delta_eps / (1.0 + jwt) - cplx(0.0, loss);
        const cplx out = eps0 * rel;
        if (!std::isfinite(out.real()) || !std::isfinite(out.imag()))
            throw DomainError("cole_cole_eval: non-finite permittivity; offending parameter delta_eps");
        return out;
    }

    /// Admissible box used by project_physical.
    struct PhysicalBox
    {
        static constexpr double eps_inf_min = 1.0;
        static constexpr double delta_eps_min = 0.0;
        static constexpr double tau_min = 1e-14;
        static constexpr double alpha_min = 0.0;
        static constexpr double alpha_max = 0.99;
        static constexpr double sigma_min = 0.0;
    };

    /// Componentwise clamp into the admissible box. Idempotent.
    inline ColeColeParams project_physical(const ColeColeParams &raw)
    {
        auto a = raw.to_array();
        for (std::size_t k = 0; k < 5; ++k)
            if (!std::isfinite(a[k]))
                throw DomainError("project_physical: non-finite " + std::string(ColeColeParams::names[k]));
        ColeColeParams p = raw;
        p.eps_inf = std::max(p.eps_inf, PhysicalBox::eps_inf_min);
        p.delta_eps = std::max(p.delta_eps, PhysicalBox::delta_eps_min);
        p.tau = std::max(p.tau, PhysicalBox::tau_min);
        p.alpha = std::clamp(p.alpha, PhysicalBox::alpha_min, PhysicalBox::alpha_max);
        p.sigma = std::max(p.sigma, PhysicalBox::sigma_min);
        return p;
    }

    // ---------------------------------------------------------------------------------------------
    // Scenes and reference states
    // ---------------------------------------------------------------------------------------------

    enum class SceneId
    {
        S1,
        S2,
        S3,
        S4,
        S5
    };

    inline constexpr std::array<SceneId, 5> all_scenes{SceneId::S1, SceneId::S2, SceneId::S3, SceneId::S4, SceneId::S5};

    struct SceneInfo
    {
        SceneId id;
        std::string_view tag;
        std::string_view medium;
        ColeColeParams params;
    };

    /// Built-in background media registry.
    inline const std::array<SceneInfo, 5> &scene_registry()
    {
        static const std::array<SceneInfo, 5> reg{{
            {SceneId::S1, "S1", "dry lunar soil", {3.00, 0.05, 1.0e-6, 0.30, 1.0e-14}},
            {SceneId::S2, "S2", "basalt/dry basalt", {8.0, 992.0, 1.0e-6, 0.30, 1.0e-8}},
            {SceneId::S3, "S3", "pure water ice", {3.15, 87.85, 2.5e-5, 0.00, 1.0e-8}},
            {SceneId::S4, "S4", "water-bearing kaolinite sediment", {2.0, 33.6, 5.0e-12, 0.20, 8.0e-2}},
            {SceneId::S5, "S5", "fine-grained clay soil", {10.7, 19.56, 9.55e-12, 0.062, 0.0}},
        }};
        return reg;
    }

    inline const SceneInfo &scene_info(SceneId s) { return scene_registry()[static_cast<std::size_t>(s)]; }
    inline std::string_view to_string(SceneId s) { return scene_info(s).tag; }

    inline SceneId parse_scene(std::string_view tag)
    {
        for (const auto &s : scene_registry())
            if (s.tag == tag)
                return s.id;
        throw ConfigError("unknown scene tag '" + std::string(tag) + "'");
    }

    enum class ReferenceKind
    {
        R0, ///< matched
        R1, ///< mild mismatch
        R2  ///< generic
    };

    inline std::string_view to_string(ReferenceKind k)
    {
        switch (k)
        {
        case ReferenceKind::R0: return "R0";
        case ReferenceKind::R1: return "R1";
        case ReferenceKind::R2: return "R2";
        }
        return "?";
    }

    inline ReferenceKind parse_reference(std::string_view tag)
    {
        if (tag == "R0") return ReferenceKind::R0;
        if (tag == "R1") return ReferenceKind::R1;
        if (tag == "R2") return ReferenceKind::R2;
        throw ConfigError("unknown reference tag '" + std::string(tag) + "'");
    }

    /// Mild-mismatch bias: multiplicative on eps_inf, delta_eps, tau, sigma; additive on alpha.
    struct MismatchBias
    {
        double eps_inf_rel = 0.05;
        double delta_eps_rel = 0.05;
        double tau_factor = 1.0;
        double alpha_add = 0.02;
        double sigma_factor = 1.2;

        ColeColeParams apply(const ColeColeParams &b) const
        {
            return {b.eps_inf * (1.0 + eps_inf_rel), b.delta_eps * (1.0 + delta_eps_rel), b.tau * tau_factor,
                    b.alpha + alpha_add, b.sigma * sigma_factor};
        }

        bool finite() const
        {
            return std::isfinite(eps_inf_rel) && std::isfinite(delta_eps_rel) && std::isfinite(tau_factor) &&
                   std::isfinite(alpha_add) && std::isfinite(sigma_factor);
        }
    };

    /// Dispersion-free coarse engineering medium used by R2.
    inline constexpr ColeColeParams default_generic_medium{5.0, 0.0, 1e-9, 0.0, 1e-3};

    struct ReferenceSpec
    {
        ReferenceKind kind = ReferenceKind::R0;
        MismatchBias bias{};
        ColeColeParams generic = default_generic_medium;

        void validate() const
        {
            if (!bias.finite())
                throw ConfigError("reference: R1 bias must be finite");
            if (!generic.admissible())
                throw ConfigError("reference: R2 generic medium must be admissible");
        }
    };

    // ---------------------------------------------------------------------------------------------
    // Medium fields
    // ---------------------------------------------------------------------------------------------

    /// Per-voxel Cole-Cole parameters. Increment fields (residuals) are exempt from admissibility.
    class MediumField
    {
    public:
        MediumField() = default;
        MediumField(std::vector<ColeColeParams> params, bool increment) : params_(std::move(params)), increment_(increment)
        {
            if (!increment_)
                for (std::size_t p = 0; p < params_.size(); ++p)
                    if (!params_[p].admissible())
                        throw DomainError("MediumField: inadmissible parameters at voxel " + std::to_string(p));
        }

        static MediumField uniform(std::size_t P, const ColeColeParams &v, bool increment = false)
        {
            return MediumField(std::vector<ColeColeParams>(P, v), increment);
        }
        static MediumField zero_increment(std::size_t P) { return uniform(P, ColeColeParams{0, 0, 0, 0, 0}, true); }

        std::size_t size() const { return params_.size(); }
        bool is_increment() const { return increment_; }
        const ColeColeParams &operator[](std::size_t p) const { return params_[p]; }
        const std::vector<ColeColeParams> &params() const { return params_; }

        void require_grid(const Grid &g) const
        {
            if (params_.size() != g.size())
                throw ConfigError("MediumField: length does not match grid voxel count");
        }

        bool is_zero() const
        {
            for (const auto &p : params_)
                for (double v : p.to_array())
                    if (v != 0.0)
                        return false;
            return true;
        }

        friend bool operator==(const MediumField &, const MediumField &) = default;

    private:
        std::vector<ColeColeParams> params_;
        bool increment_ = false;
    };

    /// Homogeneous physical background of a scene.
    inline MediumField background_field(SceneId scene, const Grid &grid)
    {
        return MediumField::uniform(grid.size(), scene_info(scene).params);
    }

    /// Reference field for an explicit background medium.
    inline MediumField build_reference_field(const ColeColeParams &bg, const ReferenceSpec &spec, const Grid &grid)
    {
        spec.validate();
        if (!bg.admissible())
            throw DomainError("build_reference_field: background medium is not admissible");
        switch (spec.kind)
        {
        case ReferenceKind::R0: return MediumField::uniform(grid.size(), bg);
        case ReferenceKind::R1: return MediumField::uniform(grid.size(), project_physical(spec.bias.apply(bg)));
        case ReferenceKind::R2: return MediumField::uniform(grid.size(), spec.generic);
        }
        throw ConfigError("build_reference_field: unknown reference kind");
    }

    inline MediumField build_reference_field(SceneId scene, const ReferenceSpec &spec, const Grid &grid)
    {
        return build_reference_field(scene_info(scene).params, spec, grid);
    }

    /// Deterministic residual mu_b - mu_ref (exactly zero for the matched reference).
    inline MediumField residual_mean_field(const ColeColeParams &background, const ReferenceSpec &spec, const Grid &grid)
    {
        const MediumField bg = MediumField::uniform(grid.size(), background);
        const MediumField ref = build_reference_field(background, spec, grid);
        std::vector<ColeColeParams> d(grid.size());
        for (std::size_t p = 0; p < grid.size(); ++p)
            d[p] = bg[p] - ref[p];
        return MediumField(std::move(d), true);
    }

    inline MediumField residual_mean_field(SceneId scene, const ReferenceSpec &spec, const Grid &grid)
    {
        return residual_mean_field(scene_info(scene).params, spec, grid);
    }

    /// Voxel-averaged Euclidean norm of a parameter increment field.
    inline double parameter_difference_norm(const MediumField &delta)
    {
        if (delta.size() == 0)
            return 0.0;
        double s = 0.0;
        for (const auto &p : delta.params())
            s += p.norm();
        return s / double(delta.size());
    }

    // ---------------------------------------------------------------------------------------------
    // Stochastic residual
    // ---------------------------------------------------------------------------------------------

    inline constexpr std::array<double, 5> default_rel_std{0.02, 0.02, 0.0, 0.005, 0.02};

    /// Residual law: deterministic mean plus independent per-voxel, per-parameter Gaussian
    /// perturbation with std rel_std[k] * |reference value of parameter k|.
    struct ResidualModel
    {
        MediumField reference;     ///< working reference medium (noise scale and clamping anchor)
        MediumField deterministic; ///< mean increment mu_b - mu_ref
        std::array<double, 5> rel_std = default_rel_std;

        void validate() const
        {
            if (reference.size() != deterministic.size())
                throw ConfigError("ResidualModel: reference and mean field sizes differ");
            for (double s : rel_std)
                if (!(s >= 0.0) || !std::isfinite(s))
                    throw ConfigError("ResidualModel: rel_std entries must be finite and nonnegative");
        }
    };

    /// Draws one residual field. Components whose perturbed value leaves the admissible box are
    /// replaced by the increment that lands exactly on the box face.
    template <class Rng>
    MediumField sample_residual(const ResidualModel &model, Rng &rng)
    {
        model.validate();
        std::normal_distribution<double> gauss(0.0, 1.0);
        const std::size_t P = model.reference.size();
        std::vector<ColeColeParams> out(P);
        for (std::size_t p = 0; p < P; ++p)
        {
            const auto ref = model.reference[p].to_array();
            auto d = model.deterministic[p].to_array();
            for (std::size_t k = 0; k < 5; ++k)
            {
                const double sd = model.rel_std[k] * std::abs(ref[k]);
                if (sd > 0.0)
                    d[k] += sd * gauss(rng);
            }
            std::array<double, 5> sum{};
            for (std::size_t k = 0; k < 5; ++k)
                sum[k] = ref[k] + d[k];
            const auto clamped = project_physical(ColeColeParams::from_array(sum)).to_array();
            for (std::size_t k = 0; k < 5; ++k)
                if (clamped[k] != sum[k])
                    d[k] = clamped[k] - ref[k];
            out[p] = ColeColeParams::from_array(d);
        }
        return MediumField(std::move(out), true);
    }

} // namespace fdalab

#endif // FDALAB_MEDIA_HPP
