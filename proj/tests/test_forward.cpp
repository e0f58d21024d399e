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


#include <catch2/catch_amalgamated.hpp>

#include "fdalab/forward.hpp"
#include "fdalab/media.hpp"

#include <cmath>
#include <random>
#include <vector>

using namespace fdalab;
using Catch::Matchers::WithinRel;

static const double omega_c = 2.0 * pi * 1e8;

static std::vector<CodedChannel> path(PatternTag t, double df, std::vector<std::size_t> perm = {})
{
    return coding_path({t, perm}, 6, 1e8, df, {0.0, -0.1}, {0.1, 0.0});
}

// ================================================================================================
// Coding path
// ================================================================================================

TEST_CASE("Coding - centred indices for N = 6")
{
    const auto ch = path(PatternTag::C1, 1e5);
    const std::vector<double> kappa{-2.5, -1.5, -0.5, 0.5, 1.5, 2.5};
    REQUIRE(ch.size() == 6);
    for (std::size_t n = 0; n < 6; ++n)
    {
        CHECK(ch[n].kappa == kappa[n]);
        CHECK_THAT(ch[n].omega, WithinRel(2.0 * pi * (1e8 + kappa[n] * 1e5), 1e-15));
        CHECK_THAT(ch[n].tx_pos.x, WithinRel(kappa[n] * 0.1, 1e-15));
    }
}

TEST_CASE("Coding - pattern organizations")
{
    for (const auto &c : path(PatternTag::C2, 1e5))
        CHECK(c.omega == 2.0 * pi * 1e8);
    for (const auto &c : path(PatternTag::C3, 1e6))
        CHECK(c.tx_pos == Vec2{0.0, -0.1});

    const auto c1 = path(PatternTag::C1, 1e4);
    const auto c4id = path(PatternTag::C4, 1e4, {1, 2, 3, 4, 5, 6});
    for (std::size_t n = 0; n < 6; ++n)
    {
        CHECK(c1[n].omega == c4id[n].omega);
        CHECK(c1[n].tx_pos == c4id[n].tx_pos);
    }

    const auto c4 = path(PatternTag::C4, 1e4);
    const std::vector<std::size_t> perm{3, 1, 5, 2, 6, 4};
    for (std::size_t n = 0; n < 6; ++n)
    {
        CHECK(c4[n].omega == c1[perm[n] - 1].omega);
        CHECK(c4[n].tx_pos == c1[n].tx_pos);
    }
}

TEST_CASE("Coding - invalid inputs")
{
    CHECK_THROWS_AS(path(PatternTag::C1, 5e7), ConfigError);
    CHECK_THROWS_AS(path(PatternTag::C4, 1e5, {1, 1, 2, 3, 4, 5}), ConfigError);
    CHECK_THROWS_AS(path(PatternTag::C4, 1e5, {1, 2, 3}), ConfigError);
    CHECK_THROWS_AS(parse_pattern("C9"), ConfigError);
}

// ================================================================================================
// Kernel
// ================================================================================================

TEST_CASE("Kernel - high-precision reference values")
{
    const cplx e4 = cole_cole_eval(scene_info(SceneId::S4).params, omega_c);
    KernelModel km;
    km.distance_floor = 0.075;
    const cplx cross = halfspace_kernel({0.0, -0.1}, {0.3, 0.8}, omega_c, e4, km);
    const cplx inside = halfspace_kernel({0.1, 0.5}, {-0.2, 1.1}, omega_c, e4, km);
    const cplx cross_ref{-0.0005475096458296281785, 0.0027038237531326222288};
    const cplx inside_ref{-0.013849495989914944182, -0.016685062241782554644};
    CHECK(std::abs(cross - cross_ref) / std::abs(cross_ref) < 1e-10);
    CHECK(std::abs(inside - inside_ref) / std::abs(inside_ref) < 1e-10);
}

TEST_CASE("Kernel - lossy medium decays with depth")
{
    const cplx e4 = cole_cole_eval(scene_info(SceneId::S4).params, omega_c);
    double prev = 1e300;
    for (double z : {0.5, 1.0, 1.5})
    {
        const double a = std::abs(halfspace_kernel({0.0, -0.1}, {0.0, z}, omega_c, e4));
        CHECK(a < prev);
        prev = a;
    }
}

TEST_CASE("Kernel - reciprocity and matched-interface transmission")
{
    const cplx e = cole_cole_eval(scene_info(SceneId::S3).params, omega_c);
    const cplx a = halfspace_kernel({0.2, 0.4}, {-0.3, 1.0}, omega_c, e);
    const cplx b = halfspace_kernel({-0.3, 1.0}, {0.2, 0.4}, omega_c, e);
    CHECK(std::abs(a - b) <= 1e-15 * std::abs(a));

    // air-filled lower half-space: free-space kernel with unit transmission
    const cplx free = halfspace_kernel({0.0, -0.1}, {0.0, 0.9}, omega_c, eps0);
    const cplx expect = std::exp(cplx(0.0, -omega_c / c0 * 1.0)) / (4.0 * pi * 1.0);
    CHECK(std::abs(free - expect) < 1e-14);
}

TEST_CASE("Kernel - wavenumber branch")
{
    const cplx k = wavenumber(omega_c, cole_cole_eval(scene_info(SceneId::S4).params, omega_c));
    CHECK(k.imag() < 0.0);
    CHECK(k.real() > 0.0);
}

// ================================================================================================
// Propagation matrix
// ================================================================================================

TEST_CASE("Propagation matrix - reference entry")
{
    const Grid g = Grid::standard();
    const auto arr = ArrayGeometry::standard();
    const auto ch = path(PatternTag::C1, 1e5);
    const auto ref = build_reference_field(SceneId::S3, {ReferenceKind::R0}, g);
    const auto H = assemble_H(g, arr, ch[0], ref).entries;
    REQUIRE(H.rows() == 8);
    REQUIRE(H.cols() == 144);
    const cplx h00{0.00003595152099289813165, -0.000087709841337440545442};
    CHECK(std::abs(H(0, 0) - h00) / std::abs(h00) < 1e-10);
}

TEST_CASE("Propagation matrix - mirror symmetry at the centre channel")
{
    // C2 keeps every tx on its own position; an odd array has a centre element at x = 0
    const Grid g = Grid::standard();
    const auto arr = ArrayGeometry::uniform(5, 8, 0.1, -0.1);
    const auto ch = coding_path({PatternTag::C2, {}}, 5, 1e8, 1e5, {0.0, -0.1}, {0.1, 0.0});
    const auto ref = build_reference_field(SceneId::S5, {ReferenceKind::R0}, g);
    const auto H = assemble_H(g, arr, ch[2], ref).entries;
    double worst = 0.0;
    for (Eigen::Index m = 0; m < 8; ++m)
        for (std::size_t p = 0; p < g.size(); ++p)
            worst = std::max(worst, std::abs(H(m, Eigen::Index(p)) - H(7 - m, Eigen::Index(g.mirror(p)))) /
                                        std::abs(H(m, Eigen::Index(p))));
    CHECK(worst < 1e-12);
}

TEST_CASE("Propagation matrix - kernel gain and null transmission")
{
    const Grid g = Grid::standard();
    const auto arr = ArrayGeometry::standard();
    const auto ch = path(PatternTag::C1, 1e5)[4];
    const auto ref = build_reference_field(SceneId::S4, {ReferenceKind::R1}, g);
    const CMat H = assemble_H(g, arr, ch, ref).entries;
    KernelModel km;
    km.gain = cplx(0.3, -1.2);
    const CMat Hg = assemble_H(g, arr, ch, ref, km).entries;
    CHECK((Hg - km.gain * km.gain * H).norm() <= 1e-14 * Hg.norm());

    KernelModel zero;
    zero.transmission_override = cplx(0.0, 0.0);
    CHECK(assemble_H(g, arr, ch, ref, zero).entries.norm() == 0.0);
}

TEST_CASE("Propagation matrix - linear in voxel weights")
{
    const Grid g = Grid::standard();
    const auto arr = ArrayGeometry::standard();
    const auto ch = path(PatternTag::C3, 1e4);
    const auto ref = build_reference_field(SceneId::S1, {ReferenceKind::R2}, g);
    const auto H1 = assemble_H(g, arr, ch[1], ref).entries;
    const auto H2 = assemble_H(g.with_scaled_weights(2.0), arr, ch[1], ref).entries;
    CHECK((H2 - 2.0 * H1).norm() <= 1e-14 * H1.norm());
}

// ================================================================================================
// Residual response
// ================================================================================================

TEST_CASE("Contrast - zero and first-order cases")
{
    const Grid g = Grid::standard();
    const auto ref = build_reference_field(SceneId::S5, {ReferenceKind::R0}, g);
    CHECK(contrast_vector(ref, MediumField::zero_increment(g.size()), omega_c).norm() == 0.0);

    const auto d = MediumField::uniform(g.size(), ColeColeParams{1e-3, 0.0, 0.0, 0.0, 0.0}, true);
    const CVec xi = contrast_vector(ref, d, omega_c);
    const cplx e = cole_cole_eval(ref[0], omega_c);
    const cplx expect = eps0 * 1e-3 / e;
    for (const auto &v : xi)
        CHECK(std::abs(v - expect) <= 1e-3 * std::abs(expect));

    CHECK_THROWS_AS(contrast_vector(ref, CVec::Zero(Eigen::Index(g.size())), d, omega_c), NumericalError);
}

TEST_CASE("Response - matched reference with zero residual closes exactly")
{
    const Grid g = Grid::standard();
    const auto arr = ArrayGeometry::standard();
    for (auto s : all_scenes)
    {
        const ReferenceSpec rs{ReferenceKind::R0};
        const auto ref = build_reference_field(s, rs, g);
        const auto det = residual_mean_field(s, rs, g);
        for (auto t : {PatternTag::C1, PatternTag::C2, PatternTag::C3, PatternTag::C4})
        {
            ForwardModel fm(g, arr, path(t, 1e5), ref, true);
            CHECK(fm.response(det).stacked().norm() == 0.0);
        }
    }
}

TEST_CASE("Response - feedback off reduces to H xi")
{
    const Grid g = Grid::standard();
    const auto arr = ArrayGeometry::standard();
    const auto ch = path(PatternTag::C1, 1e5)[3];
    const ReferenceSpec rs{ReferenceKind::R1};
    const auto ref = build_reference_field(SceneId::S2, rs, g);
    const auto det = residual_mean_field(SceneId::S2, rs, g);
    const ChannelOperator op(g, arr, ch, ref, {}, false);
    const CVec xi = op.contrast(det);
    CHECK((channel_response(g, arr, ch, ref, det, false) - op.H() * xi).norm() == 0.0);
    CHECK(kernel_feedback(g, arr, ch, ref, CVec::Zero(Eigen::Index(g.size()))).norm() == 0.0);
}

TEST_CASE("Response - feedback is quadratic in the contrast")
{
    const Grid g = Grid::standard();
    const auto arr = ArrayGeometry::standard();
    const auto ch = path(PatternTag::C1, 1e5)[0];
    const auto ref = build_reference_field(SceneId::S3, {ReferenceKind::R2}, g);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    CVec xi(Eigen::Index(g.size()));
    for (auto &v : xi)
        v = cplx(n(rng), n(rng));
    const CVec q1 = kernel_feedback(g, arr, ch, ref, xi);
    const CVec q3 = kernel_feedback(g, arr, ch, ref, cplx(0.0, 3.0) * xi);
    CHECK((q3 + 9.0 * q1).norm() <= 1e-12 * q1.norm());
}

TEST_CASE("Response - feedback matches a direct double sum")
{
    // small irregular layout so the O(P^2) sum is written out explicitly
    const std::vector<Vec2> centers{{0.0, 0.5}, {0.3, 0.7}, {-0.2, 0.9}, {0.1, 1.2}};
    const std::vector<double> w{0.01, 0.02, 0.015, 0.01};
    const Grid g = Grid::from_voxels(centers, w, {0, 1, 2, 3});
    const auto arr = ArrayGeometry::uniform(1, 2, 0.2, -0.1);
    const CodedChannel ch{1, 0.0, omega_c, {0.0, -0.1}};
    const auto ref = MediumField::uniform(4, scene_info(SceneId::S4).params);
    const CVec xi = (CVec(4) << cplx(0.1, 0.02), cplx(-0.05, 0.0), cplx(0.02, -0.03), cplx(0.07, 0.01)).finished();

    const cplx e = cole_cole_eval(ref[0], omega_c);
    const double k2 = omega_c * omega_c * mu0;
    KernelModel km;
    CVec q = CVec::Zero(2);
    for (std::size_t m = 0; m < 2; ++m)
        for (std::size_t p = 0; p < 4; ++p)
            for (std::size_t r = 0; r < 4; ++r)
            {
                if (p == r)
                    continue;
                const cplx G0 = halfspace_kernel(centers[r], centers[p], omega_c, e, km);
                const cplx gt_p = halfspace_kernel(ch.tx_pos, centers[p], omega_c, e, km);
                const cplx gt_r = halfspace_kernel(ch.tx_pos, centers[r], omega_c, e, km);
                const cplx gr_p = halfspace_kernel(centers[p], arr.rx_positions[m], omega_c, e, km);
                const cplx gr_r = halfspace_kernel(centers[r], arr.rx_positions[m], omega_c, e, km);
                // transmit side: field at p scattered from r; receive side: p radiates to rx via r
                q(Eigen::Index(m)) += k2 * gr_p * xi(p) * w[p] * G0 * xi(r) * e * gt_r * w[r];
                q(Eigen::Index(m)) += k2 * gr_r * xi(r) * e * w[r] * G0 * xi(p) * gt_p * w[p];
            }
    const CVec got = kernel_feedback(g, arr, ch, ref, xi);
    CHECK((got - q).norm() <= 1e-12 * q.norm());
}

TEST_CASE("Response - nonlinear in finite increments, linear for tiny ones")
{
    const Grid g = Grid::standard();
    const auto arr = ArrayGeometry::standard();
    const auto ch = path(PatternTag::C1, 1e5)[2];
    const auto ref = build_reference_field(SceneId::S2, {ReferenceKind::R0}, g);

    const auto a = MediumField::uniform(g.size(), ColeColeParams{0.5, 30.0, 0.0, 0.05, 0.0}, true);
    const auto b = MediumField::uniform(g.size(), ColeColeParams{-0.3, 20.0, 0.0, 0.02, 1e-4}, true);
    std::vector<ColeColeParams> sum(g.size());
    for (std::size_t p = 0; p < g.size(); ++p)
        sum[p] = a[p] + b[p];
    const CVec rab = channel_response(g, arr, ch, ref, MediumField(sum, true));
    const CVec ra = channel_response(g, arr, ch, ref, a), rb = channel_response(g, arr, ch, ref, b);
    CHECK((rab - ra - rb).norm() > 1e-6 * rab.norm());

    const ColeColeParams tiny{8e-6, 9.92e-4, 0.0, 0.0, 0.0};
    const ColeColeParams tiny2{1.6e-5, 1.984e-3, 0.0, 0.0, 0.0};
    const CVec r1 = channel_response(g, arr, ch, ref, MediumField::uniform(g.size(), tiny, true));
    const CVec r2 = channel_response(g, arr, ch, ref, MediumField::uniform(g.size(), tiny2, true));
    CHECK((r2 - 2.0 * r1).norm() <= 1e-4 * r2.norm());
}

TEST_CASE("Response - batched and single evaluation agree")
{
    const Grid g = Grid::standard();
    const auto arr = ArrayGeometry::standard();
    const ReferenceSpec rs{ReferenceKind::R1};
    const auto ref = build_reference_field(SceneId::S5, rs, g);
    ResidualModel model{ref, residual_mean_field(SceneId::S5, rs, g)};
    ForwardModel fm(g, arr, path(PatternTag::C4, 1e5), ref, true);
    std::mt19937_64 rng(12);
    std::vector<MediumField> draws;
    for (int i = 0; i < 5; ++i)
        draws.push_back(sample_residual(model, rng));
    const auto batch = fm.responses(draws);
    for (std::size_t i = 0; i < draws.size(); ++i)
    {
        const CVec single = fm.response(draws[i]).stacked();
        CHECK((batch[i].stacked() - single).norm() <= 1e-12 * single.norm());
    }
}

TEST_CASE("Response - small frequency offsets barely change the channel responses")
{
    const Grid g = Grid::standard();
    const auto arr = ArrayGeometry::standard();
    for (auto s : all_scenes)
        for (auto r : {ReferenceKind::R1, ReferenceKind::R2})
        {
            const ReferenceSpec rs{r};
            const auto ref = build_reference_field(s, rs, g);
            const auto det = residual_mean_field(s, rs, g);
            std::vector<std::vector<double>> norms;
            for (double df : {1e4, 1e5, 1e6})
            {
                ForwardModel fm(g, arr, path(PatternTag::C1, df), ref, true);
                std::vector<double> v;
                const auto resp = fm.response(det);
                for (const auto &c : resp.per_channel())
                    v.push_back(c.norm());
                norms.push_back(v);
            }
            for (std::size_t k = 0; k + 1 < norms.size(); ++k)
                for (std::size_t n = 0; n < 6; ++n)
                    { INFO(to_string(s) << " " << to_string(r) << " k=" << k << " n=" << n); CHECK(std::abs(norms[k + 1][n] - norms[k][n]) < 0.05 * norms[k][n]); }
        }
}

TEST_CASE("Stacked response - channel-major layout")
{
    std::vector<CVec> blocks{CVec::Constant(3, cplx(1, 0)), CVec::Constant(3, cplx(2, 0))};
    const auto r = stacked_response(blocks);
    CHECK(r.stacked().size() == 6);
    CHECK(r.stacked()(4) == cplx(2, 0));
    CHECK(r.stacked().squaredNorm() == blocks[0].squaredNorm() + blocks[1].squaredNorm());
    CHECK(stacked_response({blocks[0]}).stacked() == blocks[0]);
    const auto back = ObservationResponse::from_stacked(r.stacked(), 3);
    CHECK(back.block(0) == blocks[0]);
    CHECK_THROWS_AS(ObservationResponse::from_stacked(r.stacked(), 4), ConfigError);
}
