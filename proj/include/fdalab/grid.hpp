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


#ifndef FDALAB_GRID_HPP
#define FDALAB_GRID_HPP

#include "common.hpp"

#include <algorithm>
#include <cstddef>
#include <vector>

namespace fdalab
{
    /// Regular voxelization of the subsurface domain. Voxel p = iz * nx + ix (row-major in depth),
    /// which is also the lexicographic grid order used for tie breaking.
    class Grid
    {
    public:
        struct Box
        {
            double x_min, x_max, z_min, z_max;
            bool contains(Vec2 v) const { return v.x >= x_min && v.x <= x_max && v.z >= z_min && v.z <= z_max; }
        };

        Grid() = default;

        /// Cell-centred nx-by-nz grid over `domain`; anomaly voxels are those whose centre lies in `anomaly`.
        static Grid regular(Box domain, std::size_t nx, std::size_t nz, Box anomaly)
        {
            if (nx == 0 || nz == 0)
                throw ConfigError("grid: nx and nz must be positive");
            if (!(domain.x_max > domain.x_min) || !(domain.z_max > domain.z_min))
                throw ConfigError("grid: empty domain extent");
            if (domain.z_min <= 0.0)
                throw ConfigError("grid: subsurface domain must lie strictly below the interface z = 0");

            Grid g;
            g.nx_ = nx;
            g.nz_ = nz;
            g.dx_ = (domain.x_max - domain.x_min) / double(nx);
            g.dz_ = (domain.z_max - domain.z_min) / double(nz);
            g.domain_ = domain;
            g.anomaly_box_ = anomaly;
            for (std::size_t iz = 0; iz < nz; ++iz)
                for (std::size_t ix = 0; ix < nx; ++ix)
                {
                    Vec2 c{domain.x_min + (double(ix) + 0.5) * g.dx_, domain.z_min + (double(iz) + 0.5) * g.dz_};
                    g.centers_.push_back(c);
                    g.weights_.push_back(g.dx_ * g.dz_);
                    if (anomaly.contains(c))
                        g.selection_.push_back(g.centers_.size() - 1);
                }
            if (g.selection_.empty())
                throw ConfigError("grid: anomaly region contains no voxel centre");
            return g;
        }

        /// Default experimental grid: 12x12 over x in [-1.5,1.5], z in [0.2,2.0]; 20 anomaly voxels.
        static Grid standard()
        {
            return regular({-1.5, 1.5, 0.2, 2.0}, 12, 12, {-0.5, 0.5, 0.6, 1.4});
        }

        /// Arbitrary voxel list (used by tests and custom layouts).
        static Grid from_voxels(std::vector<Vec2> centers, std::vector<double> weights, std::vector<std::size_t> selection)
        {
            if (centers.size() != weights.size() || centers.empty())
                throw ConfigError("grid: centers/weights length mismatch");
            for (double w : weights)
                if (!(w > 0.0))
                    throw ConfigError("grid: voxel weights must be positive");
            std::vector<std::size_t> sorted = selection;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw ConfigError("grid: anomaly selection indices must be unique");
            for (auto i : selection)
                if (i >= centers.size())
                    throw ConfigError("grid: anomaly selection index out of range");
            Grid g;
            g.centers_ = std::move(centers);
            g.weights_ = std::move(weights);
            g.selection_ = std::move(selection);
            g.nx_ = g.centers_.size();
            g.nz_ = 1;
            g.dx_ = g.dz_ = 0.0;
            return g;
        }

        std::size_t size() const { return centers_.size(); }
        std::size_t anomaly_size() const { return selection_.size(); }
        const std::vector<Vec2> &centers() const { return centers_; }
        const std::vector<double> &weights() const { return weights_; }
        const std::vector<std::size_t> &anomaly_selection() const { return selection_; }
        Vec2 center(std::size_t p) const { return centers_[p]; }
        double weight(std::size_t p) const { return weights_[p]; }
        std::size_t nx() const { return nx_; }
        std::size_t nz() const { return nz_; }

        /// Half the smallest voxel edge (zero for irregular grids).
        double distance_floor() const { return 0.5 * std::min(dx_, dz_); }

        /// Voxel mirrored about x = 0 (regular grids symmetric about x = 0 only).
        std::size_t mirror(std::size_t p) const
        {
            std::size_t iz = p / nx_, ix = p % nx_;
            return iz * nx_ + (nx_ - 1 - ix);
        }

        Grid with_scaled_weights(double s) const
        {
            Grid g = *this;
            for (auto &w : g.weights_)
                w *= s;
            return g;
        }

    private:
        std::vector<Vec2> centers_;
        std::vector<double> weights_;
        std::vector<std::size_t> selection_;
        std::size_t nx_ = 0, nz_ = 0;
        double dx_ = 0.0, dz_ = 0.0;
        Box domain_{}, anomaly_box_{};
    };

    /// Transmit and receive element positions (air side, z < 0).
    struct ArrayGeometry
    {
        std::vector<Vec2> tx_positions;
        std::vector<Vec2> rx_positions;

        std::size_t N() const { return tx_positions.size(); }
        std::size_t M() const { return rx_positions.size(); }

        /// Uniform linear arrays centred on x = 0 at depth `z` (negative) with `spacing` metres pitch.
        static ArrayGeometry uniform(std::size_t n_tx, std::size_t n_rx, double spacing, double z)
        {
            if (n_tx == 0 || n_rx == 0)
                throw ConfigError("array: N and M must be positive");
            if (!(z < 0.0))
                throw ConfigError("array: elements must lie strictly above the interface z = 0");
            ArrayGeometry a;
            for (std::size_t n = 1; n <= n_tx; ++n)
                a.tx_positions.push_back({(double(n) - (double(n_tx) + 1.0) / 2.0) * spacing, z});
            for (std::size_t m = 1; m <= n_rx; ++m)
                a.rx_positions.push_back({(double(m) - (double(n_rx) + 1.0) / 2.0) * spacing, z});
            return a;
        }

        static ArrayGeometry standard() { return uniform(6, 8, 0.1, -0.1); }

        void validate() const
        {
            for (const auto &p : tx_positions)
                if (!(p.z < 0.0))
                    throw ConfigError("array: transmit element at or below the interface");
            for (const auto &p : rx_positions)
                if (!(p.z < 0.0))
                    throw ConfigError("array: receive element at or below the interface");
        }
    };

} // namespace fdalab

#endif // FDALAB_GRID_HPP
