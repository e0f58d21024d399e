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


#ifndef FDALAB_HPP
#define FDALAB_HPP

#include "fdalab/common.hpp"
#include "fdalab/grid.hpp"
#include "fdalab/media.hpp"
#include "fdalab/forward.hpp"
#include "fdalab/stats.hpp"
#include "fdalab/recon.hpp"
#include "fdalab/downstream.hpp"
#include "fdalab/config.hpp"
#include "fdalab/table.hpp"
#include "fdalab/studies.hpp"

#endif // FDALAB_HPP
