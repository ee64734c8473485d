// SPDX-License-Identifier: Apache-2.0
//
// mmwsync: joint CFO and wideband mmWave channel estimation with bilinear
// message passing
// Copyright (C) 2026 The mmwsync authors
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

#pragma once

#include <string>
#include <vector>

namespace mmwsync::figures {

// Aggregates records.csv from in_dir into per-figure CSVs in out_dir:
// summary.csv, nmse_vs_np.csv, nmse_vs_snr.csv, cfo_mse_vs_snr.csv,
// cfo_mse_vs_np.csv, nmse_vs_ppm.csv and nse_cdf.csv. The success threshold
// and trim fraction come from in_dir/manifest.json when present.
/// Returns the paths written.
std::vector<std::string> write_figures(const std::string& in_dir, const std::string& out_dir);

}  // namespace mmwsync::figures
