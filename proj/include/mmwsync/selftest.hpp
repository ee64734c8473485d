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

#include <cstdint>
#include <functional>
#include <string>

namespace mmwsync::selftest {

// Oracle suite: fast vs tensor PBiGAMP steps, moment closed forms vs
// quadrature, tapwise vs factored forward model, CFO propagation identity and
// DFT unitarity. Each check reports one "PASS name: detail" or
// "FAIL name: detail" line.
/// Returns the number of failed checks.
int run(std::uint64_t seed, const std::function<void(const std::string&)>& line);

}  // namespace mmwsync::selftest
