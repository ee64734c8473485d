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

#include <stdexcept>
#include <string>

namespace mmwsync {

enum class ErrorCode {
  InvalidDimension,
  InvalidArgument,
  DimensionMismatch,
  DegenerateInput,
  Aliasing,
  Divergence,
  EstimationFailed,
  SizeGuard,
  RankDeficient,
  NonConvergent,
  Io,
  Parse,
};

const char* to_string(ErrorCode code) noexcept;

// Every library failure is reported through this type; the C API maps
// code() onto its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const char* what) {
  if (!cond) throw Error(code, what);
}

}  // namespace mmwsync
