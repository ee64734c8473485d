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

#include <map>
#include <string>
#include <vector>

#include "mmwsync/channel.hpp"
#include "mmwsync/measurement.hpp"
#include "mmwsync/training.hpp"

// Flat fixture files: complex entries, row-major within a block, blocks in
// order l = 0..L-1. The format follows the extension: ".csv" is text with a
// "# mmwsync" header line and one "re,im" pair per line; anything else is
// little-endian binary (magic "MMWS", version, header, float64 pairs).
namespace mmwsync::fixture_io {

struct Fixture {
  std::string kind;
  int rows = 0;
  int cols = 0;
  std::map<std::string, double> meta;
  std::vector<cmat> blocks;
};

void write_fixture(const std::string& path, const Fixture& f);
Fixture read_fixture(const std::string& path);

void save_channel(const std::string& path, const channel::AngleDelayChannel& C);
channel::AngleDelayChannel load_channel(const std::string& path);

void save_taps(const std::string& path, const channel::WidebandChannel& h);
channel::WidebandChannel load_taps(const std::string& path);

void save_training(const std::string& path, const training::TrainingBlock& T);
training::TrainingBlock load_training(const std::string& path);

void save_received(const std::string& path, const measurement::ReceivedBlock& Y);
measurement::ReceivedBlock load_received(const std::string& path);

}  // namespace mmwsync::fixture_io
