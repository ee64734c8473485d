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

#include "mmwsync/fixture_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mmwsync/errors.hpp"

namespace mmwsync::fixture_io {

namespace {

constexpr char kMagic[4] = {'M', 'M', 'W', 'S'};
constexpr std::uint32_t kVersion = 1;

bool is_csv(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

void check_blocks(const Fixture& f) {
  require(f.rows > 0 && f.cols > 0 && !f.blocks.empty(), ErrorCode::InvalidDimension,
          "fixture: empty payload");
  for (const auto& b : f.blocks)
    require(b.rows() == f.rows && b.cols() == f.cols, ErrorCode::DimensionMismatch,
            "fixture: blocks must share one shape");
}

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) fail(ErrorCode::Io, "fixture: truncated file " + path);
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is, const std::string& path) {
  const auto n = get<std::uint32_t>(is, path);
  if (n > 4096) fail(ErrorCode::Parse, "fixture: implausible string length in " + path);
  std::string s(n, '\0');
  is.read(s.data(), n);
  if (!is) fail(ErrorCode::Io, "fixture: truncated file " + path);
  return s;
}

void write_csv(const std::string& path, const Fixture& f) {
  std::ofstream os(path);
  if (!os) fail(ErrorCode::Io, "fixture: cannot open " + path + " for writing");
  os << "# mmwsync " << f.kind << " rows=" << f.rows << " cols=" << f.cols
     << " blocks=" << f.blocks.size();
  os.precision(17);
  for (const auto& [k, v] : f.meta) os << ' ' << k << '=' << v;
  os << "\nre,im\n";
  for (const auto& b : f.blocks)
    for (int r = 0; r < f.rows; ++r)
      for (int c = 0; c < f.cols; ++c) os << b(r, c).real() << ',' << b(r, c).imag() << '\n';
  if (!os) fail(ErrorCode::Io, "fixture: write failed for " + path);
}

Fixture read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::Io, "fixture: cannot open " + path);
  std::string line;
  std::getline(is, line);
  std::istringstream hs(line);
  std::string hash, tag;
  hs >> hash >> tag;
  if (hash != "#" || tag != "mmwsync") fail(ErrorCode::Parse, "fixture: bad header in " + path);
  Fixture f;
  hs >> f.kind;
  int nblocks = 0;
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(ErrorCode::Parse, "fixture: bad header field " + kv);
    const std::string key = kv.substr(0, eq);
    const double val = std::stod(kv.substr(eq + 1));
    if (key == "rows") f.rows = static_cast<int>(val);
    else if (key == "cols") f.cols = static_cast<int>(val);
    else if (key == "blocks") nblocks = static_cast<int>(val);
    else f.meta[key] = val;
  }
  if (f.rows <= 0 || f.cols <= 0 || nblocks <= 0)
    fail(ErrorCode::Parse, "fixture: missing dimensions in " + path);
  std::getline(is, line);  // column names
  for (int b = 0; b < nblocks; ++b) {
    cmat M(f.rows, f.cols);
    for (int r = 0; r < f.rows; ++r) {
      for (int c = 0; c < f.cols; ++c) {
        if (!std::getline(is, line)) fail(ErrorCode::Parse, "fixture: truncated " + path);
        const auto comma = line.find(',');
        if (comma == std::string::npos) fail(ErrorCode::Parse, "fixture: bad row in " + path);
        M(r, c) = {std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))};
      }
    }
    f.blocks.push_back(std::move(M));
  }
  return f;
}

void write_bin(const std::string& path, const Fixture& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorCode::Io, "fixture: cannot open " + path + " for writing");
  os.write(kMagic, 4);
  put(os, kVersion);
  put_string(os, f.kind);
  put<std::int32_t>(os, f.rows);
  put<std::int32_t>(os, f.cols);
  put<std::int32_t>(os, static_cast<std::int32_t>(f.blocks.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(f.meta.size()));
  for (const auto& [k, v] : f.meta) {
    put_string(os, k);
    put(os, v);
  }
  for (const auto& b : f.blocks)
    for (int r = 0; r < f.rows; ++r)
      for (int c = 0; c < f.cols; ++c) {
        put(os, b(r, c).real());
        put(os, b(r, c).imag());
      }
  if (!os) fail(ErrorCode::Io, "fixture: write failed for " + path);
}

Fixture read_bin(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::Io, "fixture: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    fail(ErrorCode::Parse, "fixture: bad magic in " + path);
  if (get<std::uint32_t>(is, path) != kVersion)
    fail(ErrorCode::Parse, "fixture: unsupported version in " + path);
  Fixture f;
  f.kind = get_string(is, path);
  f.rows = get<std::int32_t>(is, path);
  f.cols = get<std::int32_t>(is, path);
  const auto nblocks = get<std::int32_t>(is, path);
  const auto nmeta = get<std::uint32_t>(is, path);
  if (f.rows <= 0 || f.cols <= 0 || nblocks <= 0 || nmeta > 64)
    fail(ErrorCode::Parse, "fixture: bad header in " + path);
  for (std::uint32_t j = 0; j < nmeta; ++j) {
    std::string k = get_string(is, path);
    f.meta[k] = get<double>(is, path);
  }
  for (int b = 0; b < nblocks; ++b) {
    cmat M(f.rows, f.cols);
    for (int r = 0; r < f.rows; ++r)
      for (int c = 0; c < f.cols; ++c) {
        const double re = get<double>(is, path);
        const double im = get<double>(is, path);
        M(r, c) = {re, im};
      }
    f.blocks.push_back(std::move(M));
  }
  return f;
}

Fixture expect(const std::string& path, const std::string& kind) {
  Fixture f = read_fixture(path);
  if (f.kind != kind)
    fail(ErrorCode::Parse, "fixture: " + path + " holds '" + f.kind + "', expected '" + kind + "'");
  return f;
}

double meta_or(const Fixture& f, const std::string& key, double fallback) {
  const auto it = f.meta.find(key);
  return it == f.meta.end() ? fallback : it->second;
}

}  // namespace

void write_fixture(const std::string& path, const Fixture& f) {
  check_blocks(f);
  if (is_csv(path)) write_csv(path, f);
  else write_bin(path, f);
}

Fixture read_fixture(const std::string& path) {
  Fixture f = is_csv(path) ? read_csv(path) : read_bin(path);
  check_blocks(f);
  return f;
}

void save_channel(const std::string& path, const channel::AngleDelayChannel& C) {
  require(C.Ntx > 0 && C.L > 0 && C.C.cols() == static_cast<Eigen::Index>(C.Ntx) * C.L,
          ErrorCode::DimensionMismatch, "save_channel: inconsistent channel");
  Fixture f{"angle_delay", C.Nrx(), C.Ntx, {}, {}};
  for (int ell = 0; ell < C.L; ++ell) f.blocks.push_back(C.block(ell));
  write_fixture(path, f);
}

channel::AngleDelayChannel load_channel(const std::string& path) {
  const Fixture f = expect(path, "angle_delay");
  channel::AngleDelayChannel C;
  C.Ntx = f.cols;
  C.L = static_cast<int>(f.blocks.size());
  C.C.resize(f.rows, static_cast<Eigen::Index>(f.cols) * C.L);
  for (int ell = 0; ell < C.L; ++ell) C.C.middleCols(ell * C.Ntx, C.Ntx) = f.blocks[ell];
  return C;
}

void save_taps(const std::string& path, const channel::WidebandChannel& h) {
  require(h.L() > 0, ErrorCode::InvalidDimension, "save_taps: no taps");
  Fixture f{"taps", h.Nrx(), h.Ntx(), {{"T", h.T}}, h.taps};
  write_fixture(path, f);
}

channel::WidebandChannel load_taps(const std::string& path) {
  const Fixture f = expect(path, "taps");
  channel::WidebandChannel h;
  h.T = meta_or(f, "T", 10e-9);
  h.taps = f.blocks;
  return h;
}

void save_training(const std::string& path, const training::TrainingBlock& T) {
  Fixture f{"training", T.Ntx(), T.Np(), {{"P", T.P}}, {T.T}};
  write_fixture(path, f);
}

training::TrainingBlock load_training(const std::string& path) {
  const Fixture f = expect(path, "training");
  require(f.blocks.size() == 1, ErrorCode::Parse, "load_training: expected one block");
  return {f.blocks[0], meta_or(f, "P", 1.0)};
}

void save_received(const std::string& path, const measurement::ReceivedBlock& Y) {
  Fixture f{"received",
            static_cast<int>(Y.Y.rows()),
            static_cast<int>(Y.Y.cols()),
            {{"q", Y.q == measurement::Quantizer::OneBit ? 1.0 : 0.0}, {"sigma2", Y.sigma2}},
            {Y.Y}};
  write_fixture(path, f);
}

measurement::ReceivedBlock load_received(const std::string& path) {
  const Fixture f = expect(path, "received");
  require(f.blocks.size() == 1, ErrorCode::Parse, "load_received: expected one block");
  measurement::ReceivedBlock Y;
  Y.Y = f.blocks[0];
  Y.q = meta_or(f, "q", 0.0) == 1.0 ? measurement::Quantizer::OneBit : measurement::Quantizer::Full;
  Y.sigma2 = meta_or(f, "sigma2", 0.0);
  return Y;
}

}  // namespace mmwsync::fixture_io
