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

#include "mmwsync/figures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <tuple>

#include "json.hpp"
#include "mmwsync/errors.hpp"
#include "mmwsync/harness.hpp"

namespace mmwsync::figures {

namespace fs = std::filesystem;
using harness::MetricRecord;

namespace {

struct Row {
  MetricRecord key;  // echo fields of the first record of the point
  harness::PointSummary s;
};

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Column {
  const char* name;
  std::function<std::string(const Row&)> get;
};

const std::vector<Column>& all_columns() {
  static const std::vector<Column> cols = {
      {"point", [](const Row& r) { return std::to_string(r.s.point); }},
      {"Nrx", [](const Row& r) { return std::to_string(r.key.Nrx); }},
      {"Ntx", [](const Row& r) { return std::to_string(r.key.Ntx); }},
      {"L", [](const Row& r) { return std::to_string(r.key.L); }},
      {"Np", [](const Row& r) { return std::to_string(r.key.Np); }},
      {"training", [](const Row& r) { return r.key.training; }},
      {"q", [](const Row& r) { return r.key.q; }},
      {"channel_model", [](const Row& r) { return r.key.channel_model; }},
      {"snr_db", [](const Row& r) { return num(r.key.snr_db); }},
      {"cfo_mode", [](const Row& r) { return r.key.cfo_mode; }},
      {"cfo_value", [](const Row& r) { return num(r.key.cfo_value); }},
      {"epsilon", [](const Row& r) { return num(r.key.epsilon); }},
      {"beta", [](const Row& r) { return num(r.key.beta); }},
      {"trials", [](const Row& r) { return std::to_string(r.s.trials); }},
      {"median_nmse_db", [](const Row& r) { return num(r.s.median_nmse_db); }},
      {"mean_nmse_db", [](const Row& r) { return num(r.s.mean_nmse_db); }},
      {"trimmed_mean_nmse_db", [](const Row& r) { return num(r.s.trimmed_mean_nmse_db); }},
      {"cfo_mse", [](const Row& r) { return num(r.s.cfo_mse); }},
      {"cfo_mse_db", [](const Row& r) { return num(harness::to_db(r.s.cfo_mse)); }},
      {"success_fraction", [](const Row& r) { return num(r.s.success_fraction); }},
      {"diverged", [](const Row& r) { return std::to_string(r.s.diverged); }},
  };
  return cols;
}

const Column& column(const std::string& name) {
  for (const auto& c : all_columns())
    if (name == c.name) return c;
  fail(ErrorCode::InvalidArgument, "figures: unknown column " + name);
}

using SortKey = std::function<std::tuple<std::string, std::string, std::string, std::string,
                                         double>(const Row&)>;

std::string write_table(const fs::path& path, std::vector<Row> rows,
                        const std::vector<std::string>& cols, const SortKey& key) {
  std::stable_sort(rows.begin(), rows.end(),
                   [&](const Row& a, const Row& b) { return key(a) < key(b); });
  std::ofstream os(path);
  if (!os) fail(ErrorCode::Io, "figures: cannot write " + path.string());
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << column(cols[i]).get(r);
    os << '\n';
  }
  if (!os) fail(ErrorCode::Io, "figures: write failed for " + path.string());
  return path.string();
}

std::string series(const Row& r) { return r.key.training + "|" + r.key.q + "|" + r.key.channel_model; }

}  // namespace

std::vector<std::string> write_figures(const std::string& in_dir, const std::string& out_dir) {
  const auto records = harness::read_records_csv((fs::path(in_dir) / "records.csv").string());
  require(!records.empty(), ErrorCode::DegenerateInput, "figures: records.csv has no rows");

  double threshold = 0.1;
  double trim = 0.0;
  const fs::path manifest = fs::path(in_dir) / "manifest.json";
  if (fs::exists(manifest)) {
    std::ifstream is(manifest);
    try {
      const auto j = nlohmann::json::parse(is);
      threshold = j.at("config").value("success_threshold", threshold);
      trim = j.at("config").value("trim_fraction", trim);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, std::string("figures: bad manifest: ") + e.what());
    }
  }

  std::map<int, MetricRecord> first;
  for (const auto& r : records) first.emplace(r.point, r);
  std::vector<Row> rows;
  for (const auto& [p, rec] : first)
    rows.push_back({rec, harness::summarize(records, p, threshold, trim)});

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "figures: cannot create " + out_dir);
  const fs::path out(out_dir);
  std::vector<std::string> written;

  std::vector<std::string> all;
  for (const auto& c : all_columns()) all.push_back(c.name);
  written.push_back(write_table(out / "summary.csv", rows, all, [](const Row& r) {
    return std::make_tuple(std::string(), std::string(), std::string(), std::string(),
                           static_cast<double>(r.s.point));
  }));

  const std::vector<std::string> nmse_cols = {"median_nmse_db", "mean_nmse_db",
                                              "trimmed_mean_nmse_db", "success_fraction", "trials"};
  const std::vector<std::string> cfo_cols = {"cfo_mse", "cfo_mse_db", "trials"};
  auto with = [](std::vector<std::string> head, const std::vector<std::string>& tail) {
    head.insert(head.end(), tail.begin(), tail.end());
    return head;
  };

  written.push_back(write_table(
      out / "nmse_vs_np.csv", rows,
      with({"training", "q", "snr_db", "cfo_value", "beta", "Np"}, nmse_cols), [](const Row& r) {
        return std::make_tuple(series(r), num(r.key.snr_db), num(r.key.cfo_value),
                               num(r.key.beta), static_cast<double>(r.key.Np));
      }));
  written.push_back(write_table(
      out / "nmse_vs_snr.csv", rows,
      with({"training", "q", "Np", "cfo_value", "beta", "snr_db"}, nmse_cols), [](const Row& r) {
        return std::make_tuple(series(r), std::to_string(r.key.Np), num(r.key.cfo_value),
                               num(r.key.beta), r.key.snr_db);
      }));
  written.push_back(write_table(
      out / "cfo_mse_vs_snr.csv", rows,
      with({"training", "q", "Np", "cfo_value", "beta", "snr_db"}, cfo_cols), [](const Row& r) {
        return std::make_tuple(series(r), std::to_string(r.key.Np), num(r.key.cfo_value),
                               num(r.key.beta), r.key.snr_db);
      }));
  written.push_back(write_table(
      out / "cfo_mse_vs_np.csv", rows,
      with({"training", "q", "snr_db", "cfo_value", "beta", "Np"}, cfo_cols), [](const Row& r) {
        return std::make_tuple(series(r), num(r.key.snr_db), num(r.key.cfo_value),
                               num(r.key.beta), static_cast<double>(r.key.Np));
      }));

  std::vector<Row> ppm_rows;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(ppm_rows),
               [](const Row& r) { return r.key.cfo_mode == "ppm"; });
  written.push_back(write_table(
      out / "nmse_vs_ppm.csv", ppm_rows,
      with({"training", "q", "Np", "snr_db", "beta", "cfo_value", "epsilon"}, nmse_cols),
      [](const Row& r) {
        return std::make_tuple(series(r), std::to_string(r.key.Np), num(r.key.snr_db),
                               num(r.key.beta), r.key.cfo_value);
      }));

  const fs::path cdf_path = out / "nse_cdf.csv";
  std::ofstream cdf(cdf_path);
  if (!cdf) fail(ErrorCode::Io, "figures: cannot write " + cdf_path.string());
  cdf << "point,Np,training,q,snr_db,cfo_value,nse,nse_db,fraction\n";
  for (const auto& row : rows) {
    std::vector<MetricRecord> sel;
    for (const auto& r : records)
      if (r.point == row.s.point) sel.push_back(r);
    for (const auto& c : harness::nse_cdf(sel)) {
      cdf << row.s.point << ',' << row.key.Np << ',' << row.key.training << ',' << row.key.q << ','
          << num(row.key.snr_db) << ',' << num(row.key.cfo_value) << ',' << num(c.nse) << ','
          << num(harness::to_db(c.nse)) << ',' << num(c.fraction) << '\n';
    }
  }
  if (!cdf) fail(ErrorCode::Io, "figures: write failed for " + cdf_path.string());
  written.push_back(cdf_path.string());
  return written;
}

}  // namespace mmwsync::figures
