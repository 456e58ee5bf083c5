// Copyright 2026 The dlfuzz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dlfuzz/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "dlfuzz/error.hpp"
#include "dlfuzz/fusion.hpp"

namespace dlfuzz {

std::vector<LogRow> parse_log(std::istream& in) {
  std::vector<LogRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& m = j.at("measurement");
      if (m.is_null()) continue;
      LogRow r;
      r.iteration = j.at("iteration").get<std::uint64_t>();
      r.performance = m.at("performance").get<double>();
      r.variety = m.at("variety").get<double>();
      r.time_seconds = m.at("time_seconds").get<double>();
      const std::string verdict = j.value("verdict", std::string("NoBug"));
      r.bug = verdict != "NoBug" && verdict != "Degraded";
      rows.push_back(r);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("line " + std::to_string(lineno), e.what());
    }
  }
  return rows;
}

std::vector<LogRow> read_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open log " + path.string());
  return parse_log(in);
}

namespace {

bool constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string general(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string cell(const std::optional<double>& v) { return v ? fixed(*v) : "NaN"; }

std::string row3(const std::string& a, const std::string& b, const std::string& c) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %-24s %s\n", a.c_str(), b.c_str(), c.c_str());
  return buf;
}

}  // namespace

std::string CorrelationReport::table() const {
  std::string out = row3("Variety & Performance", "Variety & Time", "n");
  out += row3(cell(variety_performance), cell(variety_time), std::to_string(n));
  return out;
}

CorrelationReport analyze_correlations(const std::vector<LogRow>& rows) {
  if (rows.size() < 2) throw InsufficientData("correlation analysis needs at least two log entries");
  std::vector<double> variety, performance, time;
  for (const auto& r : rows) {
    variety.push_back(r.variety);
    performance.push_back(r.performance);
    time.push_back(r.time_seconds);
  }
  CorrelationReport rep;
  rep.n = rows.size();
  if (!constant(variety) && !constant(performance)) {
    rep.variety_performance = pearson(variety, performance);
  }
  if (!constant(variety) && !constant(time)) rep.variety_time = pearson(variety, time);
  return rep;
}

double TimeGroup::time_per_model() const {
  return models == 0 ? 0.0 : total_time / static_cast<double>(models);
}

std::optional<double> TimeGroup::time_per_bug() const {
  if (bugs == 0) return std::nullopt;
  return total_time / static_cast<double>(bugs);
}

std::string TimeSplitReport::table() const {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof buf, "%-14s %-16s %-20s %-12s %s\n", "Group", "Total Time (s)",
                "Time Per Model (s)", "Bug Number", "Time Per Bug (s)");
  out += buf;
  for (const auto& [label, g] : {std::pair<const char*, const TimeGroup*>{"Larger Model", &larger},
                                 {"Smaller Model", &smaller}}) {
    const auto tpb = g->time_per_bug();
    const std::string per_bug = tpb ? general(*tpb) : "—";
    std::snprintf(buf, sizeof buf, "%-14s %-16s %-20s %-12zu %s\n", label, general(g->total_time).c_str(),
                  general(g->time_per_model()).c_str(), g->bugs, per_bug.c_str());
    out += buf;
  }
  return out;
}

TimeSplitReport time_split_report(const std::vector<LogRow>& rows) {
  std::vector<LogRow> sorted = rows;
  std::stable_sort(sorted.begin(), sorted.end(), [](const LogRow& a, const LogRow& b) {
    if (a.time_seconds != b.time_seconds) return a.time_seconds > b.time_seconds;
    return a.iteration < b.iteration;
  });
  TimeSplitReport rep;
  const std::size_t cut = sorted.size() / 2;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    TimeGroup& g = i < cut ? rep.larger : rep.smaller;
    ++g.models;
    g.total_time += sorted[i].time_seconds;
    if (sorted[i].bug) ++g.bugs;
  }
  return rep;
}

}  // namespace dlfuzz
