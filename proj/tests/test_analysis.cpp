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

#include <doctest.h>

#include <sstream>

#include "dlfuzz/analysis.hpp"
#include "dlfuzz/error.hpp"

using namespace dlfuzz;

namespace {

std::string line(int it, double perf, int variety, double time, const char* verdict = "NoBug") {
  std::ostringstream s;
  s << R"({"iteration":)" << it << R"(,"measurement":{"performance":)" << perf << R"(,"variety":)"
    << variety << R"(,"time_seconds":)" << time << R"(},"verdict":")" << verdict << "\"}\n";
  return s.str();
}

std::vector<LogRow> rows(const std::string& text) {
  std::istringstream in(text);
  return parse_log(in);
}

}  // namespace

TEST_CASE("log parsing skips degraded lines") {
  auto r = rows(line(1, 0.5, 3, 1.0, "NaN") + R"({"iteration":2,"measurement":null,"verdict":"Degraded"})" "\n" +
                line(3, 0.1, 4, 2.0));
  REQUIRE(r.size() == 2);
  CHECK(r[0].bug);
  CHECK_FALSE(r[1].bug);
  CHECK(r[1].iteration == 3);
  CHECK_THROWS_AS(rows("{not json}\n"), ParseError);
}

TEST_CASE("correlations") {
  auto perfect = analyze_correlations(rows(line(1, 1, 1, 1) + line(2, 2, 2, 2) + line(3, 3, 3, 3)));
  CHECK(perfect.n == 3);
  REQUIRE(perfect.variety_performance);
  CHECK(*perfect.variety_performance == doctest::Approx(1.0).epsilon(1e-12));

  auto flat = analyze_correlations(rows(line(1, 5, 1, 1) + line(2, 5, 2, 4) + line(3, 5, 3, 2)));
  CHECK_FALSE(flat.variety_performance);
  REQUIRE(flat.variety_time);
  CHECK(std::abs(*flat.variety_time - 0.3273268353539886) < 1e-9);

  auto pinned = analyze_correlations(rows(line(1, 1, 1, 1) + line(2, 2, 2, 1) + line(3, 2, 3, 1)));
  CHECK(std::abs(*pinned.variety_performance - 0.8660254037844387) < 1e-9);
  CHECK_FALSE(pinned.variety_time);
  CHECK(pinned.table() ==
        "Variety & Performance    Variety & Time           n\n"
        "0.8660                   NaN                      3\n");

  CHECK_THROWS_AS(analyze_correlations(rows(line(1, 1, 1, 1))), InsufficientData);
}

TEST_CASE("time split") {
  auto r = time_split_report(rows(line(1, 0, 1, 1, "NaN") + line(2, 0, 1, 2) + line(3, 0, 1, 3) +
                                  line(4, 0, 1, 4, "Crash")));
  CHECK(r.larger.models == 2);
  CHECK(r.larger.total_time == 7.0);
  CHECK(r.larger.bugs == 1);
  CHECK(r.smaller.total_time == 3.0);
  CHECK(r.smaller.bugs == 1);
  CHECK(*r.larger.time_per_bug() == 7.0);
  CHECK(r.smaller.time_per_model() == 1.5);
  CHECK(r.table() ==
        "Group          Total Time (s)   Time Per Model (s)   Bug Number   Time Per Bug (s)\n"
        "Larger Model   7                3.5                  1            7\n"
        "Smaller Model  3                1.5                  1            3\n");

  auto ties = time_split_report(rows(line(1, 0, 1, 1, "NaN") + line(2, 0, 1, 1) + line(3, 0, 1, 1) +
                                     line(4, 0, 1, 1)));
  CHECK(ties.larger.bugs == 1);
  CHECK(ties.smaller.bugs == 0);
  CHECK_FALSE(ties.smaller.time_per_bug());
  CHECK(ties.table().find("—") != std::string::npos);

  auto odd = time_split_report(rows(line(1, 0, 1, 3) + line(2, 0, 1, 2) + line(3, 0, 1, 1)));
  CHECK(odd.larger.models == 1);
  CHECK(odd.smaller.models == 2);

  auto empty = time_split_report({});
  CHECK(empty.larger.models == 0);
}
