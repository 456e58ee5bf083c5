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

#include "dlfuzz/error.hpp"
#include "dlfuzz/harness.hpp"
#include "oracles.hpp"

using namespace dlfuzz;

namespace {

const TensorShape kShape{1, 1, 1, 3};

TensorF64 vec(std::initializer_list<double> v) {
  TensorF64 t({1, 1, 1, static_cast<std::uint32_t>(v.size())});
  Eigen::Index i = 0;
  for (double x : v) t.data(i++) = x;
  return t;
}

// Returns a fixed outcome regardless of the model.
class Scripted : public Backend {
 public:
  Scripted(std::string name, ExecutionOutcome out) : Backend({std::move(name), BackendKind::NativeReference}), out_(std::move(out)) {}
  ExecutionOutcome execute(const GraphModel&, const TensorF64&, std::uint64_t) override { return out_; }
  nlohmann::json spec() const override { return {{"name", name()}, {"kind", "scripted"}}; }

 private:
  ExecutionOutcome out_;
};

ExecutionOutcome ok(TensorF64 t, double s = 1e-3) { return {std::move(t), s}; }
ExecutionOutcome crash(std::string msg, CrashPhase phase = CrashPhase::Execute) {
  return {Crash{std::move(msg), phase}, 2e-3};
}

GraphModel relu_model() {
  return GraphModel(2, kShape, {{{0, 1}, Operator::with_defaults(OpTag::ReLU)}});
}

std::vector<PairInconsistency> pairs(double ab, double ac, double bc) {
  return {{"A", "B", ab}, {"A", "C", ac}, {"B", "C", bc}};
}

}  // namespace

TEST_CASE("pairwise inconsistency") {
  CHECK(pairwise_inconsistency(vec({1, 2}), vec({1, 2})) == 0.0);
  CHECK(pairwise_inconsistency(vec({1, 2}), vec({1, 2.5})) == 0.5);
  CHECK(std::abs(pairwise_inconsistency(vec({0, -1, 3}), vec({0.1, -1.3, 3})) - 0.3) < 1e-12);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(pairwise_inconsistency(vec({inf, 1}), vec({inf, 1})) == 0.0);
  CHECK(pairwise_inconsistency(vec({inf, 1}), vec({-inf, 1})) == inf);
  CHECK_THROWS_AS(pairwise_inconsistency(vec({1, 2}), vec({1, 2, 3})), ArgumentError);
  CHECK_THROWS_AS(pairwise_inconsistency(vec({std::nan(""), 2}), vec({1, 2})), ArgumentError);
}

TEST_CASE("inconsistency vote") {
  auto v = vote_inconsistency(pairs(0.2, 0.18, 0.01), 0.15, 3);
  CHECK(v.verdict.kind == VerdictKind::InconsistencyBug);
  CHECK(v.verdict.backends == std::vector<std::string>{"A"});
  v = vote_inconsistency(pairs(0.2, 0.18, 0.16), 0.15, 3);
  CHECK(v.verdict.backends == std::vector<std::string>{"A"});
  v = vote_inconsistency(pairs(0.2, 0.01, 0.01), 0.15, 3);
  CHECK(v.verdict.kind == VerdictKind::NoBug);
  v = vote_inconsistency(pairs(0.1499, 0.1499, 0.0), 0.15, 3);
  CHECK(v.verdict.kind == VerdictKind::NoBug);
  v = vote_inconsistency(pairs(0.1501, 0.1501, 0.0), 0.15, 3);
  CHECK(v.verdict.backends == std::vector<std::string>{"A"});
  v = vote_inconsistency(pairs(0.15, 0.15, 0.0), 0.15, 3);
  CHECK(v.verdict.kind == VerdictKind::NoBug);

  std::vector<PairInconsistency> four{{"A", "B", 0.9}, {"C", "D", 0.8}, {"A", "C", 0.01},
                                      {"A", "D", 0.01}, {"B", "C", 0.01}, {"B", "D", 0.01}};
  v = vote_inconsistency(four, 0.15, 4);
  CHECK(v.verdict.kind == VerdictKind::InconsistencyBug);
  CHECK_FALSE(v.verdict.attributed());
  CHECK(v.flagged);

  std::vector<PairInconsistency> two{{"A", "B", 0.5}};
  v = vote_inconsistency(two, 0.15, 2);
  CHECK(v.verdict.kind == VerdictKind::InconsistencyBug);
  CHECK(v.verdict.attribution() == "unattributed");
}

TEST_CASE("verdicts from run_differential") {
  auto m = relu_model();
  auto x = vec({0.5, -0.5, 0.25});
  SUBCASE("single NaN backend") {
    Scripted a("ref", ok(vec({1, 2, 3}))), b("alt", ok(vec({1, 2, 3}))),
        c("fault", ok(vec({std::nan(""), 2, 3})));
    std::vector<Backend*> r{&a, &b, &c};
    auto rec = run_differential(m, x, r, 0.15, 1);
    CHECK(rec.verdict.kind == VerdictKind::NanBug);
    CHECK(rec.verdict.backends == std::vector<std::string>{"fault"});
    CHECK(rec.measurement.performance == doctest::Approx(std::abs((0.5 - 0.5 + 0.25) / 3)));
  }
  SUBCASE("crash beats everything") {
    Scripted a("ref", ok(vec({1, 2, 3}))), b("alt", crash("boom")),
        c("fault", ok(vec({std::nan(""), 2, 3})));
    std::vector<Backend*> r{&a, &b, &c};
    auto rec = run_differential(m, x, r, 0.15, 1);
    CHECK(rec.verdict.kind == VerdictKind::Crash);
    CHECK(rec.verdict.backends == std::vector<std::string>{"alt"});
    CHECK(rec.measurement.time_seconds == doctest::Approx(1e-3));
  }
  SUBCASE("two NaN backends fall through to the vote") {
    Scripted a("ref", ok(vec({1, 2, 3}))), b("alt", ok(vec({std::nan(""), 2, 3}))),
        c("fault", ok(vec({std::nan(""), 2, 3})));
    std::vector<Backend*> r{&a, &b, &c};
    auto rec = run_differential(m, x, r, 0.15, 1);
    CHECK(rec.verdict.kind == VerdictKind::NoBug);
  }
  SUBCASE("inconsistency is attributed and measured") {
    Scripted a("ref", ok(vec({1, 2, 3}))), b("alt", ok(vec({1, 2, 3.01}))),
        c("fault", ok(vec({1, 2, 4})));
    std::vector<Backend*> r{&a, &b, &c};
    auto rec = run_differential(m, x, r, 0.15, 1);
    CHECK(rec.verdict.kind == VerdictKind::InconsistencyBug);
    CHECK(rec.verdict.backends == std::vector<std::string>{"fault"});
    CHECK(rec.measurement.performance == doctest::Approx(1.0));
    CHECK(rec.measurement.variety == 0);  // one edge has no 2-edge motif
    CHECK(rec.pairwise.size() == 3);
  }
  SUBCASE("all build crashes degrade the harness") {
    Scripted a("ref", crash("no", CrashPhase::Build)), b("alt", crash("no", CrashPhase::Build));
    std::vector<Backend*> r{&a, &b};
    CHECK_THROWS_AS(run_differential(m, x, r, 0.15, 1), HarnessDegraded);
  }
  SUBCASE("all crashed uses the longest time") {
    Scripted a("ref", crash("x")), b("alt", crash("y"));
    std::vector<Backend*> r{&a, &b};
    auto rec = run_differential(m, x, r, 0.15, 1);
    CHECK(rec.verdict.backends == std::vector<std::string>{"alt", "ref"});
    CHECK(rec.measurement.time_seconds == doctest::Approx(2e-3));
  }
  SUBCASE("argument checks") {
    Scripted a("ref", ok(vec({1, 2, 3})));
    std::vector<Backend*> one{&a};
    CHECK_THROWS_AS(run_differential(m, x, one, 0.15, 1), ArgumentError);
  }
}

TEST_CASE("native backends agree on the ReLU model") {
  NativeBackend ref("ref", BackendKind::NativeReference), alt("alt", BackendKind::NativeAlternate);
  std::vector<Backend*> r{&ref, &alt};
  auto rec = run_differential(relu_model(), vec({0.5, -0.5, 0.25}), r, 0.15, 1);
  CHECK(rec.verdict.kind == VerdictKind::NoBug);
  CHECK(rec.measurement.performance == 0.0);
}

TEST_CASE("bug registry deduplicates") {
  auto x = vec({1, 2, 3});
  Operator k1 = Operator::with_defaults(OpTag::Conv2D), k3 = k1;
  k3.params.kernel = 3;
  GraphModel m1(2, kShape, {{{0, 1}, k1}}), m3(2, kShape, {{{0, 1}, k3}});
  auto record = [&](const GraphModel& m, const std::string& culprit) {
    DifferentialRecord r;
    r.model_digest = canonical_hash(m);
    r.verdict = {VerdictKind::NanBug, {culprit}};
    r.outcomes = {{"ref", ok(vec({1, 2, 3}))}, {culprit, ok(vec({std::nan(""), 2, 3}))}};
    r.pairwise = compute_pairwise(r.outcomes);
    return r;
  };
  BugRegistry reg;
  auto first = reg.dedup_and_report(record(m1, "A"), m1, tensor_digest(x), 1);
  REQUIRE(first);
  CHECK(first->attributed_backend == "A");
  CHECK(first->first_seen == 1);
  CHECK_FALSE(reg.dedup_and_report(record(m1, "A"), m1, tensor_digest(x), 2));
  CHECK_FALSE(reg.dedup_and_report(record(m3, "A"), m3, tensor_digest(x), 3));
  CHECK(reg.dedup_and_report(record(m1, "B"), m1, tensor_digest(x), 4));
  CHECK(reg.size() == 2);
  CHECK(reg.count(VerdictKind::NanBug) == 2);
  DifferentialRecord clean;
  CHECK_FALSE(reg.dedup_and_report(clean, m1, tensor_digest(x), 5));
}

TEST_CASE("crash fingerprints ignore volatile detail") {
  CHECK(crash_fingerprint("segfault at 0x7ffd1234 in kernel 17") ==
        crash_fingerprint("segfault at 0x55aa9900 in kernel 3"));
  CHECK(crash_fingerprint("out of memory") != crash_fingerprint("timeout"));
}

TEST_CASE("verdict json round trip") {
  for (const Verdict& v : {Verdict{}, Verdict{VerdictKind::Crash, {"a", "b"}},
                           Verdict{VerdictKind::NanBug, {"f"}}, Verdict{VerdictKind::InconsistencyBug, {}}}) {
    CHECK(verdict_from_json(verdict_to_json(v)) == v);
  }
}
