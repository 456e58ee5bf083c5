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

#include "dlfuzz/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace dlfuzz {

namespace {
constexpr std::array<std::pair<VerdictKind, std::string_view>, 4> kVerdictNames{{
    {VerdictKind::NoBug, "NoBug"},
    {VerdictKind::Crash, "Crash"},
    {VerdictKind::NanBug, "NaN"},
    {VerdictKind::InconsistencyBug, "Inconsistency"},
}};
}  // namespace

std::string_view verdict_kind_name(VerdictKind kind) {
  for (const auto& [k, n] : kVerdictNames) {
    if (k == kind) return n;
  }
  return "unknown";
}

std::optional<VerdictKind> verdict_kind_from_name(std::string_view name) {
  for (const auto& [k, n] : kVerdictNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::string Verdict::attribution() const {
  if (backends.empty()) return "unattributed";
  std::string out = backends.front();
  for (std::size_t i = 1; i < backends.size(); ++i) out += "+" + backends[i];
  return out;
}

double pairwise_inconsistency(const TensorF64& a, const TensorF64& b) {
  if (a.shape != b.shape || a.size() != b.size()) {
    throw ArgumentError("pairwise_inconsistency: shape mismatch " + a.shape.to_string() + " vs " +
                        b.shape.to_string());
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double x = a.data(i), y = b.data(i);
    if (std::isnan(x) || std::isnan(y)) {
      throw ArgumentError("pairwise_inconsistency: NaN input must go through NaN detection");
    }
    // Equal infinities differ by nothing, not by NaN.
    const double d = x == y ? 0.0 : std::abs(x - y);
    worst = std::max(worst, d);
  }
  return worst;
}

std::vector<PairInconsistency> compute_pairwise(std::span<const NamedOutcome> outcomes) {
  std::vector<PairInconsistency> pairs;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    for (std::size_t j = i + 1; j < outcomes.size(); ++j) {
      const auto& x = outcomes[i];
      const auto& y = outcomes[j];
      if (!x.outcome.ok() || !y.outcome.ok()) continue;
      PairInconsistency p;
      p.a = std::min(x.backend, y.backend);
      p.b = std::max(x.backend, y.backend);
      if (!x.outcome.output().has_nan() && !y.outcome.output().has_nan()) {
        p.value = pairwise_inconsistency(x.outcome.output(), y.outcome.output());
      }
      pairs.push_back(std::move(p));
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const auto& l, const auto& r) {
    return std::tie(l.a, l.b) < std::tie(r.a, r.b);
  });
  return pairs;
}

InconsistencyVote vote_inconsistency(std::span<const PairInconsistency> pairs, double epsilon,
                                     std::size_t backend_count) {
  std::vector<const PairInconsistency*> exceeding;
  for (const auto& p : pairs) {
    if (p.value && *p.value > epsilon) exceeding.push_back(&p);
  }
  std::sort(exceeding.begin(), exceeding.end(), [](const auto* l, const auto* r) {
    if (*l->value != *r->value) return *l->value > *r->value;
    return std::tie(l->a, l->b) < std::tie(r->a, r->b);
  });

  InconsistencyVote vote;
  if (backend_count == 2) {
    if (!exceeding.empty()) vote.verdict.kind = VerdictKind::InconsistencyBug;
    return vote;
  }
  if (exceeding.size() < 2) return vote;

  vote.verdict.kind = VerdictKind::InconsistencyBug;
  const auto* first = exceeding[0];
  const auto* second = exceeding[1];
  for (const auto* name : {&first->a, &first->b}) {
    if (*name == second->a || *name == second->b) {
      vote.verdict.backends = {*name};
      return vote;
    }
  }
  vote.flagged = true;
  return vote;
}

InconsistencyVote classify(std::span<const NamedOutcome> outcomes,
                           std::span<const PairInconsistency> pairs, double epsilon) {
  InconsistencyVote vote;
  std::vector<std::string> crashed, nan;
  for (const auto& o : outcomes) {
    if (!o.outcome.ok()) {
      crashed.push_back(o.backend);
    } else if (o.outcome.output().has_nan()) {
      nan.push_back(o.backend);
    }
  }
  if (!crashed.empty()) {
    std::sort(crashed.begin(), crashed.end());
    vote.verdict = {VerdictKind::Crash, std::move(crashed)};
    return vote;
  }
  if (nan.size() == 1 && outcomes.size() >= 2) {
    vote.verdict = {VerdictKind::NanBug, std::move(nan)};
    return vote;
  }
  return vote_inconsistency(pairs, epsilon, outcomes.size() - nan.size());
}

DifferentialRecord run_differential(const GraphModel& model, const TensorF64& input,
                                    std::span<Backend* const> backends, double epsilon,
                                    std::uint64_t param_seed, int depth) {
  if (backends.size() < 2) throw ArgumentError("differential testing needs at least two backends");
  if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be positive");
  require_valid(model);

  DifferentialRecord record;
  record.model_digest = canonical_hash(model);
  for (Backend* b : backends) {
    record.outcomes.push_back({b->name(), b->execute(model, input, param_seed)});
  }
  const bool all_build_crash =
      std::all_of(record.outcomes.begin(), record.outcomes.end(), [](const NamedOutcome& o) {
        return !o.outcome.ok() && o.outcome.crash().phase == CrashPhase::Build;
      });
  if (all_build_crash) {
    throw HarnessDegraded("every backend failed to build model " + to_hex(record.model_digest));
  }

  record.pairwise = compute_pairwise(record.outcomes);
  auto vote = classify(record.outcomes, record.pairwise, epsilon);
  record.verdict = std::move(vote.verdict);
  record.flagged = vote.flagged;

  auto& m = record.measurement;
  m.model_digest = record.model_digest;
  m.variety = variety_degree(model, depth);
  if (record.verdict.kind == VerdictKind::Crash || record.verdict.kind == VerdictKind::NanBug) {
    m.performance = input.size() > 0 ? std::abs(input.data.mean()) : 0.0;
  } else {
    double worst = 0.0;
    for (const auto& p : record.pairwise) {
      if (p.value) worst = std::max(worst, *p.value);
    }
    m.performance = worst;
  }
  if (!std::isfinite(m.performance)) m.performance = kPerformanceCap;

  double total = 0.0, longest = 0.0;
  std::size_t ok = 0;
  for (const auto& o : record.outcomes) {
    longest = std::max(longest, o.outcome.elapsed_seconds);
    if (o.outcome.ok()) {
      total += o.outcome.elapsed_seconds;
      ++ok;
    }
  }
  m.time_seconds = ok > 0 ? total / static_cast<double>(ok) : longest;
  if (!(m.time_seconds > 0.0)) m.time_seconds = 1e-9;
  return record;
}

std::string crash_fingerprint(std::string_view message) {
  std::string out;
  out.reserve(message.size());
  std::size_t i = 0;
  while (i < message.size()) {
    const char c = message[i];
    if (c == '0' && i + 1 < message.size() && (message[i + 1] == 'x' || message[i + 1] == 'X')) {
      i += 2;
      while (i < message.size() && std::isxdigit(static_cast<unsigned char>(message[i]))) ++i;
      out.push_back('#');
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      while (i < message.size() && std::isdigit(static_cast<unsigned char>(message[i]))) ++i;
      out.push_back('#');
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      while (i < message.size() && std::isspace(static_cast<unsigned char>(message[i]))) ++i;
      if (!out.empty()) out.push_back(' ');
      continue;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    ++i;
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

Digest bug_signature(const GraphModel& model, const Verdict& verdict,
                     std::span<const NamedOutcome> outcomes) {
  ByteWriter w;
  const Digest structure = canonical_hash(strip_params(model));
  for (auto b : structure) w.u8(b);
  w.str(verdict_kind_name(verdict.kind));
  w.str(verdict.attribution());
  if (verdict.kind == VerdictKind::Crash) {
    for (const auto& name : verdict.backends) {
      for (const auto& o : outcomes) {
        if (o.backend == name && !o.outcome.ok()) w.str(crash_fingerprint(o.outcome.crash().message));
      }
    }
  }
  return w.digest();
}

std::optional<BugReport> BugRegistry::dedup_and_report(const DifferentialRecord& record,
                                                       const GraphModel& model,
                                                       const Digest& input_digest,
                                                       std::int64_t iteration) {
  if (!record.verdict.is_bug()) return std::nullopt;
  const Digest signature = bug_signature(model, record.verdict, record.outcomes);
  if (!seen_.insert(signature).second) return std::nullopt;
  ++counts_[record.verdict.kind];

  BugReport report{record.verdict.kind, record.verdict.attribution(), model, input_digest,
                   nlohmann::json::object(), iteration, signature};
  switch (record.verdict.kind) {
    case VerdictKind::Crash: {
      nlohmann::json crashes = nlohmann::json::array();
      for (const auto& o : record.outcomes) {
        if (o.outcome.ok()) continue;
        crashes.push_back({{"backend", o.backend},
                           {"message", o.outcome.crash().message},
                           {"phase", o.outcome.crash().phase == CrashPhase::Build ? "build" : "execute"}});
      }
      report.evidence["crashes"] = std::move(crashes);
      break;
    }
    case VerdictKind::NanBug:
      report.evidence["nan_backend"] = record.verdict.backends.front();
      break;
    default:
      break;
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : record.pairwise) {
    pairs.push_back({{"a", p.a}, {"b", p.b},
                     {"value", !p.value              ? nlohmann::json("NaN")
                               : std::isfinite(*p.value) ? nlohmann::json(*p.value)
                                                         : nlohmann::json("Inf")}});
  }
  report.evidence["pairwise"] = std::move(pairs);
  if (record.flagged) report.evidence["flagged"] = true;
  return report;
}

std::size_t BugRegistry::count(VerdictKind kind) const {
  auto it = counts_.find(kind);
  return it == counts_.end() ? 0 : it->second;
}

nlohmann::json verdict_to_json(const Verdict& v) {
  return {{"kind", std::string(verdict_kind_name(v.kind))}, {"backends", v.backends}};
}

Verdict verdict_from_json(const nlohmann::json& j) {
  const auto kind = verdict_kind_from_name(j.at("kind").get<std::string>());
  if (!kind) throw ParseError("verdict.kind", "unknown verdict kind");
  return {*kind, j.at("backends").get<std::vector<std::string>>()};
}

}  // namespace dlfuzz
