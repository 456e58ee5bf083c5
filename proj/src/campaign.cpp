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

#include "dlfuzz/campaign.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <set>

#include "dlfuzz/adapter.hpp"
#include "dlfuzz/variety.hpp"

namespace dlfuzz {

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(key, e.what());
  }
}

TensorShape shape_from_json(const nlohmann::json& j, const char* field) {
  if (!j.is_array() || j.size() != 4) throw ParseError(field, "expected [b,c,h,w]");
  std::array<std::uint32_t, 4> d{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!j[i].is_number_unsigned()) throw ParseError(field, "dimensions must be positive integers");
    d[i] = j[i].get<std::uint32_t>();
  }
  return {d[0], d[1], d[2], d[3]};
}

Digest digest_from_hex(const std::string& hex) {
  Digest d{};
  if (hex.size() != 2 * d.size()) return d;
  for (std::size_t i = 0; i < d.size(); ++i) {
    d[i] = static_cast<std::uint8_t>(std::stoul(hex.substr(2 * i, 2), nullptr, 16));
  }
  return d;
}

}  // namespace

void CampaignConfig::check() const {
  if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be > 0");
  if (depth < 1) throw ArgumentError("depth must be >= 1");
  if (backends.size() < 2) throw ArgumentError("a campaign needs at least two backends");
  std::set<std::string> names;
  for (const auto& b : backends) {
    const std::string name = b.value("name", std::string());
    if (name.empty()) throw ArgumentError("every backend needs a name");
    if (!names.insert(name).second) throw ArgumentError("duplicate backend name '" + name + "'");
  }
  if (input_mode == InputMode::Random && !shape.is_valid()) {
    throw ArgumentError("tensor shape dimensions must be >= 1");
  }
  if (input_mode == InputMode::File && dataset_path.empty()) {
    throw ArgumentError("file input mode needs a dataset path");
  }
  mutation.check();
}

std::vector<nlohmann::json> CampaignConfig::default_backends() {
  return {
      {{"name", "reference"}, {"kind", "native-reference"}},
      {{"name", "alternate"}, {"kind", "native-alternate"}},
      {{"name", "mirror"}, {"kind", "fault-injection"}, {"mode", "none"}, {"base", "native-reference"}},
  };
}

CampaignConfig campaign_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ParseError("$", "campaign config must be an object");
  CampaignConfig c;
  c.backends = CampaignConfig::default_backends();
  if (auto it = j.find("input"); it != j.end()) {
    const std::string mode = get_or<std::string>(*it, "mode", "random");
    if (mode == "random") {
      c.input_mode = InputMode::Random;
    } else if (mode == "file") {
      c.input_mode = InputMode::File;
    } else {
      throw ParseError("input.mode", "expected \"random\" or \"file\"");
    }
    if (auto s = it->find("shape"); s != it->end()) c.shape = shape_from_json(*s, "input.shape");
    c.dataset_path = get_or<std::string>(*it, "path", "");
    c.resample_input = get_or<bool>(*it, "resample", true);
  }
  c.iterations = get_or<std::uint64_t>(j, "iterations", c.iterations);
  if (auto it = j.find("duration_seconds"); it != j.end() && !it->is_null()) {
    c.duration_seconds = it->get<double>();
  }
  c.epsilon = get_or<double>(j, "epsilon", c.epsilon);
  c.depth = get_or<int>(j, "depth", c.depth);
  if (auto it = j.find("mutation"); it != j.end()) {
    auto& m = c.mutation;
    m.operator_count = get_or<int>(*it, "operator_count", m.operator_count);
    m.pool_size = get_or<std::size_t>(*it, "pool_size", m.pool_size);
    m.tournament_k = get_or<std::size_t>(*it, "tournament_k", m.tournament_k);
    m.max_retries = get_or<int>(*it, "max_retries", m.max_retries);
    m.growth_probability = get_or<double>(*it, "growth_probability", m.growth_probability);
  }
  if (auto it = j.find("backends"); it != j.end()) {
    if (!it->is_array()) throw ParseError("backends", "expected an array");
    c.backends.assign(it->begin(), it->end());
  }
  c.output_dir = get_or<std::string>(j, "output_dir", "");
  c.rng_seed = get_or<std::uint64_t>(j, "rng_seed", 0);
  c.mutation.rng_seed = c.rng_seed;
  c.guidance = get_or<bool>(j, "guidance", true);
  const std::string fusion = get_or<std::string>(j, "fusion_input", "normalized");
  if (fusion == "normalized") {
    c.fitness_input = FitnessInput::Normalized;
  } else if (fusion == "raw") {
    c.fitness_input = FitnessInput::Raw;
  } else {
    throw ParseError("fusion_input", "expected \"normalized\" or \"raw\"");
  }
  const std::string timing = get_or<std::string>(j, "timing", "modeled");
  if (timing == "modeled") {
    c.timing = TimingMode::Modeled;
  } else if (timing == "wall") {
    c.timing = TimingMode::Wall;
  } else {
    throw ParseError("timing", "expected \"modeled\" or \"wall\"");
  }
  return c;
}

CampaignConfig load_campaign_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("$", e.what());
  }
  CampaignConfig c = campaign_config_from_json(j);
  if (c.input_mode == InputMode::File && c.dataset_path.is_relative()) {
    c.dataset_path = path.parent_path() / c.dataset_path;
  }
  return c;
}

nlohmann::ordered_json log_entry_to_json(const CampaignLogEntry& e) {
  nlohmann::ordered_json j;
  j["iteration"] = e.iteration;
  j["seed_digest"] = to_hex(e.seed_digest);
  j["chosen_op"] = std::string(op_name(e.chosen_op));
  j["model_digest"] = to_hex(e.model_digest);
  if (e.measurement) {
    j["measurement"] = {{"performance", e.measurement->performance},
                        {"variety", e.measurement->variety},
                        {"time_seconds", e.measurement->time_seconds}};
  } else {
    j["measurement"] = nullptr;
  }
  j["verdict"] = e.measurement ? std::string(verdict_kind_name(e.verdict.kind)) : "Degraded";
  j["attribution"] = e.verdict.is_bug() ? e.verdict.attribution() : std::string();
  j["delta_fitness"] = e.delta_fitness;
  j["weights_hash"] = to_hex(e.weights_digest).substr(0, 16);
  j["bug_file"] = e.bug_file ? nlohmann::ordered_json(*e.bug_file) : nlohmann::ordered_json(nullptr);
  return j;
}

nlohmann::ordered_json CampaignSummary::to_json() const {
  nlohmann::ordered_json j;
  j["iterations"] = iterations;
  j["models_executed"] = models_executed;
  j["mutation_failures"] = mutation_failures;
  j["degraded"] = degraded;
  j["mean_model_time"] = mean_model_time;
  j["mean_variety"] = mean_variety;
  j["bugs"] = {{"Crash", crash_bugs}, {"NaN", nan_bugs}, {"Inconsistency", inconsistency_bugs}};
  j["dropped_backends"] = dropped_backends;
  return j;
}

TensorF64 generate_input_tensor(const CampaignConfig& config, Rng& rng) {
  if (config.input_mode == InputMode::File) return read_tensor_file(config.dataset_path).tensor;
  return random_tensor(config.shape, rng);
}

nlohmann::ordered_json bug_file_to_json(const BugFile& bug) {
  nlohmann::ordered_json j;
  j["iteration"] = bug.report.first_seen;
  j["kind"] = std::string(verdict_kind_name(bug.report.kind));
  j["attributed_backend"] = bug.report.attributed_backend;
  j["signature"] = to_hex(bug.report.signature);
  j["verdict"] = verdict_to_json(bug.verdict);
  j["model"] = model_to_json(bug.report.model);
  j["input_digest"] = to_hex(bug.report.input_digest);
  j["input"] = protocol::tensor_to_json(bug.input);
  j["param_seed"] = bug.param_seed;
  j["epsilon"] = bug.epsilon;
  j["depth"] = bug.depth;
  j["backends"] = bug.backends;
  j["evidence"] = bug.report.evidence;
  return j;
}

BugFile bug_file_from_json(const nlohmann::json& j) {
  try {
    const Verdict verdict = verdict_from_json(j.at("verdict"));
    const TensorF64 input = protocol::tensor_from_json(j.at("input"));
    BugReport report{verdict.kind,
                     j.at("attributed_backend").get<std::string>(),
                     model_from_json(j.at("model")),
                     tensor_digest(input),
                     j.value("evidence", nlohmann::json::object()),
                     j.at("iteration").get<std::int64_t>(),
                     digest_from_hex(j.value("signature", std::string()))};
    return BugFile{std::move(report),
                   verdict,
                   input,
                   j.at("param_seed").get<std::uint64_t>(),
                   j.at("epsilon").get<double>(),
                   j.value("depth", kDefaultVarietyDepth),
                   j.at("backends").get<std::vector<nlohmann::json>>()};
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bug", e.what());
  }
}

ReplayResult replay_bug(const BugFile& bug) {
  std::vector<std::unique_ptr<Backend>> owned;
  std::vector<Backend*> roster;
  for (const auto& spec : bug.backends) {
    owned.push_back(make_backend(spec));
    roster.push_back(owned.back().get());
  }
  const auto record =
      run_differential(bug.report.model, bug.input, roster, bug.epsilon, bug.param_seed, bug.depth);
  return {bug.verdict, record.verdict};
}

ReplayResult replay_bug_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open bug file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("$", e.what());
  }
  return replay_bug(bug_file_from_json(j));
}

namespace {

class Campaign {
 public:
  Campaign(const CampaignConfig& config, std::ostream* diagnostics)
      : config_(config), diag_(diagnostics), rng_(config.rng_seed) {}

  CampaignResult run() {
    config_.check();
    start_ = std::chrono::steady_clock::now();
    for (const auto& spec : config_.backends) backends_.push_back(make_backend(spec, config_.timing));

    if (config_.input_mode == InputMode::File) {
      file_input_ = read_tensor_file(config_.dataset_path).tensor;
      shape_ = file_input_->shape;
    } else {
      shape_ = config_.shape;
      if (!config_.resample_input) file_input_ = random_tensor(shape_, rng_);
    }
    open_outputs();

    weights_ = OperatorWeightTable::uniform(1.0);
    pool_.emplace(build_seed_pool(config_.mutation, shape_, weights_, rng_));
    evaluate_seeds();

    std::uint64_t consecutive_failures = 0;
    while (iteration_ < config_.iterations && !out_of_time()) {
      const auto winners = select_seeds();
      bool progressed = false;
      for (std::size_t idx : winners) {
        if (iteration_ >= config_.iterations) break;
        const SeedEntry seed = pool_->at(idx);
        if (step(seed)) {
          progressed = true;
        }
      }
      consecutive_failures = progressed ? 0 : consecutive_failures + 1;
      if (consecutive_failures > 1000) {
        warn("giving up: 1000 consecutive selections produced no valid mutant");
        break;
      }
    }
    return finish();
  }

 private:
  bool out_of_time() const {
    if (!config_.duration_seconds) return false;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count() >=
           *config_.duration_seconds;
  }

  void warn(const std::string& msg) {
    if (diag_) *diag_ << "warning: " << msg << "\n";
  }

  void open_outputs() {
    if (config_.output_dir.empty()) return;
    std::filesystem::create_directories(config_.output_dir / "bugs");
    log_.open(config_.output_dir / "campaign.jsonl", std::ios::trunc);
    if (!log_) throw Error("cannot write campaign log in " + config_.output_dir.string());
  }

  TensorF64 next_input() {
    if (file_input_) return *file_input_;
    return random_tensor(shape_, rng_);
  }

  std::vector<Backend*> roster() const {
    std::vector<Backend*> r;
    for (const auto& b : backends_) r.push_back(b.get());
    return r;
  }

  std::vector<nlohmann::json> roster_specs() const {
    std::vector<nlohmann::json> specs;
    for (const auto& b : backends_) specs.push_back(b->spec());
    return specs;
  }

  void check_backends() {
    for (auto it = backends_.begin(); it != backends_.end();) {
      if ((*it)->alive()) {
        ++it;
        continue;
      }
      if (backends_.size() <= 2) {
        throw BackendUnavailable("backend '" + (*it)->name() +
                                 "' died and fewer than two backends would remain");
      }
      warn("backend '" + (*it)->name() + "' lost its connection; dropping it from the roster");
      summary_.dropped_backends.push_back((*it)->name());
      it = backends_.erase(it);
    }
  }

  void refresh_pool_fitness() {
    const Eigen::VectorXd fit = fitness_all(judge_, config_.fitness_input);
    for (std::size_t i = 0; i < pool_->size(); ++i) {
      auto& e = pool_->at(i);
      if (e.judge_row) e.fitness = fit(static_cast<Eigen::Index>(*e.judge_row));
    }
  }

  void evaluate_seeds() {
    const auto r = roster();
    for (std::size_t i = 0; i < pool_->size(); ++i) {
      auto& entry = pool_->at(i);
      const TensorF64 input = next_input();
      const std::uint64_t param_seed = rng_.next();
      try {
        const auto record = run_differential(entry.model, input, r, config_.epsilon, param_seed,
                                             config_.depth);
        judge_.append(record.measurement);
        entry.judge_row = judge_.size() - 1;
      } catch (const HarnessDegraded& e) {
        warn(e.what());
      }
      check_backends();
    }
    refresh_pool_fitness();
  }

  std::vector<std::size_t> select_seeds() {
    const std::size_t k = config_.mutation.tournament_k;
    if (config_.guidance) return tournament_select_indices(*pool_, k, rng_);
    std::vector<std::size_t> idx(pool_->size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    for (std::size_t s = 0; s < k; ++s) std::swap(idx[s], idx[s + rng_.below(idx.size() - s)]);
    idx.resize(k);
    return idx;
  }

  bool step(const SeedEntry& seed) {
    MutationResult mutant{seed.model, OpTag::None, {0, 0}, false};
    try {
      mutant = mutate(seed.model, weights_, rng_, config_.mutation.max_retries,
                      config_.mutation.growth_probability);
    } catch (const MutationFailed& e) {
      ++summary_.mutation_failures;
      warn(e.what());
      return false;
    }
    const TensorF64 input = next_input();
    const std::uint64_t param_seed = rng_.next();
    const std::uint64_t iteration = ++iteration_;

    CampaignLogEntry entry;
    entry.iteration = iteration;
    entry.seed_digest = seed.digest;
    entry.chosen_op = mutant.chosen_op;
    entry.model_digest = canonical_hash(mutant.model);
    entry.model = mutant.model;

    std::optional<DifferentialRecord> record;
    try {
      record = run_differential(mutant.model, input, roster(), config_.epsilon, param_seed,
                                config_.depth);
    } catch (const HarnessDegraded& e) {
      ++summary_.degraded;
      warn(e.what());
    }

    if (record) {
      ++summary_.models_executed;
      time_sum_ += record->measurement.time_seconds;
      variety_sum_ += static_cast<double>(record->measurement.variety);
      entry.measurement = record->measurement;
      entry.verdict = record->verdict;

      judge_.append(record->measurement);
      const std::size_t new_row = judge_.size() - 1;
      const Eigen::VectorXd fit = fitness_all(judge_, config_.fitness_input);
      const double fitness_new = fit(static_cast<Eigen::Index>(new_row));
      const double fitness_seed = seed.judge_row ? fit(static_cast<Eigen::Index>(*seed.judge_row)) : 0.0;
      entry.delta_fitness = fitness_new - fitness_seed;

      if (config_.guidance) {
        weights_ = update_operator_weights(weights_, mutant.chosen_op, entry.delta_fitness);
        const Digest digest = entry.model_digest;
        if (entry.delta_fitness > 0.0 && !pool_->contains(digest)) {
          if (pool_->full()) pool_->evict_min_fitness();
          pool_->insert(mutant.model, fitness_new);
          for (std::size_t i = pool_->size(); i-- > 0;) {
            if (pool_->at(i).digest == digest) {
              pool_->at(i).judge_row = new_row;
              break;
            }
          }
        }
        refresh_pool_fitness();
      }

      if (record->verdict.is_bug()) {
        auto report = registry_.dedup_and_report(*record, mutant.model, tensor_digest(input),
                                                 static_cast<std::int64_t>(iteration));
        if (report) {
          BugFile bug{*report, record->verdict, input, param_seed, config_.epsilon, config_.depth,
                      roster_specs()};
          entry.bug_file = persist_bug(bug, *record);
          result_.bugs.push_back(std::move(*report));
        }
      }
    }
    entry.weights_digest = weights_.digest();
    write_entry(entry);
    result_.log.push_back(std::move(entry));
    check_backends();
    return true;
  }

  std::optional<std::string> persist_bug(const BugFile& bug, const DifferentialRecord& record) {
    if (config_.output_dir.empty()) return std::nullopt;
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "%06lld", static_cast<long long>(bug.report.first_seen));
    const std::string stem = std::string(prefix) + "-" +
                             std::string(verdict_kind_name(bug.report.kind)) + "-" +
                             bug.report.attributed_backend;
    const std::string name = "bugs/" + stem + ".json";
    {
      std::ofstream out(config_.output_dir / name, std::ios::trunc);
      out << bug_file_to_json(bug).dump(2) << "\n";
    }
    if (bug.report.kind == VerdictKind::Crash) {
      std::ofstream out(config_.output_dir / ("bugs/" + stem + ".log"), std::ios::trunc);
      out << "iteration " << bug.report.first_seen << " model " << to_hex(record.model_digest) << "\n";
      for (const auto& o : record.outcomes) {
        if (o.outcome.ok()) continue;
        out << "[" << o.backend << "] "
            << (o.outcome.crash().phase == CrashPhase::Build ? "build" : "execute") << ": "
            << o.outcome.crash().message << "\n";
      }
    }
    return name;
  }

  void write_entry(const CampaignLogEntry& entry) {
    if (!log_.is_open()) return;
    log_ << log_entry_to_json(entry).dump() << "\n";
    log_.flush();
  }

  CampaignResult finish() {
    summary_.iterations = iteration_;
    if (summary_.models_executed > 0) {
      summary_.mean_model_time = time_sum_ / static_cast<double>(summary_.models_executed);
      summary_.mean_variety = variety_sum_ / static_cast<double>(summary_.models_executed);
    }
    summary_.crash_bugs = registry_.count(VerdictKind::Crash);
    summary_.nan_bugs = registry_.count(VerdictKind::NanBug);
    summary_.inconsistency_bugs = registry_.count(VerdictKind::InconsistencyBug);
    result_.summary = summary_;
    result_.final_weights = weights_;
    if (!config_.output_dir.empty()) {
      std::ofstream out(config_.output_dir / "summary.json", std::ios::trunc);
      out << summary_.to_json().dump(2) << "\n";
    }
    return std::move(result_);
  }

  const CampaignConfig& config_;
  std::ostream* diag_;
  Rng rng_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::unique_ptr<Backend>> backends_;
  std::optional<TensorF64> file_input_;
  TensorShape shape_;
  OperatorWeightTable weights_;
  std::optional<SeedPool> pool_;
  JudgeMatrix judge_;
  BugRegistry registry_;
  std::ofstream log_;
  std::uint64_t iteration_ = 0;
  double time_sum_ = 0.0;
  double variety_sum_ = 0.0;
  CampaignSummary summary_;
  CampaignResult result_;
};

}  // namespace

CampaignResult run_campaign(const CampaignConfig& config, std::ostream* diagnostics) {
  return Campaign(config, diagnostics).run();
}

}  // namespace dlfuzz
