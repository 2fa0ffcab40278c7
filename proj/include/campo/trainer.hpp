/* Copyright 2026 The campo-lab Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef CAMPO_TRAINER_HPP_
#define CAMPO_TRAINER_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "campo/objectives.hpp"
#include "campo/policy.hpp"
#include "campo/random.hpp"
#include "campo/repetition.hpp"

namespace campo {

// Token layout shared by every toy task: digits 0-9, then the operators, a
// line break and eos.
namespace toy {
inline constexpr TokenId kPlus = 10;
inline constexpr TokenId kTimes = 11;
inline constexpr TokenId kEquals = 12;
inline constexpr TokenId kNewline = 13;
inline constexpr TokenId kEos = 14;
inline constexpr int kVocabSize = 15;

inline Vocab vocab() { return Vocab{kVocabSize, kEos}; }
inline bool is_digit(TokenId t) { return t >= 0 && t <= 9; }

// Text of a token sequence; stops at eos.
std::string decode(std::span<const TokenId> tokens);
std::vector<TokenId> encode(const std::string& text);
}  // namespace toy

enum class TaskFamily { modular_add, modular_mul, digit_sum };

struct TaskSpec {
  TaskFamily family = TaskFamily::modular_add;
  int modulus = 10;
  int operand_max = 9;  // operands drawn uniformly from [0, operand_max]
  int digits = 3;       // digit_sum: number of digits in the query

  void validate() const;
};

struct Task {
  std::vector<TokenId> query;
  std::string gold;
};

Task gen_task(const TaskSpec& spec, Rng& rng);

struct StagePlan {
  int max_response_len = 24;
  ClipSpec clip_low = ClipSpec::point(0.2);
  ClipSpec clip_high = ClipSpec::point(0.2);
  int max_steps = 1000;
  int saturation_window = 0;  // 0 disables the saturation test
  double saturation_threshold = 0.01;
};

// Starting point of the toy policy. `format_strength` biases the table toward
// "<digit> eos" right after '=' (a policy that knows the answer format but
// not the arithmetic); `loop_boost` adds a "<digit> \n <digit> \n ..."
// self-repeating tendency.
struct PolicyInit {
  int order = 4;
  Index buckets = 65536;
  double format_strength = 5.0;
  double loop_boost = 0.0;
};

struct TrainConfig {
  std::vector<StagePlan> stages;
  int group_size = 16;  // G
  int batch_size = 32;  // N
  double learning_rate = 0.05;
  int inner_iterations = 1;  // mu
  double temperature = 1.0;
  std::uint64_t seed = 0;
  TaskSpec task;
  PolicyInit init;
  bool repetition_penalty = true;
  LoopOptions loop;
  int eval_every = 0;  // steps between avg@k evaluations, 0 = never
  int eval_k = 32;
  int eval_tasks = 200;
  int jobs = 1;  // >1 rolls out queries concurrently

  void validate() const;
};

struct MetricsRecord {
  int step = 0;   // 1-based, across stages
  int stage = 0;  // 1-based
  double mean_response_length = 0;
  double mean_reward = 0;
  double dropped_fraction = 0;
  double mean_repetition = 0;
  double truncated_fraction = 0;
  double objective = 0;
  double grad_norm = 0;
  double eps_low = 0;
  double eps_high = 0;
  int queries = 0;
  std::optional<double> avg_at_k;
};

class CollectAbort : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CollectedBatch {
  std::vector<Group> groups;  // exactly N, each with mixed correctness
  std::size_t queries = 0;    // queries sampled, including dropped ones
  std::size_t rollouts = 0;
  double mean_response_length = 0;
  double mean_reward = 0;
  double mean_repetition = 0;
  double truncated_fraction = 0;
  std::size_t max_response_length = 0;
};

PolicyParams init_policy(const PolicyInit& init);

// Repetition score of a response, ignoring its terminating eos.
double response_repetition(const Rollout& rollout, const LoopOptions& loop = {});

// Reward of one toy rollout against the gold answer.
double rollout_reward(const Rollout& rollout, const std::string& gold);

// Rolls out G responses per query, keeps mixed-correctness groups and
// returns once N are held. `next_query` is the running query id; per-query
// randomness is derived from (config.seed, query id).
CollectedBatch collect_batch(const PolicyParams& policy, const StagePlan& stage,
                             const TrainConfig& config, std::uint64_t& next_query);

bool stage_saturated(std::span<const double> lengths, double threshold = 0.01);

struct EvalOptions {
  int k = 32;
  int tasks = 200;
  double temperature = 1.0;
  int max_len = 48;
  std::uint64_t seed = 0;
};

double evaluate(const PolicyParams& policy, const TaskSpec& spec, const EvalOptions& opts);

struct TrainHooks {
  std::function<void(const MetricsRecord&)> on_step;
  std::function<void(int stage, const PolicyParams&)> on_stage_end;
};

struct TrainResult {
  PolicyParams policy;
  std::vector<MetricsRecord> metrics;
  std::vector<int> stage_end_steps;  // last global step of each stage run
};

TrainResult train(const TrainConfig& config, const TrainHooks& hooks = {});
TrainResult train(const TrainConfig& config, PolicyParams initial, const TrainHooks& hooks = {});

// JSON forms. Config keys mirror the field names above.
TrainConfig config_from_json(const std::string& text);
std::string config_to_json(const TrainConfig& config);
std::string metrics_to_json(const MetricsRecord& m);
MetricsRecord metrics_from_json(const std::string& line);

std::string to_string(TaskFamily f);
TaskFamily task_family_from_string(const std::string& s);

}  // namespace campo

#endif  // CAMPO_TRAINER_HPP_
