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

#include "campo/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>

#include "campo/verifier.hpp"

namespace campo {

namespace {
constexpr std::uint64_t kTrainStream = 0x7472616e;  // "tran"
constexpr std::uint64_t kEvalStream = 0x6576616c;   // "eval"
constexpr std::uint64_t kClipStream = 0x636c6970;   // "clip"
}  // namespace

// ------------------------------------------------------------------- tasks

namespace toy {

std::string decode(std::span<const TokenId> tokens) {
  std::string out;
  for (TokenId t : tokens) {
    if (t == kEos) break;
    if (is_digit(t)) out.push_back(static_cast<char>('0' + t));
    else if (t == kPlus) out.push_back('+');
    else if (t == kTimes) out.push_back('*');
    else if (t == kEquals) out.push_back('=');
    else if (t == kNewline) out.push_back('\n');
  }
  return out;
}

std::vector<TokenId> encode(const std::string& text) {
  std::vector<TokenId> out;
  for (char c : text) {
    if (c >= '0' && c <= '9') out.push_back(c - '0');
    else if (c == '+') out.push_back(kPlus);
    else if (c == '*') out.push_back(kTimes);
    else if (c == '=') out.push_back(kEquals);
    else if (c == '\n') out.push_back(kNewline);
    else throw std::invalid_argument(std::string("no toy token for character '") + c + "'");
  }
  return out;
}

}  // namespace toy

std::string to_string(TaskFamily f) {
  switch (f) {
    case TaskFamily::modular_add: return "modular-add";
    case TaskFamily::modular_mul: return "modular-mul";
    case TaskFamily::digit_sum: return "digit-sum";
  }
  return "modular-add";
}

TaskFamily task_family_from_string(const std::string& s) {
  if (s == "modular-add") return TaskFamily::modular_add;
  if (s == "modular-mul") return TaskFamily::modular_mul;
  if (s == "digit-sum") return TaskFamily::digit_sum;
  throw std::invalid_argument("unknown task family: " + s);
}

void TaskSpec::validate() const {
  if (modulus < 2) throw std::invalid_argument("task modulus must be >= 2");
  if (operand_max < 0) throw std::invalid_argument("operand_max must be >= 0");
  if (family == TaskFamily::digit_sum && digits < 1)
    throw std::invalid_argument("digit_sum needs digits >= 1");
}

Task gen_task(const TaskSpec& spec, Rng& rng) {
  spec.validate();
  Task task;
  long long answer = 0;
  std::string text;
  switch (spec.family) {
    case TaskFamily::modular_add:
    case TaskFamily::modular_mul: {
      const auto a = static_cast<long long>(rng.below(static_cast<std::uint64_t>(spec.operand_max) + 1));
      const auto b = static_cast<long long>(rng.below(static_cast<std::uint64_t>(spec.operand_max) + 1));
      const bool add = spec.family == TaskFamily::modular_add;
      text = std::to_string(a) + (add ? "+" : "*") + std::to_string(b) + "=";
      answer = (add ? a + b : a * b) % spec.modulus;
      break;
    }
    case TaskFamily::digit_sum: {
      long long sum = 0;
      for (int i = 0; i < spec.digits; ++i) {
        const auto d = static_cast<long long>(rng.below(10));
        text.push_back(static_cast<char>('0' + d));
        sum += d;
      }
      text.push_back('=');
      answer = sum % spec.modulus;
      break;
    }
  }
  task.query = toy::encode(text);
  task.gold = std::to_string(answer);
  return task;
}

// ------------------------------------------------------------------ policy

PolicyParams init_policy(const PolicyInit& init) {
  PolicyParams params(toy::vocab(), init.order, init.buckets);
  if (init.format_strength == 0.0 && init.loop_boost == 0.0) return params;

  // Enumerate every window over vocab + begin marker; only the last two
  // positions drive the prior, but the bucket depends on the whole window.
  const int symbols = toy::kVocabSize + 1;
  const int k = init.order;
  std::vector<TokenId> window(static_cast<std::size_t>(k), 0);
  const double s = init.format_strength;
  const double loop = init.loop_boost;
  for (;;) {
    Context ctx(k, window, params.vocab().begin_marker());
    auto row = params.logits().row(params.bucket(ctx));
    const TokenId last = window[static_cast<std::size_t>(k - 1)];
    const TokenId prev = k >= 2 ? window[static_cast<std::size_t>(k - 2)] : toy::kVocabSize;
    if (last == toy::kEquals) row.head(10).array() += s;
    if (toy::is_digit(last) && (prev == toy::kEquals || prev == toy::kNewline)) {
      row(toy::kEos) += s;
      row(toy::kNewline) += loop;
    }
    if (last == toy::kNewline && toy::is_digit(prev)) row(prev) += loop;

    // odometer increment
    int pos = k - 1;
    while (pos >= 0 && ++window[static_cast<std::size_t>(pos)] == symbols) {
      window[static_cast<std::size_t>(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return params;
}

double response_repetition(const Rollout& rollout, const LoopOptions& loop) {
  std::span<const TokenId> body(rollout.response);
  if (!body.empty() && !rollout.truncated) body = body.first(body.size() - 1);
  if (body.empty()) return 0.0;
  return repetition_score(body, loop);
}

double rollout_reward(const Rollout& rollout, const std::string& gold) {
  return reward(extract_answer(toy::decode(rollout.response)), gold, rollout.truncated);
}

// ---------------------------------------------------------------- collect

void TrainConfig::validate() const {
  if (group_size < 2) throw std::invalid_argument("group_size (G) must be >= 2");
  if (batch_size < 1) throw std::invalid_argument("batch_size (N) must be >= 1");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
  if (inner_iterations < 1) throw std::invalid_argument("inner_iterations must be >= 1");
  if (!(temperature > 0)) throw std::invalid_argument("temperature must be > 0");
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const auto& st = stages[s];
    if (st.max_response_len < 1) throw std::invalid_argument("max_response_len must be >= 1");
    if (s > 0 && st.max_response_len <= stages[s - 1].max_response_len)
      throw std::invalid_argument("max_response_len must strictly increase across stages");
    if (st.max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
    if (st.saturation_window == 1) throw std::invalid_argument("saturation_window must be 0 or >= 2");
    st.clip_low.validate();
    st.clip_high.validate();
  }
  task.validate();
}

namespace {

struct QueryOutcome {
  Group group;
  double length_sum = 0;
  double reward_sum = 0;
  double repetition_sum = 0;
  std::size_t truncated = 0;
  std::size_t max_len = 0;
};

QueryOutcome roll_query(const PolicyParams& policy, const StagePlan& stage,
                        const TrainConfig& config, std::uint64_t query_id) {
  Rng rng(derive_seed(config.seed, {kTrainStream, query_id}));
  const Task task = gen_task(config.task, rng);
  QueryOutcome out;
  out.group.query_id = query_id;
  const SamplingOptions opts{config.temperature, false};
  for (int i = 0; i < config.group_size; ++i) {
    Rollout ro = sample_response(policy, task.query, stage.max_response_len, opts, rng);
    const double r = rollout_reward(ro, task.gold);
    const double f = response_repetition(ro, config.loop);
    out.length_sum += static_cast<double>(ro.size());
    out.reward_sum += r;
    out.repetition_sum += f;
    out.truncated += ro.truncated ? 1 : 0;
    out.max_len = std::max(out.max_len, ro.size());
    out.group.rewards.push_back(r);
    out.group.penalties.push_back(config.repetition_penalty ? f : 0.0);
    out.group.rollouts.push_back(std::move(ro));
  }
  return out;
}

}  // namespace

CollectedBatch collect_batch(const PolicyParams& policy, const StagePlan& stage,
                             const TrainConfig& config, std::uint64_t& next_query) {
  CollectedBatch batch;
  const auto need = static_cast<std::size_t>(config.batch_size);
  const std::size_t abort_after = 100 * need;
  std::size_t barren = 0;
  double len_sum = 0, reward_sum = 0, rep_sum = 0;
  std::size_t truncated = 0;
  const std::size_t jobs = static_cast<std::size_t>(std::max(1, config.jobs));

  while (batch.groups.size() < need) {
    // Outcomes depend only on the query id, so a chunk rolled out in
    // parallel is consumed in id order exactly as the sequential loop would.
    std::vector<QueryOutcome> chunk;
    if (jobs == 1) {
      chunk.push_back(roll_query(policy, stage, config, next_query));
    } else {
      std::vector<std::future<QueryOutcome>> futures;
      for (std::size_t j = 0; j < jobs; ++j)
        futures.push_back(std::async(std::launch::async, roll_query, std::cref(policy),
                                     std::cref(stage), std::cref(config), next_query + j));
      for (auto& f : futures) chunk.push_back(f.get());
    }
    for (auto& q : chunk) {
      if (batch.groups.size() >= need) break;
      ++next_query;
      ++batch.queries;
      batch.rollouts += q.group.size();
      len_sum += q.length_sum;
      reward_sum += q.reward_sum;
      rep_sum += q.repetition_sum;
      truncated += q.truncated;
      batch.max_response_length = std::max(batch.max_response_length, q.max_len);
      if (has_mixed_correctness(q.group)) {
        batch.groups.push_back(std::move(q.group));
        barren = 0;
      } else if (++barren >= abort_after) {
        throw CollectAbort("no group with mixed correctness in " + std::to_string(abort_after) +
                           " consecutive queries; policy collapsed or task degenerate");
      }
    }
  }
  const auto n = static_cast<double>(batch.rollouts);
  batch.mean_response_length = len_sum / n;
  batch.mean_reward = reward_sum / n;
  batch.mean_repetition = rep_sum / n;
  batch.truncated_fraction = static_cast<double>(truncated) / n;
  return batch;
}

// ------------------------------------------------------------ saturation

bool stage_saturated(std::span<const double> lengths, double threshold) {
  if (lengths.size() < 2) throw std::invalid_argument("saturation window must be >= 2");
  const std::size_t half = lengths.size() / 2;
  const auto prior = lengths.subspan(lengths.size() - 2 * half, half);
  const auto recent = lengths.subspan(lengths.size() - half, half);
  const double m1 = std::accumulate(prior.begin(), prior.end(), 0.0) / static_cast<double>(half);
  const double m2 = std::accumulate(recent.begin(), recent.end(), 0.0) / static_cast<double>(half);
  const double scale = std::max(std::abs(m1), 1e-12);
  return std::abs(m2 - m1) / scale < threshold;
}

// -------------------------------------------------------------- evaluate

double evaluate(const PolicyParams& policy, const TaskSpec& spec, const EvalOptions& opts) {
  if (opts.k < 1) throw std::invalid_argument("avg@k needs k >= 1");
  if (opts.tasks < 1) throw std::invalid_argument("evaluation needs at least one task");
  const SamplingOptions sampling{opts.temperature, false};
  double total = 0;
  for (int t = 0; t < opts.tasks; ++t) {
    Rng task_rng(derive_seed(opts.seed, {kEvalStream, static_cast<std::uint64_t>(t)}));
    const Task task = gen_task(spec, task_rng);
    double correct = 0;
    for (int a = 0; a < opts.k; ++a) {
      Rng rng(derive_seed(opts.seed, {kEvalStream, static_cast<std::uint64_t>(t),
                                      static_cast<std::uint64_t>(a) + 1}));
      const Rollout ro = sample_response(policy, task.query, opts.max_len, sampling, rng);
      correct += rollout_reward(ro, task.gold);
    }
    total += correct / opts.k;
  }
  return total / opts.tasks;
}

// ----------------------------------------------------------------- train

TrainResult train(const TrainConfig& config, const TrainHooks& hooks) {
  return train(config, init_policy(config.init), hooks);
}

TrainResult train(const TrainConfig& config, PolicyParams initial, const TrainHooks& hooks) {
  config.validate();
  TrainResult result{std::move(initial), {}, {}};
  PolicyParams& policy = result.policy;
  std::uint64_t next_query = 0;
  int step = 0;

  ClipSchedule schedule;
  for (const auto& st : config.stages) schedule.push_back({st.clip_low, st.clip_high});

  for (std::size_t s = 0; s < config.stages.size(); ++s) {
    const StagePlan& stage = config.stages[s];
    Rng clip_rng(derive_seed(config.seed, {kClipStream, s}));
    const auto [eps_low, eps_high] = sample_clip_ratios(schedule, s, clip_rng);
    std::vector<double> lengths;

    for (int local = 0; local < stage.max_steps; ++local) {
      ++step;
      // pi_old <- pi_theta: rollouts record their own old log-probs.
      const CollectedBatch batch = collect_batch(policy, stage, config, next_query);
      std::vector<AdvantageSet> advantages;
      advantages.reserve(batch.groups.size());
      for (const auto& g : batch.groups) advantages.push_back(campo_advantage(g));

      MetricsRecord m;
      m.step = step;
      m.stage = static_cast<int>(s) + 1;
      m.mean_response_length = batch.mean_response_length;
      m.mean_reward = batch.mean_reward;
      m.dropped_fraction = 1.0 - static_cast<double>(batch.groups.size()) / static_cast<double>(batch.queries);
      m.mean_repetition = batch.mean_repetition;
      m.truncated_fraction = batch.truncated_fraction;
      m.eps_low = eps_low;
      m.eps_high = eps_high;
      m.queries = static_cast<int>(batch.queries);

      for (int it = 0; it < config.inner_iterations; ++it) {
        const auto lg = campo_loss_and_grad<double>(batch.groups, advantages, policy, eps_low, eps_high);
        if (it == 0) {
          m.objective = lg.objective;
          m.grad_norm = lg.grad.norm();
        }
        apply_gradient(policy, lg.grad, config.learning_rate);
      }
      if (!policy.all_finite()) throw NonFiniteError("policy diverged at step " + std::to_string(step));

      if (config.eval_every > 0 && step % config.eval_every == 0) {
        EvalOptions eo;
        eo.k = config.eval_k;
        eo.tasks = config.eval_tasks;
        eo.temperature = config.temperature;
        eo.max_len = stage.max_response_len;
        eo.seed = config.seed;
        m.avg_at_k = evaluate(policy, config.task, eo);
      }

      result.metrics.push_back(m);
      if (hooks.on_step) hooks.on_step(m);

      lengths.push_back(m.mean_response_length);
      const auto w = static_cast<std::size_t>(stage.saturation_window);
      if (w >= 2 && lengths.size() >= w &&
          stage_saturated(std::span<const double>(lengths).last(w), stage.saturation_threshold))
        break;
    }
    result.stage_end_steps.push_back(step);
    if (hooks.on_stage_end) hooks.on_stage_end(static_cast<int>(s) + 1, policy);
  }
  return result;
}

}  // namespace campo
