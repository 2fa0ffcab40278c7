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

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "campo/trainer.hpp"
#include "campo/verifier.hpp"

namespace campo {
namespace {

// Order-4 table that answers every "a+b=" query with (a+b) mod m, then eos.
PolicyParams oracle_policy(int modulus, Index buckets = 65536) {
  PolicyParams p(toy::vocab(), 4, buckets);
  for (int a = 0; a <= 9; ++a)
    for (int b = 0; b <= 9; ++b) {
      const std::vector<TokenId> q{a, toy::kPlus, b, toy::kEquals};
      const TokenId ans = (a + b) % modulus;
      p.logits()(p.bucket(p.context(q)), ans) = 60.0;
      std::vector<TokenId> h = q;
      h.push_back(ans);
      p.logits()(p.bucket(p.context(h)), toy::kEos) = 60.0;
    }
  return p;
}

// Uniform over the ten digits after '=', then eos.
PolicyParams guessing_policy() {
  PolicyInit init;
  init.format_strength = 40.0;
  return init_policy(init);
}

TrainConfig small_config() {
  TrainConfig c;
  c.group_size = 8;
  c.batch_size = 4;
  c.learning_rate = 5.0;
  c.seed = 42;
  StagePlan s;
  s.max_response_len = 12;
  s.max_steps = 5;
  c.stages = {s};
  c.init.buckets = 65536;
  return c;
}

TEST(Toy, EncodeDecodeRoundTrip) {
  const std::string text = "3+4=\n7";
  EXPECT_EQ(toy::decode(toy::encode(text)), text);
  std::vector<TokenId> with_eos = toy::encode("12");
  with_eos.push_back(toy::kEos);
  with_eos.push_back(5);
  EXPECT_EQ(toy::decode(with_eos), "12");
  EXPECT_THROW(toy::encode("x"), std::invalid_argument);
}

TEST(GenTask, ModularAddConstruction) {
  const TaskSpec spec;
  bool found = false;
  for (std::uint64_t seed = 0; seed < 1000 && !found; ++seed) {
    Rng rng(seed);
    const Task t = gen_task(spec, rng);
    if (toy::decode(t.query) == "3+4=") {
      EXPECT_EQ(t.gold, "7");
      found = true;
    }
  }
  EXPECT_TRUE(found);
}

TEST(GenTask, GoldIsUniformResidue) {
  for (const int modulus : {7, 10}) {
    TaskSpec spec;
    spec.modulus = modulus;
    spec.operand_max = modulus == 7 ? 97 : 9;  // operand ranges that are whole residue cycles
    Rng rng(3);
    std::vector<int> counts(static_cast<std::size_t>(modulus), 0);
    for (int i = 0; i < 100000; ++i) {
      const int g = std::stoi(gen_task(spec, rng).gold);
      ASSERT_GE(g, 0);
      ASSERT_LT(g, modulus);
      ++counts[static_cast<std::size_t>(g)];
    }
    const double expected = 100000.0 / modulus;
    for (int c : counts) EXPECT_NEAR(c, expected, 0.05 * expected);
  }
}

TEST(RolloutReward, TruncatedIsZeroWhateverTheContent) {
  Rollout r;
  r.response = toy::encode("7");
  r.truncated = true;
  EXPECT_EQ(rollout_reward(r, "7"), 0.0);
  r.response.push_back(toy::kEos);
  r.truncated = false;
  EXPECT_EQ(rollout_reward(r, "7"), 1.0);
  EXPECT_EQ(rollout_reward(r, "8"), 0.0);
}

TEST(RolloutReward, LastLineIsTheAnswer) {
  Rollout r;
  r.response = toy::encode("3\n5\n7");
  r.response.push_back(toy::kEos);
  EXPECT_EQ(rollout_reward(r, "7"), 1.0);
  EXPECT_EQ(rollout_reward(r, "3"), 0.0);
}

TEST(ResponseRepetition, IgnoresTerminalEos) {
  Rollout r;
  r.response = toy::encode("7\n7\n7\n7");
  const double looped = repetition_score(std::span<const TokenId>(r.response));
  r.response.push_back(toy::kEos);
  EXPECT_EQ(response_repetition(r), looped);
  EXPECT_GT(looped, 0.8);
  Rollout short_answer;
  short_answer.response = {3, toy::kEos};
  EXPECT_EQ(response_repetition(short_answer), 0.0);
}

TEST(InitPolicy, FormatPriorPutsMassOnDigitThenEos) {
  const PolicyParams p = init_policy(PolicyInit{});
  const std::vector<TokenId> q = toy::encode("3+4=");
  const auto ctx = p.context(q);
  double digit_mass = 0;
  for (TokenId d = 0; d < 10; ++d) digit_mass += std::exp(token_logprob(p, ctx, d));
  EXPECT_GT(digit_mass, 0.99);
  std::vector<TokenId> h = q;
  h.push_back(7);
  EXPECT_GT(std::exp(token_logprob(p, p.context(h), toy::kEos)), 0.9);
}

TEST(InitPolicy, LoopBoostCreatesDigitNewlineCycle) {
  PolicyInit init;
  init.loop_boost = 7.0;
  const PolicyParams p = init_policy(init);
  std::vector<TokenId> h = toy::encode("3+4=7");
  EXPECT_GT(std::exp(token_logprob(p, p.context(h), toy::kNewline)), 0.8);
  h.push_back(toy::kNewline);
  // only the loop boost touches this row: e^7 / (e^7 + 14)
  EXPECT_NEAR(std::exp(token_logprob(p, p.context(h), 7)), std::exp(7.0) / (std::exp(7.0) + 14), 1e-12);
}

TEST(Evaluate, OraclePolicyScoresOne) {
  EvalOptions opts;
  opts.k = 8;
  opts.tasks = 100;
  EXPECT_EQ(evaluate(oracle_policy(10), TaskSpec{}, opts), 1.0);
}

TEST(Evaluate, GuessingPolicyScoresChance) {
  EvalOptions opts;
  opts.k = 32;
  opts.tasks = 200;
  opts.seed = 9;
  EXPECT_NEAR(evaluate(guessing_policy(), TaskSpec{}, opts), 0.1, 0.03);
}

TEST(Evaluate, SeedStable) {
  EvalOptions opts;
  opts.k = 4;
  opts.tasks = 50;
  opts.seed = 5;
  const auto p = init_policy(PolicyInit{});
  EXPECT_EQ(evaluate(p, TaskSpec{}, opts), evaluate(p, TaskSpec{}, opts));
  EvalOptions other = opts;
  other.seed = 6;
  EXPECT_NE(evaluate(p, TaskSpec{}, opts), evaluate(p, TaskSpec{}, other));
  opts.k = 0;
  EXPECT_THROW(evaluate(p, TaskSpec{}, opts), std::invalid_argument);
}

TEST(CollectBatch, AllCorrectPolicyAborts) {
  TrainConfig c = small_config();
  c.batch_size = 1;
  std::uint64_t next = 0;
  EXPECT_THROW(collect_batch(oracle_policy(10), c.stages[0], c, next), CollectAbort);
  EXPECT_EQ(next, 100u);
}

TEST(CollectBatch, ReturnsExactlyNMixedGroups) {
  TrainConfig c = small_config();
  c.batch_size = 6;
  const auto p = guessing_policy();
  std::uint64_t next = 0;
  const auto batch = collect_batch(p, c.stages[0], c, next);
  ASSERT_EQ(batch.groups.size(), 6u);
  EXPECT_EQ(batch.queries, next);
  EXPECT_EQ(batch.rollouts, batch.queries * 8);
  for (const auto& g : batch.groups) {
    EXPECT_TRUE(has_mixed_correctness(g));
    EXPECT_EQ(g.size(), 8u);
    for (const auto& r : g.rollouts) EXPECT_LE(r.size(), 12u);
  }
}

TEST(CollectBatch, RolloutsAreOnPolicyAtUpdateTime) {
  TrainConfig c = small_config();
  const auto p = init_policy(c.init);
  std::uint64_t next = 0;
  const auto batch = collect_batch(p, c.stages[0], c, next);
  for (const auto& g : batch.groups)
    for (const auto& r : g.rollouts) {
      std::size_t t = 0;
      for_each_token(p, r, [&](const Context& ctx, TokenId tok, std::size_t) {
        EXPECT_EQ(std::exp(token_logprob(p, ctx, tok) - r.old_logprobs[t++]), 1.0);
      });
    }
}

TEST(CollectBatch, ParallelMatchesSequential) {
  TrainConfig c = small_config();
  c.batch_size = 8;
  const auto p = init_policy(c.init);
  std::uint64_t a = 0, b = 0;
  const auto seq = collect_batch(p, c.stages[0], c, a);
  c.jobs = 4;
  const auto par = collect_batch(p, c.stages[0], c, b);
  EXPECT_EQ(a, b);
  ASSERT_EQ(seq.groups.size(), par.groups.size());
  for (std::size_t i = 0; i < seq.groups.size(); ++i) {
    EXPECT_EQ(seq.groups[i].query_id, par.groups[i].query_id);
    EXPECT_EQ(seq.groups[i].rewards, par.groups[i].rewards);
    for (std::size_t j = 0; j < seq.groups[i].size(); ++j)
      EXPECT_EQ(seq.groups[i].rollouts[j].response, par.groups[i].rollouts[j].response);
  }
  EXPECT_EQ(seq.mean_response_length, par.mean_response_length);
}

TEST(CollectBatch, PenaltyOnlyWhenEnabled) {
  TrainConfig c = small_config();
  c.init.loop_boost = 7.0;
  const auto p = init_policy(c.init);
  std::uint64_t n1 = 0, n2 = 0;
  const auto on = collect_batch(p, c.stages[0], c, n1);
  double total = 0;
  for (const auto& g : on.groups)
    for (std::size_t i = 0; i < g.size(); ++i) {
      EXPECT_EQ(g.penalties[i], response_repetition(g.rollouts[i], c.loop));
      total += g.penalties[i];
    }
  EXPECT_GT(total, 0.0);
  c.repetition_penalty = false;
  const auto off = collect_batch(p, c.stages[0], c, n2);
  for (const auto& g : off.groups)
    for (double f : g.penalties) EXPECT_EQ(f, 0.0);
  EXPECT_EQ(on.mean_repetition, off.mean_repetition);
}

TEST(StageSaturated, WindowedMeans) {
  const std::vector<double> constant(10, 7.0);
  EXPECT_TRUE(stage_saturated(constant));
  std::vector<double> growing{10, 10, 10, 10, 10.5, 10.5, 10.5, 10.5};
  EXPECT_FALSE(stage_saturated(growing));
  std::vector<double> noisy;
  for (int i = 0; i < 20; ++i) noisy.push_back(i % 2 ? 5.005 : 4.995);
  EXPECT_TRUE(stage_saturated(noisy));
  const std::vector<double> one{1.0};
  EXPECT_THROW(stage_saturated(one), std::invalid_argument);
}

TEST(Train, ZeroStagesReturnsInitialPolicy) {
  TrainConfig c = small_config();
  c.stages.clear();
  const auto init = init_policy(c.init);
  const auto result = train(c, init);
  EXPECT_TRUE(result.metrics.empty());
  EXPECT_EQ(result.policy.logits(), init.logits());
}

TEST(Train, OneRecordPerStepAndClipsFixedPerStage) {
  TrainConfig c = small_config();
  StagePlan s2 = c.stages[0];
  s2.max_response_len = 24;
  s2.max_steps = 3;
  s2.clip_high = ClipSpec::uniform(0.2, 0.3);
  c.stages.push_back(s2);
  int stage_ends = 0;
  TrainHooks hooks;
  hooks.on_stage_end = [&](int, const PolicyParams&) { ++stage_ends; };
  const auto result = train(c, hooks);
  ASSERT_EQ(result.metrics.size(), 8u);
  EXPECT_EQ(stage_ends, 2);
  EXPECT_EQ(result.stage_end_steps, (std::vector<int>{5, 8}));
  for (std::size_t i = 0; i < result.metrics.size(); ++i) {
    const auto& m = result.metrics[i];
    EXPECT_EQ(m.step, static_cast<int>(i) + 1);
    EXPECT_EQ(m.stage, i < 5 ? 1 : 2);
    EXPECT_EQ(m.eps_high, result.metrics[i < 5 ? 0 : 5].eps_high);
    EXPECT_GE(m.dropped_fraction, 0.0);
    EXPECT_LT(m.dropped_fraction, 1.0);
  }
  EXPECT_EQ(result.metrics[0].eps_high, 0.2);
  EXPECT_GE(result.metrics[5].eps_high, 0.2);
  EXPECT_LE(result.metrics[5].eps_high, 0.3);
}

TEST(Train, SaturationEndsStageEarly) {
  TrainConfig c = small_config();
  c.stages[0].max_steps = 50;
  c.stages[0].saturation_window = 4;
  c.stages[0].saturation_threshold = 10.0;  // any two halves count as saturated
  const auto result = train(c);
  EXPECT_EQ(result.metrics.size(), 4u);
}

TEST(Train, SequentialRunsAreBitIdentical) {
  TrainConfig c = small_config();
  c.stages[0].max_steps = 10;
  c.eval_every = 5;
  c.eval_k = 2;
  c.eval_tasks = 10;
  const auto a = train(c);
  const auto b = train(c);
  ASSERT_EQ(a.metrics.size(), b.metrics.size());
  for (std::size_t i = 0; i < a.metrics.size(); ++i)
    EXPECT_EQ(metrics_to_json(a.metrics[i]), metrics_to_json(b.metrics[i]));
  EXPECT_EQ(a.policy.logits(), b.policy.logits());
  EXPECT_TRUE(a.metrics[4].avg_at_k.has_value());
  EXPECT_FALSE(a.metrics[3].avg_at_k.has_value());
}

TEST(Train, LearnsModularAdditionAboveChance) {
  TrainConfig c = small_config();
  c.batch_size = 16;
  c.stages[0].max_response_len = 24;
  c.stages[0].max_steps = 250;
  const auto result = train(c);
  EvalOptions opts;
  opts.k = 16;
  opts.tasks = 100;
  opts.seed = 1;
  EXPECT_GT(evaluate(result.policy, c.task, opts), 0.25);
}

TEST(Train, RejectsInvalidConfigs) {
  TrainConfig c = small_config();
  c.group_size = 1;
  EXPECT_THROW(train(c), std::invalid_argument);
  c = small_config();
  c.stages.push_back(c.stages[0]);  // length must grow
  EXPECT_THROW(train(c), std::invalid_argument);
  c = small_config();
  c.stages[0].clip_low = ClipSpec::point(1.5);
  EXPECT_THROW(train(c), std::invalid_argument);
}

TEST(ConfigJson, RoundTrips) {
  TrainConfig c = small_config();
  c.stages[0].clip_high = ClipSpec::uniform(0.2, 0.28);
  c.task.family = TaskFamily::digit_sum;
  c.init.loop_boost = 3.5;
  const std::string text = config_to_json(c);
  const TrainConfig back = config_from_json(text);
  EXPECT_EQ(config_to_json(back), text);
  EXPECT_THROW(config_from_json("{not json"), std::exception);
  EXPECT_THROW(config_from_json(R"({"group_size": 1})"), std::invalid_argument);
}

TEST(MetricsJson, RoundTrips) {
  MetricsRecord m;
  m.step = 3;
  m.stage = 2;
  m.mean_response_length = 4.25;
  m.mean_reward = 0.5;
  m.avg_at_k = 0.75;
  const auto back = metrics_from_json(metrics_to_json(m));
  EXPECT_EQ(metrics_to_json(back), metrics_to_json(m));
}

}  // namespace
}  // namespace campo
