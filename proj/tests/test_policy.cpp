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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

#include "campo/errors.hpp"
#include "campo/policy.hpp"
#include "campo/random.hpp"
#include "support/oracles.hpp"

namespace campo {
namespace {

std::vector<TokenId> history(std::initializer_list<TokenId> t) { return std::vector<TokenId>(t); }

TEST(TokenLogprob, UniformLogitsGiveLogOfVocab) {
  PolicyParams p(Vocab{8, 7}, 2, 5);
  const auto h = history({1, 2});
  for (TokenId t = 0; t < 8; ++t)
    EXPECT_NEAR(token_logprob(p, p.context(h), t), -std::log(8.0), 1e-15);
}

TEST(TokenLogprob, DominantLogitIsMostLikely) {
  PolicyParams p(Vocab{6, 5}, 1, 1);
  p.logits()(0, 0) = 5.0;
  const auto ctx = p.context(history({3}));
  const double top = token_logprob(p, ctx, 0);
  for (TokenId t = 1; t < 6; ++t) EXPECT_GE(top, token_logprob(p, ctx, t));
}

TEST(TokenLogprob, TwoTokenClosedForm) {
  PolicyParams p(Vocab{2, 1}, 1, 1);
  p.logits()(0, 0) = 1.0;
  p.logits()(0, 1) = 2.0;
  const double expected = -std::log(1.0 + std::exp(-1.0));
  EXPECT_NEAR(token_logprob(p, p.context({}), 1), expected, 1e-12);
  EXPECT_NEAR(expected, -0.3133, 1e-4);
}

TEST(TokenLogprob, ProbabilitiesSumToOne) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = testing::random_policy(rng, 7, 3, 13, 6.0);
    const std::vector<TokenId> h{static_cast<TokenId>(rng.below(7)), static_cast<TokenId>(rng.below(7))};
    const auto ctx = p.context(h);
    double total = 0.0;
    for (TokenId t = 0; t < 7; ++t) total += std::exp(token_logprob(p, ctx, t));
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(TokenLogprob, RejectsBadTokenAndNonFiniteLogits) {
  PolicyParams p(Vocab{4, 3}, 1, 2);
  const auto ctx = p.context({});
  EXPECT_THROW(token_logprob(p, ctx, 4), std::out_of_range);
  EXPECT_THROW(token_logprob(p, ctx, -1), std::out_of_range);
  p.logits()(p.bucket(ctx), 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(token_logprob(p, ctx, 0), NonFiniteError);
}

TEST(Context, PadsShortHistoryWithBeginMarker) {
  PolicyParams p(Vocab{5, 4}, 3, 7);
  const auto ctx = p.context(history({2}));
  ASSERT_EQ(ctx.window().size(), 3u);
  EXPECT_EQ(ctx.window()[0], 5);
  EXPECT_EQ(ctx.window()[1], 5);
  EXPECT_EQ(ctx.window()[2], 2);
}

TEST(Context, PushKeepsLastKTokens) {
  PolicyParams p(Vocab{9, 8}, 2, 7);
  auto ctx = p.context(history({1, 2, 3}));
  ctx.push(4);
  const auto direct = p.context(history({1, 2, 3, 4}));
  EXPECT_EQ(ctx.hash(), direct.hash());
  EXPECT_EQ(p.bucket(ctx), p.bucket(direct));
}

TEST(GradTokenLogprob, UniformRowIsOnehotMinusUniform) {
  PolicyParams p(Vocab{4, 3}, 1, 3);
  const auto ctx = p.context(history({0}));
  const auto g = grad_token_logprob(p, ctx, 2);
  ASSERT_EQ(g.rows().size(), 1u);
  const Index b = p.bucket(ctx);
  EXPECT_DOUBLE_EQ(g.coeff(b, 0), -0.25);
  EXPECT_DOUBLE_EQ(g.coeff(b, 1), -0.25);
  EXPECT_DOUBLE_EQ(g.coeff(b, 2), 0.75);
  EXPECT_DOUBLE_EQ(g.coeff(b, 3), -0.25);
}

TEST(GradTokenLogprob, RowsSumToZero) {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto p = testing::random_policy(rng, 6, 2, 9, 4.0);
    const auto ctx = p.context(history({static_cast<TokenId>(rng.below(6))}));
    const auto g = grad_token_logprob(p, ctx, static_cast<TokenId>(rng.below(6)));
    for (const auto& [b, row] : g.rows()) EXPECT_NEAR(row.sum(), 0.0, 1e-14);
  }
}

TEST(GradTokenLogprob, MatchesCentralDifferences) {
  Rng rng(5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto p = testing::random_policy(rng, 2 + static_cast<int>(rng.below(7)), 1 + static_cast<int>(rng.below(3)),
                                    1 + static_cast<Index>(rng.below(6)));
    const int V = p.vocab().size;
    std::vector<TokenId> h;
    for (int i = 0; i < 3; ++i) h.push_back(static_cast<TokenId>(rng.below(V)));
    const auto ctx = p.context(h);
    const TokenId tok = static_cast<TokenId>(rng.below(V));
    const auto g = grad_token_logprob(p, ctx, tok);
    worst = std::max(worst, testing::max_fd_error(p, g, [&](const PolicyParams& q) {
                       return token_logprob(q, ctx, tok);
                     }));
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(SampleResponse, GreedyDominantEosStopsImmediately) {
  PolicyParams p(Vocab{5, 4}, 2, 11);
  p.logits().col(4).setConstant(10.0);
  Rng rng(1);
  const auto r = sample_response(p, history({0, 1}), 8, SamplingOptions{1.0, true}, rng);
  ASSERT_EQ(r.response.size(), 1u);
  EXPECT_EQ(r.response[0], 4);
  EXPECT_FALSE(r.truncated);
}

TEST(SampleResponse, LengthCapAndTruncationFlag) {
  Rng prng(9);
  auto p = testing::random_policy(prng, 6, 2, 17);
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto r = sample_response(p, history({1}), 5, SamplingOptions{}, rng);
    ASSERT_LE(r.response.size(), 5u);
    ASSERT_EQ(r.old_logprobs.size(), r.response.size());
    const bool has_eos = !r.response.empty() && r.response.back() == p.vocab().eos;
    EXPECT_EQ(r.truncated, !has_eos);
  }
}

TEST(SampleResponse, SameSeedSameRollout) {
  Rng prng(4);
  auto p = testing::random_policy(prng, 6, 3, 31);
  Rng a(77), b(77);
  for (int i = 0; i < 20; ++i) {
    const auto ra = sample_response(p, history({2, 3}), 12, SamplingOptions{0.7, false}, a);
    const auto rb = sample_response(p, history({2, 3}), 12, SamplingOptions{0.7, false}, b);
    EXPECT_EQ(ra.response, rb.response);
    EXPECT_EQ(ra.old_logprobs, rb.old_logprobs);
    EXPECT_EQ(ra.truncated, rb.truncated);
  }
}

TEST(SampleResponse, OldLogprobsUseUnscaledPolicy) {
  Rng prng(8);
  auto p = testing::random_policy(prng, 5, 2, 7);
  Rng rng(3);
  const auto r = sample_response(p, history({0}), 6, SamplingOptions{0.5, false}, rng);
  std::size_t t = 0;
  for_each_token(p, r, [&](const Context& ctx, TokenId tok, std::size_t) {
    EXPECT_DOUBLE_EQ(r.old_logprobs[t++], token_logprob(p, ctx, tok));
  });
}

TEST(SampleResponse, RejectsBadArguments) {
  PolicyParams p(Vocab{3, 2}, 1, 1);
  Rng rng(0);
  EXPECT_THROW(sample_response(p, history({0}), 0, SamplingOptions{}, rng), std::invalid_argument);
  EXPECT_THROW(sample_response(p, history({0}), 3, SamplingOptions{0.0, false}, rng),
               std::invalid_argument);
  EXPECT_NO_THROW(sample_response(p, history({0}), 3, SamplingOptions{0.0, true}, rng));
}

TEST(SampleResponse, TemperatureSharpensTowardArgmax) {
  PolicyParams p(Vocab{4, 3}, 1, 1);
  p.logits()(0, 3) = 1.0;
  Rng rng(12);
  int cold = 0, warm = 0;
  for (int i = 0; i < 2000; ++i) {
    cold += sample_response(p, history({0}), 1, SamplingOptions{0.2, false}, rng).response[0] == 3;
    warm += sample_response(p, history({0}), 1, SamplingOptions{1.0, false}, rng).response[0] == 3;
  }
  // p(3) = e/(e+3) ~ 0.475 at T=1 and e^5/(e^5+3) ~ 0.98 at T=0.2
  EXPECT_NEAR(warm / 2000.0, std::exp(1.0) / (std::exp(1.0) + 3.0), 0.04);
  EXPECT_GT(cold / 2000.0, 0.95);
}

TEST(Checkpoint, RoundTripsAtFloatPrecision) {
  Rng rng(21);
  auto p = testing::random_policy(rng, 7, 3, 19, 3.0);
  const auto path = (std::filesystem::temp_directory_path() / "campo_ckpt_roundtrip.bin").string();
  write_checkpoint(path, p);
  const auto q = read_checkpoint(path);
  EXPECT_EQ(q.order(), p.order());
  EXPECT_EQ(q.buckets(), p.buckets());
  EXPECT_EQ(q.vocab().size, p.vocab().size);
  EXPECT_EQ(q.vocab().eos, p.vocab().eos);
  EXPECT_TRUE(q.logits().isApprox(p.logits().cast<float>().cast<double>(), 0.0));
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsMissingAndTruncatedFiles) {
  EXPECT_THROW(read_checkpoint("/nonexistent/dir/x.ckpt"), FileError);
  const auto path = (std::filesystem::temp_directory_path() / "campo_ckpt_short.bin").string();
  {
    std::ofstream os(path, std::ios::binary);
    os << "abc";
  }
  EXPECT_THROW(read_checkpoint(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST(Rng, DerivedStreamsAreDistinctAndStable) {
  EXPECT_EQ(derive_seed(1, {2, 3}), derive_seed(1, {2, 3}));
  EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
  EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.below(7), 7u);
  }
}

}  // namespace
}  // namespace campo
