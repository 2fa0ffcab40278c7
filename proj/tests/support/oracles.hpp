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

#ifndef CAMPO_TESTS_SUPPORT_ORACLES_HPP_
#define CAMPO_TESTS_SUPPORT_ORACLES_HPP_

// Independent reference implementations and fixture builders shared by the
// unit tests and the acceptance runner. Nothing here calls into the code
// under test for the quantity it is checking.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "campo/curation.hpp"
#include "campo/objectives.hpp"
#include "campo/policy.hpp"
#include "campo/random.hpp"
#include "campo/repetition.hpp"

namespace campo::testing {

// ------------------------------------------------------------------ loops

// O(n^3): for every start (ascending) and period (ascending) check the suffix
// directly against the definition: at least `min_repeats` full copies of the
// block, the rest a prefix of the block.
inline std::optional<LoopSpan> brute_force_loop(std::span<const TokenId> s,
                                                std::size_t min_period = 1,
                                                std::size_t min_repeats = 3) {
  const std::size_t n = s.size();
  for (std::size_t start = 0; start < n; ++start) {
    const std::size_t m = n - start;
    for (std::size_t p = std::max<std::size_t>(min_period, 1); p <= m; ++p) {
      if (m / p < min_repeats) break;
      bool periodic = true;
      for (std::size_t i = start + p; i < n && periodic; ++i) periodic = s[i] == s[i - p];
      if (periodic) return LoopSpan{start, p, m / p};
    }
  }
  return std::nullopt;
}

inline double brute_force_score(std::span<const TokenId> s, std::size_t min_period = 1,
                                std::size_t min_repeats = 3) {
  const auto span = brute_force_loop(s, min_period, min_repeats);
  if (!span) return 0.0;
  return static_cast<double>(s.size() - span->start) / static_cast<double>(s.size());
}

// ------------------------------------------------------ finite differences

// Max relative error between an analytic sparse gradient and central
// differences of `f` over every logit of `params`. Entries whose magnitudes
// are both below `floor` are compared absolutely.
template <typename F>
double max_fd_error(PolicyParams& params, const SparseGradient<double>& analytic, F&& f,
                    double h = 1e-5, double floor = 1e-7) {
  double worst = 0.0;
  auto& L = params.logits();
  for (Index b = 0; b < L.rows(); ++b) {
    for (Index w = 0; w < L.cols(); ++w) {
      const double saved = L(b, w);
      L(b, w) = saved + h;
      const double up = f(params);
      L(b, w) = saved - h;
      const double down = f(params);
      L(b, w) = saved;
      const double fd = (up - down) / (2 * h);
      const double an = analytic.coeff(b, w);
      const double scale = std::max({std::abs(fd), std::abs(an), floor});
      worst = std::max(worst, std::abs(fd - an) / scale);
    }
  }
  return worst;
}

inline PolicyParams random_policy(Rng& rng, int vocab, int order, Index buckets,
                                  double spread = 1.5) {
  PolicyParams p(Vocab{vocab, vocab - 1}, order, buckets);
  for (Index b = 0; b < p.buckets(); ++b)
    for (Index w = 0; w < vocab; ++w) p.logits()(b, w) = rng.uniform(-spread, spread);
  return p;
}

// A random batch whose old log-probs come from `old_policy`, so the current
// policy sees ratios away from 1 on both sides of the clip window.
struct LossInstance {
  PolicyParams params;
  PolicyParams old_params;
  std::vector<Group> groups;
  std::vector<AdvantageSet> advantages;
};

inline LossInstance random_loss_instance(Rng& rng, int max_group = 4, int max_len = 6,
                                         int max_vocab = 8) {
  const int vocab = 3 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_vocab - 2)));
  const int order = 1 + static_cast<int>(rng.below(3));
  const Index buckets = 3 + static_cast<Index>(rng.below(5));
  LossInstance inst{random_policy(rng, vocab, order, buckets), PolicyParams(Vocab{vocab, vocab - 1}, order, buckets), {}, {}};
  inst.old_params = inst.params;
  for (Index b = 0; b < buckets; ++b)
    for (Index w = 0; w < vocab; ++w) inst.old_params.logits()(b, w) += rng.uniform(-0.3, 0.3);

  const int num_groups = 1 + static_cast<int>(rng.below(2));
  for (int g = 0; g < num_groups; ++g) {
    Group group;
    group.query_id = static_cast<std::uint64_t>(g);
    const int G = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_group - 1)));
    for (int i = 0; i < G; ++i) {
      Rollout r;
      const int qlen = 1 + static_cast<int>(rng.below(3));
      for (int t = 0; t < qlen; ++t) r.query.push_back(static_cast<TokenId>(rng.below(vocab)));
      const int len = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_len)));
      for (int t = 0; t < len; ++t) r.response.push_back(static_cast<TokenId>(rng.below(vocab)));
      for_each_token(inst.old_params, r, [&](const Context& ctx, TokenId tok, std::size_t) {
        r.old_logprobs.push_back(token_logprob(inst.old_params, ctx, tok));
      });
      group.rollouts.push_back(std::move(r));
      group.rewards.push_back(i == 0 ? 1.0 : static_cast<double>(rng.below(2)));
      group.penalties.push_back(rng.uniform(0.0, 0.5));
    }
    group.rewards.back() = 0.0;
    inst.advantages.push_back(campo_advantage(group));
    inst.groups.push_back(std::move(group));
  }
  return inst;
}

// ------------------------------------------------------- curation fixture

// Planted exclusion counts of the 1000-record fixture, per pipeline stage.
struct PlantedCounts {
  std::size_t total = 1000;
  std::size_t style = 50;  // 40 proof-style + 10 mostly-CJK
  std::size_t exact_dup = 60;
  std::size_t near_dup = 50;
  std::size_t contaminated = 20;  // one per eval question
  std::size_t trivial = 30;       // pass_rate 1.0
  std::size_t unsolvable = 25;    // pass_rate 0.0
  std::size_t no_pass_rate = 100;
  std::size_t long_answer = 15;

  std::size_t final_count() const {
    return total - style - exact_dup - near_dup - contaminated - trivial - unsolvable -
           long_answer;
  }
};

struct CurationFixture {
  std::vector<ProblemRecord> records;
  std::vector<std::string> eval_questions;
  PlantedCounts planted;
};

// Every base question uses words private to it ("q17w3"), so two base
// questions never share an n-gram; the planted records are built from them.
inline CurationFixture build_curation_fixture(std::uint64_t seed = 2024) {
  CurationFixture fx;
  const PlantedCounts& pc = fx.planted;
  Rng rng(seed);

  auto words = [](const std::string& tag, int count) {
    std::string q;
    for (int w = 0; w < count; ++w) {
      if (w) q += ' ';
      q += tag + "w" + std::to_string(w);
    }
    return q;
  };

  for (std::size_t e = 0; e < pc.contaminated; ++e)
    fx.eval_questions.push_back(words("eval" + std::to_string(e), 16));

  const std::size_t duplicates = pc.exact_dup + pc.near_dup;
  const std::size_t base_count = pc.total - duplicates;
  std::vector<ProblemRecord> base;
  for (std::size_t i = 0; i < base_count; ++i) {
    ProblemRecord r;
    r.id = "r" + std::to_string(i);
    r.question = words("q" + std::to_string(i), 30);
    r.answer = std::to_string(i % 97);
    r.source = "fixture";
    r.pass_rate = 0.2 + 0.6 * rng.uniform();
    base.push_back(std::move(r));
  }

  // Plant the per-record defects on disjoint slices of the base set.
  std::size_t cursor = 0;
  auto take = [&](std::size_t n) {
    const std::size_t b = cursor;
    cursor += n;
    return b;
  };
  const std::size_t proof_at = take(40);
  for (std::size_t i = 0; i < 40; ++i)
    base[proof_at + i].question = "Prove that " + base[proof_at + i].question;
  const std::size_t cjk_at = take(pc.style - 40);
  for (std::size_t i = 0; i < pc.style - 40; ++i)
    base[cjk_at + i].question = "\xe8\xa8\x88\xe7\xae\x97\xe5\x92\x8c\xe5\xb7\xae\xe7\xa9\x8d "
                                "\xe6\x95\xb4\xe6\x95\xb0\xe6\x96\xb9\xe7\xa8\x8b " +
                                std::to_string(i);
  const std::size_t contam_at = take(pc.contaminated);
  for (std::size_t i = 0; i < pc.contaminated; ++i)
    base[contam_at + i].question += " " + fx.eval_questions[i];
  const std::size_t trivial_at = take(pc.trivial);
  for (std::size_t i = 0; i < pc.trivial; ++i) base[trivial_at + i].pass_rate = 1.0;
  const std::size_t unsolved_at = take(pc.unsolvable);
  for (std::size_t i = 0; i < pc.unsolvable; ++i) base[unsolved_at + i].pass_rate = 0.0;
  const std::size_t missing_at = take(pc.no_pass_rate);
  for (std::size_t i = 0; i < pc.no_pass_rate; ++i) base[missing_at + i].pass_rate.reset();
  const std::size_t long_at = take(pc.long_answer);
  for (std::size_t i = 0; i < pc.long_answer; ++i)
    base[long_at + i].answer = "thisanswerhastoomanychars" + std::to_string(i);
  const std::size_t clean_at = take(duplicates);

  // Duplicates copy clean base records, which sit after every planted slice,
  // so each one is caught by exactly its own stage.
  std::vector<ProblemRecord> dups;
  for (std::size_t i = 0; i < pc.exact_dup; ++i) {
    ProblemRecord d = base[clean_at + i];
    d.id = "dup" + std::to_string(i);
    d.question = "  " + d.question + " \n";
    if (i % 2) std::transform(d.question.begin(), d.question.end(), d.question.begin(), ::toupper);
    dups.push_back(std::move(d));
  }
  for (std::size_t i = 0; i < pc.near_dup; ++i) {
    ProblemRecord d = base[clean_at + pc.exact_dup + i];
    d.id = "near" + std::to_string(i);
    d.question += " extra";  // one new trailing word: 21 of 22 grams shared
    dups.push_back(std::move(d));
  }

  // Shuffle base and duplicates separately so originals precede copies.
  auto shuffle = [&](std::vector<ProblemRecord>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
  };
  shuffle(base);
  shuffle(dups);
  fx.records = std::move(base);
  fx.records.insert(fx.records.end(), std::make_move_iterator(dups.begin()),
                    std::make_move_iterator(dups.end()));
  return fx;
}

}  // namespace campo::testing

#endif  // CAMPO_TESTS_SUPPORT_ORACLES_HPP_
