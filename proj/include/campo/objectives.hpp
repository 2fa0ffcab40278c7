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

#ifndef CAMPO_OBJECTIVES_HPP_
#define CAMPO_OBJECTIVES_HPP_

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "campo/policy.hpp"
#include "campo/random.hpp"

namespace campo {

// G rollouts of one query with their outcome rewards and repetition
// penalties.
struct Group {
  std::uint64_t query_id = 0;
  std::vector<Rollout> rollouts;
  std::vector<double> rewards;
  std::vector<double> penalties;

  std::size_t size() const { return rollouts.size(); }

  void validate() const {
    if (rollouts.size() < 2) throw std::invalid_argument("group needs G >= 2 rollouts");
    if (rewards.size() != rollouts.size() || penalties.size() != rollouts.size())
      throw std::invalid_argument("group rewards/penalties length mismatch");
  }

  std::size_t num_correct() const {
    return static_cast<std::size_t>(
        std::count_if(rewards.begin(), rewards.end(), [](double r) { return r > 0.5; }));
  }
};

// Per-rollout advantage, broadcast to every token of that rollout.
struct AdvantageSet {
  Eigen::VectorXd values;
  bool degenerate = false;
};

inline constexpr double kAdvantageStdFloor = 1e-6;

// (shaped - mean) / std over the group, population std.
template <typename Derived>
AdvantageSet normalize_group(const Eigen::MatrixBase<Derived>& shaped) {
  if (shaped.size() < 2) throw std::invalid_argument("group needs G >= 2");
  AdvantageSet out;
  const double mean = shaped.mean();
  const Eigen::VectorXd centered = shaped.array() - mean;
  const double stddev = std::sqrt(centered.squaredNorm() / static_cast<double>(shaped.size()));
  if (!(stddev >= kAdvantageStdFloor)) {
    out.values = Eigen::VectorXd::Zero(shaped.size());
    out.degenerate = true;
    return out;
  }
  out.values = centered / stddev;
  return out;
}

inline AdvantageSet campo_advantage(std::span<const double> rewards,
                                    std::span<const double> penalties) {
  if (rewards.size() != penalties.size())
    throw std::invalid_argument("rewards and penalties differ in length");
  Eigen::VectorXd shaped(static_cast<Index>(rewards.size()));
  for (std::size_t i = 0; i < rewards.size(); ++i)
    shaped(static_cast<Index>(i)) = rewards[i] - penalties[i];
  return normalize_group(shaped);
}

inline AdvantageSet grpo_advantage(std::span<const double> rewards) {
  const std::vector<double> zeros(rewards.size(), 0.0);
  return campo_advantage(rewards, zeros);
}

inline AdvantageSet campo_advantage(const Group& g) {
  g.validate();
  return campo_advantage(g.rewards, g.penalties);
}

// K3 estimator of KL(pi_theta || pi_ref) with rho = pi_ref / pi_theta.
template <typename Scalar>
Scalar k3_kl(Scalar rho) {
  if (!(rho > Scalar(0))) throw std::domain_error("k3_kl: ratio must be > 0");
  return rho - std::log(rho) - Scalar(1);
}

// min(r A, clip(r, 1 - eps_low, 1 + eps_high) A)
template <typename Scalar>
Scalar clipped_token_term(Scalar ratio, Scalar adv, Scalar eps_low, Scalar eps_high) {
  const Scalar clipped = std::clamp(ratio, Scalar(1) - eps_low, Scalar(1) + eps_high);
  return std::min(ratio * adv, clipped * adv);
}

// d clipped_token_term / d ratio. Zero where the clipped branch is active.
template <typename Scalar>
Scalar clipped_token_slope(Scalar ratio, Scalar adv, Scalar eps_low, Scalar eps_high) {
  if (adv >= Scalar(0)) return ratio < Scalar(1) + eps_high ? adv : Scalar(0);
  return ratio > Scalar(1) - eps_low ? adv : Scalar(0);
}

template <typename Scalar>
struct LossAndGrad {
  Scalar objective = 0;
  SparseGradient<Scalar> grad;
  std::size_t tokens = 0;
};

namespace detail {

inline void check_batch(std::span<const Group> groups, std::span<const AdvantageSet> advantages) {
  if (groups.empty()) throw std::invalid_argument("empty batch");
  if (groups.size() != advantages.size())
    throw std::invalid_argument("one AdvantageSet per group required");
  for (std::size_t g = 0; g < groups.size(); ++g) {
    groups[g].validate();
    if (static_cast<std::size_t>(advantages[g].values.size()) != groups[g].size())
      throw std::invalid_argument("advantage count differs from group size");
  }
}

}  // namespace detail

// Token-level clipped surrogate: sum over every token of every rollout in the
// batch, divided by the total token count. Old log-probs are constants.
// Returns J and dJ/dlogits (ascent direction).
template <typename Scalar>
LossAndGrad<Scalar> campo_loss_and_grad(std::span<const Group> groups,
                                        std::span<const AdvantageSet> advantages,
                                        const PolicyTable<Scalar>& params, Scalar eps_low,
                                        Scalar eps_high) {
  detail::check_batch(groups, advantages);
  LossAndGrad<Scalar> out{Scalar(0), SparseGradient<Scalar>(params.vocab().size), 0};
  for (const auto& g : groups)
    for (const auto& r : g.rollouts) out.tokens += r.size();
  if (out.tokens == 0) throw std::invalid_argument("batch has no response tokens");
  const Scalar inv_tokens = Scalar(1) / static_cast<Scalar>(out.tokens);

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Scalar adv = static_cast<Scalar>(advantages[gi].values(static_cast<Index>(i)));
      const Rollout& ro = g.rollouts[i];
      for_each_token(params, ro, [&](const Context& ctx, TokenId tok, std::size_t t) {
        const Scalar logp = token_logprob(params, ctx, tok);
        const Scalar ratio = std::exp(logp - static_cast<Scalar>(ro.old_logprobs[t]));
        out.objective += inv_tokens * clipped_token_term(ratio, adv, eps_low, eps_high);
        const Scalar slope = clipped_token_slope(ratio, adv, eps_low, eps_high);
        if (slope != Scalar(0))
          accumulate_grad_token_logprob(params, ctx, tok, inv_tokens * slope * ratio, out.grad);
      });
    }
  }
  return out;
}

// Frozen snapshot of the policy used as the KL reference.
template <typename Scalar>
class RefModel {
 public:
  explicit RefModel(PolicyTable<Scalar> snapshot) : params_(std::move(snapshot)) {}
  const PolicyTable<Scalar>& params() const { return params_; }

 private:
  PolicyTable<Scalar> params_;
};

// Sequence-level GRPO surrogate with K3 penalty against a frozen reference:
// per-token terms averaged within a rollout, then over the G rollouts, then
// over groups.
template <typename Scalar>
LossAndGrad<Scalar> grpo_loss_and_grad(std::span<const Group> groups,
                                       std::span<const AdvantageSet> advantages,
                                       const PolicyTable<Scalar>& params,
                                       const RefModel<Scalar>& ref, Scalar beta, Scalar eps) {
  detail::check_batch(groups, advantages);
  LossAndGrad<Scalar> out{Scalar(0), SparseGradient<Scalar>(params.vocab().size), 0};
  const Scalar inv_groups = Scalar(1) / static_cast<Scalar>(groups.size());

  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    const auto& g = groups[gi];
    const Scalar inv_g = Scalar(1) / static_cast<Scalar>(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Rollout& ro = g.rollouts[i];
      if (ro.size() == 0) continue;
      out.tokens += ro.size();
      const Scalar w = inv_groups * inv_g / static_cast<Scalar>(ro.size());
      const Scalar adv = static_cast<Scalar>(advantages[gi].values(static_cast<Index>(i)));
      for_each_token(params, ro, [&](const Context& ctx, TokenId tok, std::size_t t) {
        const Scalar logp = token_logprob(params, ctx, tok);
        const Scalar ratio = std::exp(logp - static_cast<Scalar>(ro.old_logprobs[t]));
        Scalar term = clipped_token_term(ratio, adv, eps, eps);
        // d/dlogp of the term
        Scalar dterm = clipped_token_slope(ratio, adv, eps, eps) * ratio;
        if (beta != Scalar(0)) {
          const Scalar rho = std::exp(token_logprob(ref.params(), ctx, tok) - logp);
          term -= beta * k3_kl(rho);
          // d k3 / d logp = 1 - rho
          dterm -= beta * (Scalar(1) - rho);
        }
        out.objective += w * term;
        if (dterm != Scalar(0)) accumulate_grad_token_logprob(params, ctx, tok, w * dterm, out.grad);
      });
    }
  }
  return out;
}

// Keeps groups whose correct count is strictly between 0 and G.
inline std::vector<Group> dynamic_filter(std::vector<Group> groups) {
  std::erase_if(groups, [](const Group& g) {
    const std::size_t c = g.num_correct();
    return c == 0 || c == g.size();
  });
  return groups;
}

inline bool has_mixed_correctness(const Group& g) {
  const std::size_t c = g.num_correct();
  return c > 0 && c < g.size();
}

// A clip ratio given as a point value or a uniform interval [lo, hi].
struct ClipSpec {
  double lo = 0.2;
  double hi = 0.2;

  static ClipSpec point(double v) { return {v, v}; }
  static ClipSpec uniform(double lo, double hi) { return {lo, hi}; }
  bool is_point() const { return lo == hi; }

  void validate() const {
    if (!(lo > 0.0 && hi < 1.0 && lo <= hi))
      throw std::invalid_argument("clip spec must satisfy 0 < lo <= hi < 1");
  }

  double sample(Rng& rng) const { return is_point() ? lo : rng.uniform(lo, hi); }
};

struct StageClip {
  ClipSpec low;
  ClipSpec high;
};

using ClipSchedule = std::vector<StageClip>;

inline std::pair<double, double> sample_clip_ratios(const ClipSchedule& schedule, std::size_t stage,
                                                    Rng& rng) {
  if (stage >= schedule.size()) throw std::out_of_range("stage outside clip schedule");
  const auto& s = schedule[stage];
  s.low.validate();
  s.high.validate();
  const double lo = s.low.sample(rng);
  const double hi = s.high.sample(rng);
  return {lo, hi};
}

}  // namespace campo

#endif  // CAMPO_OBJECTIVES_HPP_
