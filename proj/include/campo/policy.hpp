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

#ifndef CAMPO_POLICY_HPP_
#define CAMPO_POLICY_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "campo/random.hpp"

namespace campo {

using TokenId = std::int32_t;
using Index = Eigen::Index;

class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Token alphabet. The id `size` is reserved as the begin marker used to pad
// contexts shorter than the policy order; it is never emitted.
struct Vocab {
  int size = 2;
  TokenId eos = 1;

  TokenId begin_marker() const { return size; }

  void validate() const {
    if (size < 2) throw std::invalid_argument("vocab size must be >= 2");
    if (eos < 0 || eos >= size)
      throw std::invalid_argument("eos id must be < vocab size");
  }
};

// Fixed-width conditioning window: the last k tokens of query ++ response
// prefix, left-padded with the begin marker.
class Context {
 public:
  Context(int order, std::span<const TokenId> history, TokenId begin_marker)
      : window_(static_cast<std::size_t>(order), begin_marker) {
    if (order < 1) throw std::invalid_argument("context order must be >= 1");
    const std::size_t k = window_.size();
    const std::size_t n = history.size();
    const std::size_t take = std::min(k, n);
    for (std::size_t i = 0; i < take; ++i)
      window_[k - take + i] = history[n - take + i];
  }

  // Shift in one token, dropping the oldest.
  void push(TokenId tok) {
    for (std::size_t i = 1; i < window_.size(); ++i) window_[i - 1] = window_[i];
    window_.back() = tok;
  }

  std::span<const TokenId> window() const { return window_; }
  int order() const { return static_cast<int>(window_.size()); }

  // Polynomial rolling hash of the window.
  std::uint64_t hash() const {
    std::uint64_t h = 0;
    for (TokenId t : window_)
      h = h * kHashBase + static_cast<std::uint64_t>(t) + 1;
    return h;
  }

  static constexpr std::uint64_t kHashBase = 1000003ULL;

 private:
  std::vector<TokenId> window_;
};

// Bucketed k-gram logits table: row bucket(ctx) holds the unnormalized
// log-probabilities of the next token.
template <typename Scalar>
class PolicyTable {
 public:
  using Table =
      Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  PolicyTable(Vocab vocab, int order, Index buckets)
      : vocab_(vocab), order_(order) {
    vocab_.validate();
    if (order < 1) throw std::invalid_argument("policy order must be >= 1");
    if (buckets < 1) throw std::invalid_argument("bucket count must be >= 1");
    logits_ = Table::Zero(buckets, vocab_.size);
  }

  const Vocab& vocab() const { return vocab_; }
  int order() const { return order_; }
  Index buckets() const { return logits_.rows(); }

  Table& logits() { return logits_; }
  const Table& logits() const { return logits_; }

  Index bucket(const Context& ctx) const {
    return static_cast<Index>(ctx.hash() %
                              static_cast<std::uint64_t>(logits_.rows()));
  }

  Context context(std::span<const TokenId> history) const {
    return Context(order_, history, vocab_.begin_marker());
  }

  bool all_finite() const { return logits_.allFinite(); }

  template <typename Other>
  PolicyTable<Other> cast() const {
    PolicyTable<Other> out(vocab_, order_, buckets());
    out.logits() = logits_.template cast<Other>();
    return out;
  }

 private:
  Vocab vocab_;
  int order_;
  Table logits_;
};

using PolicyParams = PolicyTable<double>;

// Row-sparse gradient over a PolicyTable. Ordered by bucket so reductions are
// deterministic.
template <typename Scalar>
class SparseGradient {
 public:
  using Row = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  explicit SparseGradient(Index cols = 0) : cols_(cols) {}

  Row& row(Index bucket) {
    auto it = rows_.find(bucket);
    if (it == rows_.end()) it = rows_.emplace(bucket, Row::Zero(cols_)).first;
    return it->second;
  }

  const std::map<Index, Row>& rows() const { return rows_; }
  Index cols() const { return cols_; }
  bool empty() const { return rows_.empty(); }

  Scalar coeff(Index bucket, Index col) const {
    auto it = rows_.find(bucket);
    return it == rows_.end() ? Scalar(0) : it->second(col);
  }

  SparseGradient& operator*=(Scalar s) {
    for (auto& [b, r] : rows_) r *= s;
    return *this;
  }

  SparseGradient& operator+=(const SparseGradient& other) {
    for (const auto& [b, r] : other.rows_) row(b) += r;
    return *this;
  }

  Scalar squared_norm() const {
    Scalar s(0);
    for (const auto& [b, r] : rows_) s += r.squaredNorm();
    return s;
  }

  Scalar norm() const { return std::sqrt(squared_norm()); }

  typename PolicyTable<Scalar>::Table to_dense(Index buckets) const {
    typename PolicyTable<Scalar>::Table out =
        PolicyTable<Scalar>::Table::Zero(buckets, cols_);
    for (const auto& [b, r] : rows_) out.row(b) = r;
    return out;
  }

 private:
  Index cols_;
  std::map<Index, Row> rows_;
};

// params.logits.row(b) += step * grad.row(b)
template <typename Scalar>
void apply_gradient(PolicyTable<Scalar>& params,
                    const SparseGradient<Scalar>& grad, Scalar step) {
  for (const auto& [b, r] : grad.rows()) params.logits().row(b) += step * r;
}

// Numerically stable log-softmax of one logits row.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> log_softmax(
    const Eigen::MatrixBase<Derived>& row) {
  using Scalar = typename Derived::Scalar;
  if (!row.allFinite()) throw NonFiniteError("non-finite logits");
  const Scalar m = row.maxCoeff();
  const Scalar lse = m + std::log((row.array() - m).exp().sum());
  return (row.array() - lse).matrix();
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, 1, Eigen::Dynamic> softmax(
    const Eigen::MatrixBase<Derived>& row) {
  return log_softmax(row).array().exp().matrix();
}

template <typename Scalar>
void check_token(const PolicyTable<Scalar>& params, TokenId tok) {
  if (tok < 0 || tok >= params.vocab().size)
    throw std::out_of_range("token id " + std::to_string(tok) +
                            " outside vocab");
}

// log pi(tok | ctx)
template <typename Scalar>
Scalar token_logprob(const PolicyTable<Scalar>& params, const Context& ctx,
                     TokenId tok) {
  check_token(params, tok);
  return log_softmax(params.logits().row(params.bucket(ctx)))(tok);
}

// weight * d log pi(tok | ctx) / d logits, added into `grad`. The only
// touched row is bucket(ctx): onehot(tok) - softmax.
template <typename Scalar>
void accumulate_grad_token_logprob(const PolicyTable<Scalar>& params,
                                   const Context& ctx, TokenId tok,
                                   Scalar weight,
                                   SparseGradient<Scalar>& grad) {
  check_token(params, tok);
  const Index b = params.bucket(ctx);
  auto p = softmax(params.logits().row(b));
  auto& g = grad.row(b);
  g -= weight * p;
  g(tok) += weight;
}

template <typename Scalar>
SparseGradient<Scalar> grad_token_logprob(const PolicyTable<Scalar>& params,
                                          const Context& ctx, TokenId tok) {
  SparseGradient<Scalar> grad(params.vocab().size);
  accumulate_grad_token_logprob(params, ctx, tok, Scalar(1), grad);
  return grad;
}

// One sampled response. old_logprobs are log pi_old of each response token
// at temperature 1, whatever temperature the sampler used.
struct Rollout {
  std::vector<TokenId> query;
  std::vector<TokenId> response;
  std::vector<double> old_logprobs;
  bool truncated = false;

  std::size_t size() const { return response.size(); }
};

struct SamplingOptions {
  double temperature = 1.0;
  bool greedy = false;
};

// Visit every response token with its conditioning context:
// fn(const Context&, TokenId tok, std::size_t t).
template <typename Scalar, typename Fn>
void for_each_token(const PolicyTable<Scalar>& params, const Rollout& rollout,
                    Fn&& fn) {
  Context ctx = params.context(rollout.query);
  for (std::size_t t = 0; t < rollout.response.size(); ++t) {
    fn(static_cast<const Context&>(ctx), rollout.response[t], t);
    ctx.push(rollout.response[t]);
  }
}

template <typename Scalar>
Rollout sample_response(const PolicyTable<Scalar>& params,
                        std::span<const TokenId> query, int max_len,
                        const SamplingOptions& opts, Rng& rng) {
  if (max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  if (!opts.greedy && !(opts.temperature > 0.0))
    throw std::invalid_argument("temperature must be > 0");

  Rollout out;
  out.query.assign(query.begin(), query.end());
  out.response.reserve(static_cast<std::size_t>(max_len));
  out.old_logprobs.reserve(static_cast<std::size_t>(max_len));

  const TokenId eos = params.vocab().eos;
  Context ctx = params.context(query);
  bool stopped = false;
  while (static_cast<int>(out.response.size()) < max_len) {
    const auto row = params.logits().row(params.bucket(ctx));
    const auto logp = log_softmax(row);

    TokenId tok = 0;
    if (opts.greedy) {
      Index arg = 0;
      row.maxCoeff(&arg);
      tok = static_cast<TokenId>(arg);
    } else {
      const auto scaled = (opts.temperature == 1.0)
                              ? decltype(logp)(logp)
                              : log_softmax(row / Scalar(opts.temperature));
      const double u = rng.uniform();
      double acc = 0.0;
      tok = static_cast<TokenId>(scaled.size() - 1);
      for (Index w = 0; w < scaled.size(); ++w) {
        acc += std::exp(static_cast<double>(scaled(w)));
        if (u < acc) {
          tok = static_cast<TokenId>(w);
          break;
        }
      }
    }

    out.response.push_back(tok);
    out.old_logprobs.push_back(static_cast<double>(logp(tok)));
    if (tok == eos) {
      stopped = true;
      break;
    }
    ctx.push(tok);
  }
  out.truncated = !stopped;
  return out;
}

// Checkpoint I/O. Layout (little-endian): u32 format version, u32 order,
// u32 buckets, u32 vocab size, u32 eos id, then buckets * vocab float32
// logits in row-major order.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::string& path, const PolicyParams& params);
PolicyParams read_checkpoint(const std::string& path);

}  // namespace campo

#endif  // CAMPO_POLICY_HPP_
