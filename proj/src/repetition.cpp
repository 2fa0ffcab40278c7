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

#include "campo/repetition.hpp"

#include <stdexcept>
#include <vector>

namespace campo {
namespace {

// Border (failure) array of s: border[i] is the length of the longest proper
// border of s[0..i].
void failure_function(std::span<const TokenId> s, std::vector<std::size_t>& border) {
  border.assign(s.size(), 0);
  std::size_t k = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    while (k > 0 && s[i] != s[k]) k = border[k - 1];
    if (s[i] == s[k]) ++k;
    border[i] = k;
  }
}

}  // namespace

std::optional<LoopSpan> detect_loop(std::span<const TokenId> tokens,
                                    const LoopOptions& opts) {
  if (tokens.empty()) throw std::invalid_argument("detect_loop: empty sequence");
  const std::size_t n = tokens.size();
  const std::size_t min_period = std::max<std::size_t>(opts.min_period, 1);
  const std::size_t min_repeats = std::max<std::size_t>(opts.min_repeats, 1);

  std::vector<std::size_t> border;
  for (std::size_t start = 0; start < n; ++start) {
    const std::size_t m = n - start;
    if (m < min_period * min_repeats) break;  // shorter suffixes cannot qualify
    auto suffix = tokens.subspan(start);
    failure_function(suffix, border);
    // Periods of the suffix are exactly m - b for b on the border chain, so
    // walking the chain from the longest border yields periods in
    // increasing order.
    std::size_t b = border[m - 1];
    for (;;) {
      const std::size_t p = m - b;
      if (p >= min_period) {
        if (m / p >= min_repeats) return LoopSpan{start, p, m / p};
        break;  // larger periods only lower the repeat count
      }
      if (b == 0) break;
      b = border[b - 1];
    }
  }
  return std::nullopt;
}

double repetition_score(std::span<const TokenId> tokens, const LoopOptions& opts) {
  const auto span = detect_loop(tokens, opts);
  if (!span) return 0.0;
  return static_cast<double>(tokens.size() - span->start) /
         static_cast<double>(tokens.size());
}

}  // namespace campo
