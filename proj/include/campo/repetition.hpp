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

#ifndef CAMPO_REPETITION_HPP_
#define CAMPO_REPETITION_HPP_

#include <cstddef>
#include <optional>
#include <span>

#include "campo/policy.hpp"

namespace campo {

// A trailing loop: tokens[start..] is periodic with `period`, holding
// `repeats` full copies of the block and possibly a partial final copy.
struct LoopSpan {
  std::size_t start = 0;
  std::size_t period = 0;
  std::size_t repeats = 0;

  friend bool operator==(const LoopSpan&, const LoopSpan&) = default;
};

struct LoopOptions {
  std::size_t min_period = 1;
  std::size_t min_repeats = 3;
};

// Earliest-starting trailing loop (ties on start go to the smallest period).
std::optional<LoopSpan> detect_loop(std::span<const TokenId> tokens,
                                    const LoopOptions& opts = {});

// Fraction of the sequence covered by the detected loop, in [0, 1].
double repetition_score(std::span<const TokenId> tokens,
                        const LoopOptions& opts = {});

}  // namespace campo

#endif  // CAMPO_REPETITION_HPP_
