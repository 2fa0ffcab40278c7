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

#ifndef CAMPO_VERIFIER_HPP_
#define CAMPO_VERIFIER_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace campo {

// Exact rational with 64-bit numerator/denominator, always reduced and with a
// positive denominator. Arithmetic that would overflow returns nullopt.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static std::optional<Rational> make(std::int64_t num, std::int64_t den);
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool is_integer() const { return den == 1; }

  friend bool operator==(const Rational&, const Rational&) = default;
};

std::optional<Rational> add(const Rational& a, const Rational& b);
std::optional<Rational> mul(const Rational& a, const Rational& b);
std::optional<Rational> div(const Rational& a, const Rational& b);

// Exact closed form coeff * pi^pi_power * sqrt(radicand) with a square-free
// positive radicand. Covers the answers that show up in practice (1/2,
// \pi/3, 2\sqrt{3}, ...) without a general algebra system.
struct ExactValue {
  Rational coeff;
  int pi_power = 0;
  std::int64_t radicand = 1;

  double to_double() const;
  bool is_rational() const { return pi_power == 0 && radicand == 1; }

  friend bool operator==(const ExactValue&, const ExactValue&) = default;
};

enum class AnswerKind { integer, rational, real, symbolic, tuple, set, opaque };

struct ParsedAnswer {
  AnswerKind kind = AnswerKind::opaque;
  std::optional<ExactValue> exact;  // set when the value is known exactly
  double value = 0.0;               // float view, finite for numeric kinds
  std::vector<ParsedAnswer> elements;
  bool percent = false;  // value already scaled by 1/100
  bool degree = false;
  std::optional<std::string> unit;
  std::string text;  // normalized source text

  bool numeric() const {
    return kind != AnswerKind::opaque && kind != AnswerKind::tuple &&
           kind != AnswerKind::set;
  }
  bool is_collection() const {
    return kind == AnswerKind::tuple || kind == AnswerKind::set;
  }
};

enum class Outcome { equivalent, not_equivalent, unverifiable };

struct Verdict {
  Outcome outcome = Outcome::unverifiable;
  std::optional<int> stage;  // 1-4; empty iff unverifiable

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

std::string_view to_string(Outcome o);
std::string_view to_string(AnswerKind k);

struct VerifyOptions {
  int first_stage = 1;  // stages before this are skipped
  double rel_tol = 1e-4;
  double abs_tol = 1e-9;
  std::size_t opaque_max_chars = 20;
};

std::string normalize(std::string_view raw);
ParsedAnswer parse_math(std::string_view normalized);
Verdict verify(std::string_view candidate, std::string_view gold,
               const VerifyOptions& opts = {});

// 1.0 iff not truncated and verify() says equivalent.
double reward(std::string_view response_answer, std::string_view gold,
              bool truncated);

// Content of the last \boxed{...}, else the last non-empty line.
std::string extract_answer(std::string_view response);

}  // namespace campo

#endif  // CAMPO_VERIFIER_HPP_
