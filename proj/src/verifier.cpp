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

#include "campo/verifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace campo {

// ---------------------------------------------------------------- Rational

namespace {

using i128 = __int128;

std::optional<Rational> from_wide(i128 num, i128 den) {
  if (den == 0) return std::nullopt;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  i128 a = num < 0 ? -num : num;
  i128 b = den;
  while (b != 0) {
    const i128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  constexpr i128 kMax = std::numeric_limits<std::int64_t>::max();
  if (num > kMax || num < -kMax || den > kMax) return std::nullopt;
  return Rational{static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)};
}

}  // namespace

std::optional<Rational> Rational::make(std::int64_t num, std::int64_t den) {
  return from_wide(num, den);
}

std::optional<Rational> add(const Rational& a, const Rational& b) {
  return from_wide(static_cast<i128>(a.num) * b.den + static_cast<i128>(b.num) * a.den,
                   static_cast<i128>(a.den) * b.den);
}

std::optional<Rational> mul(const Rational& a, const Rational& b) {
  return from_wide(static_cast<i128>(a.num) * b.num, static_cast<i128>(a.den) * b.den);
}

std::optional<Rational> div(const Rational& a, const Rational& b) {
  if (b.num == 0) return std::nullopt;
  return from_wide(static_cast<i128>(a.num) * b.den, static_cast<i128>(a.den) * b.num);
}

// -------------------------------------------------------------- ExactValue

double ExactValue::to_double() const {
  return coeff.to_double() * std::pow(std::numbers::pi, pi_power) *
         std::sqrt(static_cast<double>(radicand));
}

namespace {

constexpr std::int64_t kMaxRadicand = 1'000'000'000'000LL;

// r = s^2 * t with t square-free; returns (s, t).
std::optional<std::pair<std::int64_t, std::int64_t>> split_square(std::int64_t r) {
  if (r <= 0 || r > kMaxRadicand) return std::nullopt;
  std::int64_t s = 1;
  std::int64_t t = r;
  for (std::int64_t p = 2; p * p <= t; ++p) {
    while (t % (p * p) == 0) {
      t /= p * p;
      s *= p;
    }
  }
  return std::make_pair(s, t);
}

std::optional<ExactValue> with_radicand(Rational coeff, int pi_power, i128 radicand) {
  if (radicand <= 0 || radicand > kMaxRadicand) return std::nullopt;
  auto st = split_square(static_cast<std::int64_t>(radicand));
  if (!st) return std::nullopt;
  auto c = mul(coeff, Rational{st->first, 1});
  if (!c) return std::nullopt;
  if (c->num == 0) return ExactValue{Rational{0, 1}, 0, 1};
  return ExactValue{*c, pi_power, st->second};
}

std::optional<ExactValue> exact_mul(const ExactValue& a, const ExactValue& b) {
  auto c = mul(a.coeff, b.coeff);
  if (!c) return std::nullopt;
  return with_radicand(*c, a.pi_power + b.pi_power,
                       static_cast<i128>(a.radicand) * b.radicand);
}

std::optional<ExactValue> exact_div(const ExactValue& a, const ExactValue& b) {
  if (b.coeff.num == 0) return std::nullopt;
  // sqrt(r1)/sqrt(r2) = sqrt(r1*r2)/r2
  auto c = div(a.coeff, b.coeff);
  if (!c) return std::nullopt;
  c = div(*c, Rational{b.radicand, 1});
  if (!c) return std::nullopt;
  return with_radicand(*c, a.pi_power - b.pi_power,
                       static_cast<i128>(a.radicand) * b.radicand);
}

std::optional<ExactValue> exact_add(const ExactValue& a, const ExactValue& b) {
  if (a.coeff.num == 0) return b;
  if (b.coeff.num == 0) return a;
  if (a.pi_power != b.pi_power || a.radicand != b.radicand) return std::nullopt;
  auto c = add(a.coeff, b.coeff);
  if (!c) return std::nullopt;
  if (c->num == 0) return ExactValue{Rational{0, 1}, 0, 1};
  return ExactValue{*c, a.pi_power, a.radicand};
}

ExactValue exact_neg(const ExactValue& a) {
  return ExactValue{Rational{-a.coeff.num, a.coeff.den}, a.pi_power, a.radicand};
}

std::optional<ExactValue> exact_sqrt(const ExactValue& a) {
  if (a.coeff.num < 0 || a.radicand != 1 || a.pi_power % 2 != 0) return std::nullopt;
  if (a.coeff.num == 0) return a;
  // sqrt(p/q) = sqrt(p*q)/q
  auto inv = Rational::make(1, a.coeff.den);
  if (!inv) return std::nullopt;
  return with_radicand(*inv, a.pi_power / 2, static_cast<i128>(a.coeff.num) * a.coeff.den);
}

std::optional<ExactValue> exact_ipow(const ExactValue& base, std::int64_t n) {
  if (n < -64 || n > 64) return std::nullopt;
  ExactValue acc{Rational{1, 1}, 0, 1};
  for (std::int64_t i = 0; i < std::abs(n); ++i) {
    auto next = exact_mul(acc, base);
    if (!next) return std::nullopt;
    acc = *next;
  }
  if (n < 0) return exact_div(ExactValue{Rational{1, 1}, 0, 1}, acc);
  return acc;
}

// Exact integer n-th root of a non-negative integer, if it exists.
std::optional<std::int64_t> int_root(std::int64_t v, std::int64_t n) {
  if (v < 0 || n < 1) return std::nullopt;
  const auto guess = static_cast<std::int64_t>(
      std::llround(std::pow(static_cast<double>(v), 1.0 / static_cast<double>(n))));
  for (std::int64_t c = std::max<std::int64_t>(0, guess - 1); c <= guess + 1; ++c) {
    i128 p = 1;
    for (std::int64_t i = 0; i < n && p <= v; ++i) p *= c;
    if (p == v) return c;
  }
  return std::nullopt;
}

// ------------------------------------------------------------ string utils

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return is_digit(c) || is_alpha(c); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }
bool ends_with(std::string_view s, std::string_view p) {
  return s.size() >= p.size() && s.substr(s.size() - p.size()) == p;
}

void replace_all(std::string& s, std::string_view from, std::string_view to) {
  if (from.empty()) return;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

// Index of the brace matching s[open] == '{', or npos.
std::size_t match_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size() && (s[i + 1] == '{' || s[i + 1] == '}')) {
      ++i;
      continue;
    }
    if (s[i] == '{') ++depth;
    if (s[i] == '}' && --depth == 0) return i;
  }
  return std::string_view::npos;
}

// Remove a LaTeX command that is not a prefix of a longer command name.
void remove_command(std::string& s, std::string_view cmd) {
  std::size_t pos = 0;
  while ((pos = s.find(cmd, pos)) != std::string::npos) {
    const std::size_t end = pos + cmd.size();
    if (end < s.size() && is_alpha(s[end])) {
      pos = end;
      continue;
    }
    s.erase(pos, cmd.size());
  }
}

// \text{abc} -> abc for the given wrapper commands.
void unwrap_commands(std::string& s, std::initializer_list<std::string_view> cmds) {
  for (auto cmd : cmds) {
    std::size_t pos = 0;
    while ((pos = s.find(cmd, pos)) != std::string::npos) {
      std::size_t open = pos + cmd.size();
      while (open < s.size() && s[open] == ' ') ++open;
      if (open >= s.size() || s[open] != '{') {
        pos += cmd.size();
        continue;
      }
      const std::size_t close = match_brace(s, open);
      if (close == std::string::npos) {
        pos += cmd.size();
        continue;
      }
      const std::string inner = s.substr(open + 1, close - open - 1);
      s.replace(pos, close - pos + 1, inner);
    }
  }
}

bool strip_outer(std::string& s) {
  std::string_view v = trim(s);
  auto take = [&](std::string_view l, std::string_view r) {
    if (v.size() >= l.size() + r.size() && starts_with(v, l) && ends_with(v, r)) {
      s = std::string(trim(v.substr(l.size(), v.size() - l.size() - r.size())));
      return true;
    }
    return false;
  };
  return take("$$", "$$") || take("$", "$") || take("\\(", "\\)") ||
         take("\\[", "\\]");
}

const std::vector<std::string_view>& unit_table() {
  static const std::vector<std::string_view> units = {"min", "cm", "mm", "km", "kg",
                                                      "m",   "g",  "s",  "h"};
  return units;
}

bool is_unit_word(std::string_view w) {
  const auto& u = unit_table();
  return std::find(u.begin(), u.end(), w) != u.end();
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_degree_word(std::string_view w) { return w == "degree" || w == "degrees"; }

// Comma thousands separators in digit groups at bracket depth 0:
// 1,000 and 12,345,678 lose their commas, (1,2) and 1,23 keep them.
std::string drop_thousands(const std::string& s) {
  auto three_digits_at = [&](std::size_t a) {
    if (a + 3 > s.size()) return false;
    for (std::size_t k = a; k < a + 3; ++k)
      if (!is_digit(s[k])) return false;
    return a + 3 == s.size() || !is_digit(s[a + 3]);
  };
  std::string out;
  out.reserve(s.size());
  int depth = 0;
  std::size_t last_removed = std::string::npos;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (c == ',' && depth == 0 && i > 0 && is_digit(s[i - 1]) && three_digits_at(i + 1)) {
      std::size_t b = i;
      while (b > 0 && is_digit(s[b - 1])) --b;
      const std::size_t run = i - b;
      const bool number_start =
          run <= 3 && (b == 0 || (s[b - 1] != '.' && s[b - 1] != ','));
      const bool continues_chain = run == 3 && b > 0 && last_removed == b - 1;
      // the chain may continue only with another full group
      const std::size_t after = i + 4;
      const bool tail_ok = after >= s.size() || s[after] != ',' || three_digits_at(after + 1);
      if ((number_start || continues_chain) && tail_ok) {
        last_removed = i;
        continue;
      }
    }
    out.push_back(c);
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------- normalize

std::string normalize(std::string_view raw) {
  std::string s(trim(raw));
  while (strip_outer(s)) {
  }
  replace_all(s, "−", "-");
  replace_all(s, "\\dfrac", "\\frac");
  replace_all(s, "\\tfrac", "\\frac");
  remove_command(s, "\\displaystyle");
  remove_command(s, "\\left");
  remove_command(s, "\\right");
  unwrap_commands(s, {"\\text", "\\textbf", "\\textit", "\\mathrm", "\\mathbf", "\\mbox",
                      "\\boxed"});
  for (std::string_view sp : {"\\!"}) replace_all(s, sp, "");
  for (std::string_view sp : {"\\,", "\\;", "\\:", "\\ ", "~"}) replace_all(s, sp, " ");

  // collapse whitespace; keep a space only between two word characters
  std::string collapsed;
  collapsed.reserve(s.size());
  bool pending_space = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !collapsed.empty() && is_alnum(collapsed.back()) && is_alnum(c))
      collapsed.push_back(' ');
    pending_space = false;
    collapsed.push_back(c);
  }
  s = collapsed;

  while (!s.empty() && s.back() == '.') {
    s.pop_back();
    while (!s.empty() && is_space(s.back())) s.pop_back();
  }
  while (strip_outer(s)) {
  }

  s = drop_thousands(s);

  // case-fold unit words
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (is_alpha(s[i]) && (i == 0 || s[i - 1] != '\\')) {
      std::size_t j = i;
      while (j < s.size() && is_alpha(s[j])) ++j;
      const std::string word = s.substr(i, j - i);
      const std::string lw = lower(word);
      out += (is_unit_word(lw) || is_degree_word(lw)) ? lw : word;
      i = j;
    } else if (s[i] == '\\') {
      // copy the whole command name verbatim
      std::size_t j = i + 1;
      while (j < s.size() && is_alpha(s[j])) ++j;
      if (j == i + 1 && j < s.size()) ++j;
      out += s.substr(i, j - i);
      i = j;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

// ---------------------------------------------------------------- parsing

namespace {

struct Num {
  std::optional<ExactValue> exact;
  double value = 0.0;
  bool symbolic = false;
};

Num from_exact(ExactValue e, bool symbolic = false) {
  return Num{e, e.to_double(), symbolic || !e.is_rational()};
}

class ExprParser {
 public:
  explicit ExprParser(std::string_view s) : s_(s) {}

  std::optional<Num> parse_all() {
    auto v = expr();
    skip_ws();
    if (!v || pos_ != s_.size() || !std::isfinite(v->value)) return std::nullopt;
    return v;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int depth_ = 0;

  void skip_ws() {
    while (pos_ < s_.size() && is_space(s_[pos_])) ++pos_;
  }
  bool eat(std::string_view tok) {
    skip_ws();
    if (starts_with(s_.substr(pos_), tok)) {
      // commands must not be a prefix of a longer command
      if (tok.size() > 1 && tok[0] == '\\' && is_alpha(tok.back())) {
        const std::size_t end = pos_ + tok.size();
        if (end < s_.size() && is_alpha(s_[end])) return false;
      }
      pos_ += tok.size();
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  static Num add_nums(const Num& a, const Num& b, bool negate_b) {
    Num out;
    out.value = negate_b ? a.value - b.value : a.value + b.value;
    out.symbolic = a.symbolic || b.symbolic;
    if (a.exact && b.exact) out.exact = exact_add(*a.exact, negate_b ? exact_neg(*b.exact) : *b.exact);
    if (out.exact) out.value = out.exact->to_double();
    return out;
  }
  static std::optional<Num> mul_nums(const Num& a, const Num& b, bool divide) {
    Num out;
    if (divide && b.value == 0.0) return std::nullopt;
    out.value = divide ? a.value / b.value : a.value * b.value;
    out.symbolic = a.symbolic || b.symbolic;
    if (a.exact && b.exact) out.exact = divide ? exact_div(*a.exact, *b.exact) : exact_mul(*a.exact, *b.exact);
    if (out.exact) out.value = out.exact->to_double();
    return out;
  }

  std::optional<Num> expr() {
    if (++depth_ > 64) return std::nullopt;
    auto lhs = term();
    while (lhs) {
      if (eat("+")) {
        auto rhs = term();
        if (!rhs) return std::nullopt;
        lhs = add_nums(*lhs, *rhs, false);
      } else if (eat("-")) {
        auto rhs = term();
        if (!rhs) return std::nullopt;
        lhs = add_nums(*lhs, *rhs, true);
      } else {
        break;
      }
    }
    --depth_;
    return lhs;
  }

  bool starts_implicit_factor() {
    const char c = peek();
    if (c == '(' || c == '{') return true;
    const auto rest = s_.substr(pos_);
    return starts_with(rest, "\\pi") || starts_with(rest, "\\sqrt") ||
           starts_with(rest, "\\frac") || starts_with(rest, "π") ||
           starts_with(rest, "pi") || (c == 'e' && !(pos_ + 1 < s_.size() && is_alpha(s_[pos_ + 1])));
  }

  std::optional<Num> term() {
    auto lhs = unary();
    while (lhs) {
      bool divide = false;
      if (eat("*") || eat("\\cdot") || eat("\\times") || eat("×") || eat("·")) {
        divide = false;
      } else if (eat("/") || eat("\\div") || eat("÷")) {
        divide = true;
      } else if (starts_implicit_factor()) {
        divide = false;
      } else {
        break;
      }
      auto rhs = unary();
      if (!rhs) return std::nullopt;
      lhs = mul_nums(*lhs, *rhs, divide);
    }
    return lhs;
  }

  std::optional<Num> unary() {
    if (eat("-")) {
      auto v = unary();
      if (!v) return std::nullopt;
      Num out = *v;
      out.value = -out.value;
      if (out.exact) out.exact = exact_neg(*out.exact);
      return out;
    }
    if (eat("+")) return unary();
    return power();
  }

  std::optional<Num> power() {
    auto base = primary();
    if (!base) return std::nullopt;
    if (!eat("^")) return base;
    std::optional<Num> ex;
    if (peek() == '{') {
      ++pos_;
      ex = expr();
      if (!ex || !eat("}")) return std::nullopt;
    } else {
      ex = unary();  // right-associative
    }
    if (!ex) return std::nullopt;
    Num out;
    out.symbolic = base->symbolic || ex->symbolic;
    out.value = std::pow(base->value, ex->value);
    if (base->exact && ex->exact && ex->exact->is_rational()) {
      const Rational e = ex->exact->coeff;
      if (e.is_integer()) {
        out.exact = exact_ipow(*base->exact, e.num);
      } else if (e.den == 2) {
        auto root = exact_sqrt(*base->exact);
        if (root) out.exact = exact_ipow(*root, e.num);
      }
    }
    if (out.exact) out.value = out.exact->to_double();
    if (!std::isfinite(out.value)) return std::nullopt;
    return out;
  }

  // One LaTeX argument: {expr} or a single digit/char.
  std::optional<Num> argument() {
    skip_ws();
    if (peek() == '{') {
      ++pos_;
      auto v = expr();
      if (!v || !eat("}")) return std::nullopt;
      return v;
    }
    if (pos_ < s_.size() && is_digit(s_[pos_])) {
      const Rational r{s_[pos_] - '0', 1};
      ++pos_;
      return from_exact(ExactValue{r, 0, 1});
    }
    return std::nullopt;
  }

  std::optional<Num> number() {
    skip_ws();
    const std::size_t begin = pos_;
    std::string digits;
    std::int64_t frac_digits = 0;
    while (pos_ < s_.size() && is_digit(s_[pos_])) digits.push_back(s_[pos_++]);
    if (pos_ < s_.size() && s_[pos_] == '.' && pos_ + 1 < s_.size() && is_digit(s_[pos_ + 1])) {
      ++pos_;
      while (pos_ < s_.size() && is_digit(s_[pos_])) {
        digits.push_back(s_[pos_++]);
        ++frac_digits;
      }
    }
    if (digits.empty()) {
      pos_ = begin;
      return std::nullopt;
    }
    std::int64_t exp10 = 0;
    if (pos_ + 1 < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t q = pos_ + 1;
      int sign = 1;
      if (s_[q] == '+' || s_[q] == '-') {
        sign = s_[q] == '-' ? -1 : 1;
        ++q;
      }
      if (q < s_.size() && is_digit(s_[q])) {
        std::int64_t e = 0;
        while (q < s_.size() && is_digit(s_[q]) && e < 100000) e = e * 10 + (s_[q++] - '0');
        exp10 = sign * e;
        pos_ = q;
      }
    }
    const std::string text(s_.substr(begin, pos_ - begin));
    Num out;
    out.value = std::strtod(text.c_str(), nullptr);
    // exact view
    const auto first = digits.find_first_not_of('0');
    const std::string sig = first == std::string::npos ? "0" : digits.substr(first);
    const std::int64_t scale = exp10 - frac_digits;
    if (sig.size() <= 18 && scale >= -18 && scale <= 18) {
      const std::int64_t mant = std::stoll(sig);
      std::int64_t p10 = 1;
      for (std::int64_t i = 0; i < std::abs(scale); ++i) p10 *= 10;
      std::optional<Rational> r = scale >= 0 ? from_wide(static_cast<i128>(mant) * p10, 1)
                                             : Rational::make(mant, p10);
      if (r) out.exact = ExactValue{*r, 0, 1};
    }
    if (!std::isfinite(out.value)) return std::nullopt;
    return out;
  }

  std::optional<Num> primary() {
    skip_ws();
    if (pos_ >= s_.size()) return std::nullopt;
    const char c = s_[pos_];
    if (is_digit(c) || (c == '.' && pos_ + 1 < s_.size() && is_digit(s_[pos_ + 1])))
      return number();
    if (eat("(")) {
      auto v = expr();
      if (!v || !eat(")")) return std::nullopt;
      return v;
    }
    if (eat("{")) {
      auto v = expr();
      if (!v || !eat("}")) return std::nullopt;
      return v;
    }
    if (eat("\\pi") || eat("π") || eat("pi"))
      return from_exact(ExactValue{Rational{1, 1}, 1, 1}, true);
    if (eat("\\frac")) {
      auto a = argument();
      if (!a) return std::nullopt;
      auto b = argument();
      if (!b) return std::nullopt;
      return mul_nums(*a, *b, true);
    }
    if (eat("\\sqrt")) {
      std::optional<Num> index;
      if (eat("[")) {
        index = expr();
        if (!index || !eat("]")) return std::nullopt;
      }
      auto arg = argument();
      if (!arg) return std::nullopt;
      Num out;
      out.symbolic = true;
      if (!index) {
        if (arg->value < 0) return std::nullopt;
        out.value = std::sqrt(arg->value);
        if (arg->exact) out.exact = exact_sqrt(*arg->exact);
      } else {
        if (index->value <= 0) return std::nullopt;
        out.value = std::pow(arg->value, 1.0 / index->value);
        if (arg->exact && arg->exact->is_rational() && index->exact &&
            index->exact->is_rational() && index->exact->coeff.is_integer()) {
          const auto n = index->exact->coeff.num;
          const auto& q = arg->exact->coeff;
          auto rn = int_root(q.num, n);
          auto rd = int_root(q.den, n);
          if (rn && rd) {
            if (auto r = Rational::make(*rn, *rd)) out.exact = ExactValue{*r, 0, 1};
          }
        }
      }
      if (out.exact) out.value = out.exact->to_double();
      if (!std::isfinite(out.value)) return std::nullopt;
      return out;
    }
    if (c == 'e' && !(pos_ + 1 < s_.size() && is_alpha(s_[pos_ + 1]))) {
      ++pos_;
      return Num{std::nullopt, std::numbers::e, true};
    }
    return std::nullopt;
  }
};

struct Modifiers {
  bool percent = false;
  bool degree = false;
  std::optional<std::string> unit;
};

// Peel trailing modifiers (unit, percent, degree) off a scalar answer.
std::string_view peel_modifiers(std::string_view s, Modifiers& mods) {
  s = trim(s);
  // unit word
  {
    std::size_t j = s.size();
    while (j > 0 && is_alpha(s[j - 1])) --j;
    const std::string_view word = s.substr(j);
    const bool standalone = j > 0 && s[j - 1] != '\\' && !is_alpha(s[j - 1]);
    if (!word.empty() && standalone && is_unit_word(word)) {
      mods.unit = std::string(word);
      s = trim(s.substr(0, j));
    } else if (!word.empty() && standalone && is_degree_word(word)) {
      mods.degree = true;
      s = trim(s.substr(0, j));
    }
  }
  for (std::string_view pct : {"\\%", "%"}) {
    if (ends_with(s, pct)) {
      mods.percent = true;
      s = trim(s.substr(0, s.size() - pct.size()));
      break;
    }
  }
  for (std::string_view deg : {"^{\\circ}", "^\\circ", "\\circ", "\\degree", "°"}) {
    if (ends_with(s, deg)) {
      mods.degree = true;
      s = trim(s.substr(0, s.size() - deg.size()));
      break;
    }
  }
  return s;
}

ParsedAnswer opaque(std::string_view text) {
  ParsedAnswer a;
  a.kind = AnswerKind::opaque;
  a.text = std::string(text);
  return a;
}

ParsedAnswer parse_scalar(std::string_view text) {
  Modifiers mods;
  const std::string_view body = peel_modifiers(text, mods);
  if (body.empty() || (mods.percent && mods.degree)) return opaque(text);
  auto num = ExprParser(body).parse_all();
  if (!num) return opaque(text);

  ParsedAnswer a;
  a.text = std::string(text);
  a.exact = num->exact;
  a.value = num->value;
  if (mods.percent) {
    a.value /= 100.0;
    if (a.exact) a.exact = exact_div(*a.exact, ExactValue{Rational{100, 1}, 0, 1});
  }
  if (a.exact) a.value = a.exact->to_double();
  if (num->symbolic) {
    a.kind = AnswerKind::symbolic;
  } else if (a.exact && a.exact->is_rational()) {
    a.kind = a.exact->coeff.is_integer() ? AnswerKind::integer : AnswerKind::rational;
  } else {
    a.kind = AnswerKind::real;
  }
  a.percent = mods.percent;
  a.degree = mods.degree;
  a.unit = mods.unit;
  if (!std::isfinite(a.value)) return opaque(text);
  return a;
}

// Split on commas at nesting depth 0 of `s`.
std::vector<std::string_view> split_top_level(std::string_view s) {
  std::vector<std::string_view> parts;
  int depth = 0;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '(' || c == '[' || c == '{') ++depth;
    if (c == ')' || c == ']' || c == '}') --depth;
    if (c == ',' && depth == 0) {
      parts.push_back(s.substr(begin, i - begin));
      begin = i + 1;
    }
  }
  parts.push_back(s.substr(begin));
  return parts;
}

// Whether s[0] opens a group that closes exactly at s.back().
bool wraps_whole(std::string_view s, char open, char close) {
  if (s.size() < 2 || s.front() != open || s.back() != close) return false;
  int depth = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '(' || s[i] == '[' || s[i] == '{') ++depth;
    if (s[i] == ')' || s[i] == ']' || s[i] == '}') --depth;
    if (depth == 0 && i + 1 < s.size()) return false;
  }
  return depth == 0;
}

ParsedAnswer parse_collection(std::string_view text, std::string_view inner, AnswerKind kind) {
  ParsedAnswer a;
  a.kind = kind;
  a.text = std::string(text);
  for (auto part : split_top_level(inner)) {
    auto e = parse_math(trim(part));
    if (e.kind == AnswerKind::opaque) return opaque(text);
    a.elements.push_back(std::move(e));
  }
  return a;
}

}  // namespace

ParsedAnswer parse_math(std::string_view normalized) {
  const std::string_view s = trim(normalized);
  if (s.empty()) return opaque(s);

  if (starts_with(s, "\\{") && ends_with(s, "\\}") && s.size() >= 4) {
    const auto inner = s.substr(2, s.size() - 4);
    return parse_collection(s, inner, AnswerKind::set);
  }
  for (auto [open, close, kind] : {std::tuple{'(', ')', AnswerKind::tuple},
                                   std::tuple{'[', ']', AnswerKind::tuple},
                                   std::tuple{'{', '}', AnswerKind::set}}) {
    if (wraps_whole(s, open, close)) {
      const auto inner = s.substr(1, s.size() - 2);
      if (split_top_level(inner).size() > 1) return parse_collection(s, inner, kind);
    }
  }
  if (split_top_level(s).size() > 1) return parse_collection(s, s, AnswerKind::set);
  return parse_scalar(s);
}

// ------------------------------------------------------------------ verify

std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::equivalent: return "equivalent";
    case Outcome::not_equivalent: return "not_equivalent";
    case Outcome::unverifiable: return "unverifiable";
  }
  return "unverifiable";
}

std::string_view to_string(AnswerKind k) {
  switch (k) {
    case AnswerKind::integer: return "integer";
    case AnswerKind::rational: return "rational";
    case AnswerKind::real: return "real";
    case AnswerKind::symbolic: return "symbolic";
    case AnswerKind::tuple: return "tuple";
    case AnswerKind::set: return "set";
    case AnswerKind::opaque: return "opaque";
  }
  return "opaque";
}

namespace {

bool fully_numeric(const ParsedAnswer& a) {
  if (a.numeric()) return true;
  if (!a.is_collection()) return false;
  return std::all_of(a.elements.begin(), a.elements.end(), fully_numeric);
}

bool units_compatible(const ParsedAnswer& a, const ParsedAnswer& b) {
  return !(a.unit && b.unit && *a.unit != *b.unit);
}

template <typename Pred>
bool match_elements(const ParsedAnswer& a, const ParsedAnswer& b, Pred&& eq) {
  if (a.elements.size() != b.elements.size()) return false;
  if (a.kind == AnswerKind::tuple && b.kind == AnswerKind::tuple) {
    for (std::size_t i = 0; i < a.elements.size(); ++i)
      if (!eq(a.elements[i], b.elements[i])) return false;
    return true;
  }
  // set semantics: look for a perfect matching by backtracking
  std::vector<bool> used(b.elements.size(), false);
  auto assign = [&](auto&& self, std::size_t i) -> bool {
    if (i == a.elements.size()) return true;
    for (std::size_t j = 0; j < b.elements.size(); ++j) {
      if (used[j] || !eq(a.elements[i], b.elements[j])) continue;
      used[j] = true;
      if (self(self, i + 1)) return true;
      used[j] = false;
    }
    return false;
  };
  return assign(assign, 0);
}

bool exact_equal(const ParsedAnswer& a, const ParsedAnswer& b) {
  if (a.is_collection() || b.is_collection()) {
    if (!a.is_collection() || !b.is_collection() || a.kind != b.kind) return false;
    return match_elements(a, b, exact_equal);
  }
  if (!a.numeric() || !b.numeric()) return false;
  if (a.degree != b.degree || !units_compatible(a, b)) return false;
  return a.exact && b.exact && *a.exact == *b.exact;
}

struct Tolerance {
  double rel;
  double abs;
  bool close(double x, double y) const {
    return std::abs(x - y) <= std::max(abs, rel * std::max(std::abs(x), std::abs(y)));
  }
};

// Readings of a scalar under its modifiers, as the value alone would be
// compared against an unmarked counterpart.
std::vector<double> readings(const ParsedAnswer& a, const ParsedAnswer& other) {
  std::vector<double> out{a.value};
  if (a.percent && !other.percent) out.push_back(a.value * 100.0);
  if (a.degree && !other.degree) out.push_back(a.value * std::numbers::pi / 180.0);
  return out;
}

bool numeric_equal(const ParsedAnswer& a, const ParsedAnswer& b, const Tolerance& tol) {
  if (a.is_collection() || b.is_collection()) {
    if (!a.is_collection() || !b.is_collection()) return false;
    ParsedAnswer aa = a, bb = b;
    // ordered comparison only when both sides are ordered
    if (a.kind != b.kind) aa.kind = bb.kind = AnswerKind::set;
    return match_elements(aa, bb, [&](const ParsedAnswer& x, const ParsedAnswer& y) {
      return numeric_equal(x, y, tol);
    });
  }
  if (!a.numeric() || !b.numeric() || !units_compatible(a, b)) return false;
  for (double x : readings(a, b))
    for (double y : readings(b, a))
      if (tol.close(x, y)) return true;
  return false;
}

std::string loose(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (is_space(c) || c == '{' || c == '}') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

Verdict verify(std::string_view candidate, std::string_view gold, const VerifyOptions& opts) {
  const std::string nc = normalize(candidate);
  const std::string ng = normalize(gold);

  if (opts.first_stage <= 1 && !nc.empty() && nc == ng) return {Outcome::equivalent, 1};

  const ParsedAnswer pc = parse_math(nc);
  const ParsedAnswer pg = parse_math(ng);
  const bool both_structured =
      pc.kind != AnswerKind::opaque && pg.kind != AnswerKind::opaque;

  if (opts.first_stage <= 2 && both_structured && exact_equal(pc, pg))
    return {Outcome::equivalent, 2};

  if (opts.first_stage <= 3 && fully_numeric(pc) && fully_numeric(pg)) {
    if (numeric_equal(pc, pg, Tolerance{opts.rel_tol, opts.abs_tol}))
      return {Outcome::equivalent, 3};
    return {Outcome::not_equivalent, 3};
  }

  if (opts.first_stage <= 4 && pc.kind == AnswerKind::opaque &&
      pg.kind == AnswerKind::opaque && !nc.empty() && nc.size() <= opts.opaque_max_chars &&
      ng.size() <= opts.opaque_max_chars && loose(nc) == loose(ng))
    return {Outcome::equivalent, 4};

  return {Outcome::unverifiable, std::nullopt};
}

double reward(std::string_view response_answer, std::string_view gold, bool truncated) {
  if (truncated) return 0.0;
  return verify(response_answer, gold).outcome == Outcome::equivalent ? 1.0 : 0.0;
}

std::string extract_answer(std::string_view response) {
  constexpr std::string_view kBoxed = "\\boxed";
  const std::size_t pos = response.rfind(kBoxed);
  if (pos != std::string_view::npos) {
    std::size_t open = pos + kBoxed.size();
    while (open < response.size() && response[open] == ' ') ++open;
    if (open < response.size() && response[open] == '{') {
      const std::size_t close = match_brace(response, open);
      if (close != std::string_view::npos)
        return std::string(trim(response.substr(open + 1, close - open - 1)));
    }
  }
  std::string_view rest = response;
  std::string_view last;
  while (!rest.empty()) {
    const std::size_t nl = rest.find('\n');
    const std::string_view line = trim(rest.substr(0, nl));
    if (!line.empty()) last = line;
    if (nl == std::string_view::npos) break;
    rest.remove_prefix(nl + 1);
  }
  return std::string(last);
}

}  // namespace campo
