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

#include "campo/curation.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iomanip>
#include <regex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "campo/errors.hpp"
#include "campo/verifier.hpp"

namespace campo {

using json = nlohmann::json;

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::vector<std::string> split_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  for (std::string w; in >> w;) words.push_back(std::move(w));
  return words;
}

std::vector<std::string> gram_set(const std::string& question, std::size_t n) {
  auto grams = word_ngrams(normalize_question(question), n);
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

// Share of non-ASCII code points among non-space characters.
double non_ascii_ratio(const std::string& text) {
  std::size_t total = 0;
  std::size_t non_ascii = 0;
  for (unsigned char c : text) {
    if ((c & 0xC0) == 0x80) continue;  // UTF-8 continuation byte
    if (c < 0x80 && is_space(static_cast<char>(c))) continue;
    ++total;
    if (c >= 0x80) ++non_ascii;
  }
  return total == 0 ? 0.0 : static_cast<double>(non_ascii) / static_cast<double>(total);
}

std::size_t code_points(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

template <typename Pred>
FilterResult partition_by(const std::vector<ProblemRecord>& records, Pred&& exclude) {
  FilterResult out;
  for (const auto& r : records) (exclude(r) ? out.excluded : out.kept).push_back(r);
  return out;
}

}  // namespace

std::string normalize_question(const std::string& question) {
  std::string out;
  out.reserve(question.size());
  bool pending = false;
  for (char c : question) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> word_ngrams(const std::string& text, std::size_t n) {
  if (n == 0) throw std::invalid_argument("n-gram size must be >= 1");
  const auto words = split_words(text);
  std::vector<std::string> grams;
  if (words.empty()) return grams;
  const std::size_t len = std::min(n, words.size());
  for (std::size_t i = 0; i + len <= words.size(); ++i) {
    std::string g = words[i];
    for (std::size_t j = i + 1; j < i + len; ++j) {
      g.push_back(' ');
      g += words[j];
    }
    grams.push_back(std::move(g));
  }
  return grams;
}

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::string> sa(a), sb(b);
  std::sort(sa.begin(), sa.end());
  sa.erase(std::unique(sa.begin(), sa.end()), sa.end());
  std::sort(sb.begin(), sb.end());
  sb.erase(std::unique(sb.begin(), sb.end()), sb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::vector<std::string> common;
  std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
  const double inter = static_cast<double>(common.size());
  return inter / (static_cast<double>(sa.size() + sb.size()) - inter);
}

FilterResult style_filter(const std::vector<ProblemRecord>& records, double max_non_ascii_ratio) {
  static const std::regex proof(R"(\b(prove|show that)\b)", std::regex::icase);
  return partition_by(records, [&](const ProblemRecord& r) {
    return std::regex_search(r.question, proof) ||
           non_ascii_ratio(r.question) > max_non_ascii_ratio;
  });
}

FilterResult exact_dedup(const std::vector<ProblemRecord>& records) {
  std::unordered_set<std::string> seen;
  return partition_by(records, [&](const ProblemRecord& r) {
    return !seen.insert(normalize_question(r.question)).second;
  });
}

FilterResult ngram_dedup(const std::vector<ProblemRecord>& records, std::size_t n,
                         double jaccard_threshold) {
  if (n == 0) throw std::invalid_argument("n-gram size must be >= 1");
  // gram -> indices into `kept_grams`
  std::unordered_map<std::string, std::vector<std::size_t>> index;
  std::vector<std::vector<std::string>> kept_grams;
  FilterResult out;
  for (const auto& r : records) {
    auto grams = gram_set(r.question, n);
    std::vector<std::size_t> candidates;
    for (const auto& g : grams) {
      auto it = index.find(g);
      if (it != index.end()) candidates.insert(candidates.end(), it->second.begin(), it->second.end());
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    const bool duplicate = std::any_of(candidates.begin(), candidates.end(), [&](std::size_t c) {
      return jaccard(grams, kept_grams[c]) >= jaccard_threshold;
    });
    if (duplicate) {
      out.excluded.push_back(r);
      continue;
    }
    const std::size_t id = kept_grams.size();
    for (const auto& g : grams) index[g].push_back(id);
    kept_grams.push_back(std::move(grams));
    out.kept.push_back(r);
  }
  return out;
}

FilterResult decontaminate(const std::vector<ProblemRecord>& records,
                           const std::vector<std::string>& eval_questions, std::size_t n) {
  std::unordered_set<std::string> eval_grams;
  for (const auto& q : eval_questions)
    for (auto& g : word_ngrams(normalize_question(q), n)) eval_grams.insert(std::move(g));
  return partition_by(records, [&](const ProblemRecord& r) {
    const auto grams = word_ngrams(normalize_question(r.question), n);
    return std::any_of(grams.begin(), grams.end(),
                       [&](const std::string& g) { return eval_grams.count(g) > 0; });
  });
}

FilterResult difficulty_filter(const std::vector<ProblemRecord>& records) {
  return partition_by(records, [](const ProblemRecord& r) {
    return r.pass_rate && (*r.pass_rate <= 0.0 || *r.pass_rate >= 1.0);
  });
}

FilterResult answer_length_filter(const std::vector<ProblemRecord>& records, std::size_t max_chars) {
  return partition_by(records, [&](const ProblemRecord& r) {
    return code_points(normalize(r.answer)) > max_chars;
  });
}

std::vector<ProblemRecord> estimate_pass_rate(std::vector<ProblemRecord> records,
                                              const Roller& roller, int attempts, Rng& rng) {
  if (attempts < 1) throw std::invalid_argument("attempts must be >= 1");
  for (auto& r : records) {
    int correct = 0;
    for (int a = 0; a < attempts; ++a) {
      const Attempt at = roller(r, a, rng);
      correct += reward(extract_answer(at.response), r.answer, at.truncated) > 0.5 ? 1 : 0;
    }
    r.pass_rate = static_cast<double>(correct) / static_cast<double>(attempts);
  }
  return records;
}

std::vector<ProblemRecord> select_longest(const std::vector<ProblemRecord>& records, std::size_t k) {
  if (k > records.size()) throw std::invalid_argument("select_longest: k exceeds record count");
  for (const auto& r : records)
    if (!r.response_len) throw std::invalid_argument("select_longest: record without response_len: " + r.id);
  std::vector<ProblemRecord> sorted(records);
  std::stable_sort(sorted.begin(), sorted.end(), [](const ProblemRecord& a, const ProblemRecord& b) {
    if (*a.response_len != *b.response_len) return *a.response_len > *b.response_len;
    return a.id < b.id;
  });
  sorted.resize(k);
  return sorted;
}

std::pair<std::vector<ProblemRecord>, FunnelReport> run_pipeline(
    const std::vector<ProblemRecord>& records, const CurationConfig& config) {
  FunnelReport report;
  std::vector<ProblemRecord> current = records;
  auto step = [&](const std::string& name, const FilterResult& res, std::size_t passthrough = 0) {
    report.stages.push_back({name, current.size(), res.excluded.size(), passthrough});
    current = res.kept;
  };
  step("style", style_filter(current, config.max_non_ascii_ratio));
  step("exact_dedup", exact_dedup(current));
  step("ngram_dedup", ngram_dedup(current, config.ngram, config.jaccard_threshold));
  step("decontaminate", decontaminate(current, config.eval_questions, config.ngram));
  const auto missing = static_cast<std::size_t>(std::count_if(
      current.begin(), current.end(), [](const ProblemRecord& r) { return !r.pass_rate; }));
  step("difficulty", difficulty_filter(current), missing);
  step("answer_length", answer_length_filter(current, config.max_answer_chars));
  report.final_count = current.size();
  return {std::move(current), std::move(report)};
}

bool FunnelReport::telescopes() const {
  std::size_t prev = stages.empty() ? final_count : stages.front().input;
  for (const auto& s : stages) {
    if (s.input != prev || s.excluded > s.input) return false;
    prev = s.input - s.excluded;
  }
  return prev == final_count;
}

std::string FunnelReport::table() const {
  std::ostringstream os;
  os << std::left << std::setw(16) << "stage" << std::right << std::setw(10) << "input"
     << std::setw(10) << "excluded" << std::setw(10) << "kept" << '\n';
  for (const auto& s : stages)
    os << std::left << std::setw(16) << s.stage << std::right << std::setw(10) << s.input
       << std::setw(10) << s.excluded << std::setw(10) << (s.input - s.excluded) << '\n';
  os << std::left << std::setw(16) << "final" << std::right << std::setw(30) << final_count << '\n';
  return os.str();
}

// ----------------------------------------------------------------- JSONL I/O

namespace {

ProblemRecord record_from_json(const json& j) {
  ProblemRecord r;
  r.id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump()) : "";
  r.question = j.value("question", "");
  r.answer = j.contains("answer") ? (j["answer"].is_string() ? j["answer"].get<std::string>()
                                                             : j["answer"].dump())
                                  : "";
  r.source = j.value("source", "");
  if (j.contains("pass_rate") && !j["pass_rate"].is_null()) {
    r.pass_rate = j["pass_rate"].get<double>();
    if (*r.pass_rate < 0.0 || *r.pass_rate > 1.0)
      throw FormatError("pass_rate outside [0,1] for record " + r.id);
  }
  if (j.contains("response") && !j["response"].is_null()) r.response = j["response"].get<std::string>();
  if (j.contains("response_len") && !j["response_len"].is_null())
    r.response_len = j["response_len"].get<std::size_t>();
  if (r.question.empty()) throw FormatError("record with empty question: " + r.id);
  return r;
}

json record_to_json(const ProblemRecord& r) {
  json j;
  j["id"] = r.id;
  j["question"] = r.question;
  j["answer"] = r.answer;
  j["source"] = r.source;
  if (r.pass_rate) j["pass_rate"] = *r.pass_rate;
  if (r.response) j["response"] = *r.response;
  if (r.response_len) j["response_len"] = *r.response_len;
  return j;
}

template <typename Fn>
void for_each_json_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open input", path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    fn(j);
  }
}

}  // namespace

std::vector<ProblemRecord> read_records(const std::string& path) {
  std::vector<ProblemRecord> out;
  for_each_json_line(path, [&](const json& j) { out.push_back(record_from_json(j)); });
  return out;
}

void write_records(const std::string& path, const std::vector<ProblemRecord>& records) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FileError("cannot open output", path);
  for (const auto& r : records) os << record_to_json(r).dump() << '\n';
}

std::vector<std::string> read_eval_questions(const std::string& path) {
  std::vector<std::string> out;
  for_each_json_line(path, [&](const json& j) {
    if (j.is_string()) {
      out.push_back(j.get<std::string>());
    } else {
      out.push_back(j.value("question", j.value("problem", "")));
    }
  });
  return out;
}

std::string report_json(const FunnelReport& report) {
  json j;
  j["stages"] = json::array();
  for (const auto& s : report.stages) {
    json st{{"stage", s.stage}, {"input", s.input}, {"excluded", s.excluded},
            {"kept", s.input - s.excluded}};
    if (s.stage == "difficulty") st["passthrough"] = s.passthrough;
    j["stages"].push_back(st);
  }
  j["final"] = report.final_count;
  return j.dump(2);
}

}  // namespace campo
