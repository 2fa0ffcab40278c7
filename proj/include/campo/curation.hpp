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

#ifndef CAMPO_CURATION_HPP_
#define CAMPO_CURATION_HPP_

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "campo/random.hpp"

namespace campo {

struct ProblemRecord {
  std::string id;
  std::string question;
  std::string answer;
  std::string source;
  std::optional<double> pass_rate;
  std::optional<std::string> response;
  std::optional<std::size_t> response_len;

  friend bool operator==(const ProblemRecord&, const ProblemRecord&) = default;
};

// Output of one filter: kept and excluded partition the input, both in input
// order.
struct FilterResult {
  std::vector<ProblemRecord> kept;
  std::vector<ProblemRecord> excluded;
};

struct StageCount {
  std::string stage;
  std::size_t input = 0;
  std::size_t excluded = 0;
  std::size_t passthrough = 0;  // difficulty stage: records without pass_rate
};

struct FunnelReport {
  std::vector<StageCount> stages;
  std::size_t final_count = 0;

  bool telescopes() const;
  std::string table() const;
};

struct CurationConfig {
  std::size_t ngram = 10;
  double jaccard_threshold = 0.5;
  std::size_t max_answer_chars = 20;
  double max_non_ascii_ratio = 0.3;
  std::vector<std::string> eval_questions;
};

// Lowercased, trimmed, whitespace-collapsed question text.
std::string normalize_question(const std::string& question);

// Word n-grams of a normalized question; texts shorter than n contribute
// their whole word sequence as a single gram.
std::vector<std::string> word_ngrams(const std::string& text, std::size_t n);

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b);

FilterResult style_filter(const std::vector<ProblemRecord>& records,
                          double max_non_ascii_ratio = 0.3);
FilterResult exact_dedup(const std::vector<ProblemRecord>& records);
FilterResult ngram_dedup(const std::vector<ProblemRecord>& records, std::size_t n = 10,
                         double jaccard_threshold = 0.5);
FilterResult decontaminate(const std::vector<ProblemRecord>& records,
                           const std::vector<std::string>& eval_questions, std::size_t n = 10);
// Records without a pass rate pass through; see `passthrough` in the report.
FilterResult difficulty_filter(const std::vector<ProblemRecord>& records);
FilterResult answer_length_filter(const std::vector<ProblemRecord>& records,
                                  std::size_t max_chars = 20);

// Produces one attempt for a record: the response text and whether it hit
// the length cap.
struct Attempt {
  std::string response;
  bool truncated = false;
};
using Roller = std::function<Attempt(const ProblemRecord&, int attempt, Rng&)>;

std::vector<ProblemRecord> estimate_pass_rate(std::vector<ProblemRecord> records,
                                              const Roller& roller, int attempts, Rng& rng);

std::vector<ProblemRecord> select_longest(const std::vector<ProblemRecord>& records,
                                          std::size_t k);

std::pair<std::vector<ProblemRecord>, FunnelReport> run_pipeline(
    const std::vector<ProblemRecord>& records, const CurationConfig& config);

// JSON-lines I/O. Unknown fields are ignored on read.
std::vector<ProblemRecord> read_records(const std::string& path);
void write_records(const std::string& path, const std::vector<ProblemRecord>& records);
std::vector<std::string> read_eval_questions(const std::string& path);
std::string report_json(const FunnelReport& report);

}  // namespace campo

#endif  // CAMPO_CURATION_HPP_
