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

#include <json.hpp>

#include "campo/errors.hpp"
#include "campo/trainer.hpp"

namespace campo {

using json = nlohmann::json;

namespace {

json clip_to_json(const ClipSpec& c) {
  if (c.is_point()) return c.lo;
  return json::array({c.lo, c.hi});
}

// Either a number (point) or a two-element [lo, hi] array (uniform).
ClipSpec clip_from_json(const json& j) {
  if (j.is_number()) return ClipSpec::point(j.get<double>());
  if (j.is_array() && j.size() == 2) return ClipSpec::uniform(j[0].get<double>(), j[1].get<double>());
  if (j.is_object()) return ClipSpec::uniform(j.at("lo").get<double>(), j.at("hi").get<double>());
  throw FormatError("clip spec must be a number, [lo, hi] or {lo, hi}");
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

}  // namespace

TrainConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  TrainConfig c;
  try {
    if (j.contains("stages")) {
      for (const auto& s : j["stages"]) {
        StagePlan p;
        read_opt(s, "max_response_len", p.max_response_len);
        if (s.contains("clip_low")) p.clip_low = clip_from_json(s["clip_low"]);
        if (s.contains("clip_high")) p.clip_high = clip_from_json(s["clip_high"]);
        read_opt(s, "max_steps", p.max_steps);
        read_opt(s, "saturation_window", p.saturation_window);
        read_opt(s, "saturation_threshold", p.saturation_threshold);
        c.stages.push_back(p);
      }
    }
    read_opt(j, "group_size", c.group_size);
    read_opt(j, "batch_size", c.batch_size);
    read_opt(j, "learning_rate", c.learning_rate);
    read_opt(j, "inner_iterations", c.inner_iterations);
    read_opt(j, "temperature", c.temperature);
    read_opt(j, "seed", c.seed);
    read_opt(j, "repetition_penalty", c.repetition_penalty);
    read_opt(j, "eval_every", c.eval_every);
    read_opt(j, "eval_k", c.eval_k);
    read_opt(j, "eval_tasks", c.eval_tasks);
    read_opt(j, "jobs", c.jobs);
    if (j.contains("task")) {
      const auto& t = j["task"];
      if (t.contains("family")) c.task.family = task_family_from_string(t["family"].get<std::string>());
      read_opt(t, "modulus", c.task.modulus);
      read_opt(t, "operand_max", c.task.operand_max);
      read_opt(t, "digits", c.task.digits);
    }
    if (j.contains("init")) {
      const auto& i = j["init"];
      read_opt(i, "order", c.init.order);
      read_opt(i, "buckets", c.init.buckets);
      read_opt(i, "format_strength", c.init.format_strength);
      read_opt(i, "loop_boost", c.init.loop_boost);
    }
    if (j.contains("loop")) {
      read_opt(j["loop"], "min_period", c.loop.min_period);
      read_opt(j["loop"], "min_repeats", c.loop.min_repeats);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string config_to_json(const TrainConfig& c) {
  json j;
  j["stages"] = json::array();
  for (const auto& s : c.stages) {
    j["stages"].push_back({{"max_response_len", s.max_response_len},
                           {"clip_low", clip_to_json(s.clip_low)},
                           {"clip_high", clip_to_json(s.clip_high)},
                           {"max_steps", s.max_steps},
                           {"saturation_window", s.saturation_window},
                           {"saturation_threshold", s.saturation_threshold}});
  }
  j["group_size"] = c.group_size;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["inner_iterations"] = c.inner_iterations;
  j["temperature"] = c.temperature;
  j["seed"] = c.seed;
  j["repetition_penalty"] = c.repetition_penalty;
  j["eval_every"] = c.eval_every;
  j["eval_k"] = c.eval_k;
  j["eval_tasks"] = c.eval_tasks;
  j["task"] = {{"family", to_string(c.task.family)},
               {"modulus", c.task.modulus},
               {"operand_max", c.task.operand_max},
               {"digits", c.task.digits}};
  j["init"] = {{"order", c.init.order},
               {"buckets", c.init.buckets},
               {"format_strength", c.init.format_strength},
               {"loop_boost", c.init.loop_boost}};
  j["loop"] = {{"min_period", c.loop.min_period}, {"min_repeats", c.loop.min_repeats}};
  // jobs is a scheduling knob, not part of the experiment's identity
  return j.dump();
}

std::string metrics_to_json(const MetricsRecord& m) {
  json j{{"step", m.step},
         {"stage", m.stage},
         {"mean_response_length", m.mean_response_length},
         {"mean_reward", m.mean_reward},
         {"dropped_fraction", m.dropped_fraction},
         {"mean_repetition", m.mean_repetition},
         {"truncated_fraction", m.truncated_fraction},
         {"objective", m.objective},
         {"grad_norm", m.grad_norm},
         {"eps_low", m.eps_low},
         {"eps_high", m.eps_high},
         {"queries", m.queries}};
  if (m.avg_at_k) j["avg_at_k"] = *m.avg_at_k;
  return j.dump();
}

MetricsRecord metrics_from_json(const std::string& line) {
  MetricsRecord m;
  try {
    const json j = json::parse(line);
    m.step = j.at("step").get<int>();
    m.stage = j.at("stage").get<int>();
    m.mean_response_length = j.at("mean_response_length").get<double>();
    m.mean_reward = j.at("mean_reward").get<double>();
    read_opt(j, "dropped_fraction", m.dropped_fraction);
    read_opt(j, "mean_repetition", m.mean_repetition);
    read_opt(j, "truncated_fraction", m.truncated_fraction);
    read_opt(j, "objective", m.objective);
    read_opt(j, "grad_norm", m.grad_norm);
    read_opt(j, "eps_low", m.eps_low);
    read_opt(j, "eps_high", m.eps_high);
    read_opt(j, "queries", m.queries);
    if (j.contains("avg_at_k") && !j["avg_at_k"].is_null()) m.avg_at_k = j["avg_at_k"].get<double>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("metrics line: ") + e.what());
  }
  return m;
}

}  // namespace campo
