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

#include "campo/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "campo/curation.hpp"
#include "campo/errors.hpp"
#include "campo/policy.hpp"
#include "campo/trainer.hpp"
#include "campo/verifier.hpp"

namespace campo {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

void write_manifest(const std::string& path, const RunManifest& m) {
  json j{{"schema_version", kManifestSchemaVersion},
         {"command", m.command},
         {"config_hash", m.config_hash},
         {"seed", m.seed},
         {"started_at", m.started_at},
         {"finished_at", m.finished_at},
         {"artifacts", m.artifacts}};
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw FileError("cannot write manifest", path);
    os << j.dump(2) << '\n';
    if (!os) throw FileError("cannot write manifest", path);
  }
  fs::rename(tmp, path);
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void require_file(const std::string& path) {
  if (!fs::is_regular_file(path)) throw FileError("no such file", path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileError("cannot open input", path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Common {
  unsigned long long seed = 0;
  bool seed_given = false;
  std::string manifest;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--seed", c.seed, "Seed for every random draw of the run")
      ->each([&c](const std::string&) { c.seed_given = true; });
  sub->add_option("--manifest", c.manifest, "Where to write the run manifest");
}

// --------------------------------------------------------------- commands

int run_verify(const std::string& gold, const std::string& pred, const std::string& pairs,
               const std::string& out_path, const Common& common, std::ostream& out,
               RunManifest& manifest) {
  if (pairs.empty()) {
    const Verdict v = verify(pred, gold);
    json j{{"gold", gold}, {"pred", pred}, {"outcome", to_string(v.outcome)}};
    j["stage"] = v.stage ? json(*v.stage) : json(nullptr);
    out << j.dump() << '\n';
    manifest.config_hash = fnv1a_hex(json{{"gold", gold}, {"pred", pred}}.dump());
    return v.outcome == Outcome::equivalent ? kExitOk : kExitDomainFailure;
  }
  require_file(pairs);
  std::ifstream in(pairs);
  std::ofstream file;
  std::ostream* sink = &out;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::trunc);
    if (!file) throw FileError("cannot open output", out_path);
    sink = &file;
    manifest.artifacts.push_back(out_path);
  }
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
      const Verdict v = verify(j.at("pred").get<std::string>(), j.at("gold").get<std::string>());
      j["outcome"] = to_string(v.outcome);
      j["stage"] = v.stage ? json(*v.stage) : json(nullptr);
    } catch (const json::exception& e) {
      throw FormatError(pairs + ":" + std::to_string(lineno) + ": " + e.what());
    }
    *sink << j.dump() << '\n';
  }
  manifest.config_hash = fnv1a_hex(read_text(pairs));
  (void)common;
  return kExitOk;
}

int run_curate(const std::string& in_path, const std::string& out_path,
               const std::vector<std::string>& eval_sets, const std::string& report_path,
               const CurationConfig& base, std::ostream& out, RunManifest& manifest) {
  require_file(in_path);
  for (const auto& e : eval_sets) require_file(e);
  CurationConfig config = base;
  for (const auto& e : eval_sets) {
    auto qs = read_eval_questions(e);
    config.eval_questions.insert(config.eval_questions.end(), qs.begin(), qs.end());
  }
  const auto records = read_records(in_path);
  const auto [kept, report] = run_pipeline(records, config);
  write_records(out_path, kept);
  manifest.artifacts.push_back(out_path);
  if (!report_path.empty()) {
    std::ofstream os(report_path, std::ios::trunc);
    if (!os) throw FileError("cannot open output", report_path);
    os << report_json(report) << '\n';
    manifest.artifacts.push_back(report_path);
  }
  out << report.table();
  manifest.config_hash = fnv1a_hex(json{{"ngram", config.ngram},
                                        {"jaccard", config.jaccard_threshold},
                                        {"max_answer_chars", config.max_answer_chars},
                                        {"eval_questions", config.eval_questions}}
                                       .dump());
  return kExitOk;
}

int run_train(const std::string& config_path, const std::string& out_dir, const Common& common,
              int jobs, std::ostream& out, RunManifest& manifest) {
  require_file(config_path);
  TrainConfig config = config_from_json(read_text(config_path));
  if (common.seed_given) config.seed = common.seed;
  if (jobs > 0) config.jobs = jobs;
  manifest.seed = config.seed;
  manifest.config_hash = fnv1a_hex(config_to_json(config));

  fs::create_directories(out_dir);
  const std::string metrics_path = (fs::path(out_dir) / "metrics.jsonl").string();
  std::ofstream metrics(metrics_path, std::ios::trunc);
  if (!metrics) throw FileError("cannot open output", metrics_path);
  {
    const std::string resolved = (fs::path(out_dir) / "config.json").string();
    std::ofstream os(resolved, std::ios::trunc);
    os << json::parse(config_to_json(config)).dump(2) << '\n';
    manifest.artifacts.push_back(resolved);
  }
  manifest.artifacts.push_back(metrics_path);

  TrainHooks hooks;
  hooks.on_step = [&](const MetricsRecord& m) { metrics << metrics_to_json(m) << '\n'; };
  hooks.on_stage_end = [&](int stage, const PolicyParams& p) {
    const std::string ckpt = (fs::path(out_dir) / ("stage_" + std::to_string(stage) + ".ckpt")).string();
    write_checkpoint(ckpt, p);
    manifest.artifacts.push_back(ckpt);
  };
  const TrainResult result = train(config, hooks);
  const std::string final_ckpt = (fs::path(out_dir) / "final.ckpt").string();
  write_checkpoint(final_ckpt, result.policy);
  manifest.artifacts.push_back(final_ckpt);
  out << "trained " << result.metrics.size() << " steps; checkpoint " << final_ckpt << '\n';
  return kExitOk;
}

int run_eval(const std::string& ckpt, const TaskSpec& spec, const EvalOptions& opts,
             std::ostream& out, RunManifest& manifest) {
  require_file(ckpt);
  const PolicyParams policy = read_checkpoint(ckpt);
  const double score = evaluate(policy, spec, opts);
  json j{{"avg_at_k", score},
         {"k", opts.k},
         {"tasks", opts.tasks},
         {"temperature", opts.temperature},
         {"max_len", opts.max_len},
         {"seed", opts.seed},
         {"task", to_string(spec.family)},
         {"modulus", spec.modulus}};
  out << j.dump() << '\n';
  json cfg = j;
  cfg.erase("avg_at_k");
  manifest.config_hash = fnv1a_hex(cfg.dump());
  return kExitOk;
}

int run_report(const std::string& metrics_path, const std::string& out_path, std::ostream& out,
               RunManifest& manifest) {
  require_file(metrics_path);
  std::ifstream in(metrics_path);
  std::ofstream csv(out_path, std::ios::trunc);
  if (!csv) throw FileError("cannot open output", out_path);
  csv << "step,stage,mean_response_length,mean_reward,dropped_fraction,mean_repetition,"
         "truncated_fraction,objective,grad_norm,avg_at_k\n";
  csv << std::setprecision(10);
  std::string line;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const MetricsRecord m = metrics_from_json(line);
    csv << m.step << ',' << m.stage << ',' << m.mean_response_length << ',' << m.mean_reward << ','
        << m.dropped_fraction << ',' << m.mean_repetition << ',' << m.truncated_fraction << ','
        << m.objective << ',' << m.grad_norm << ',';
    if (m.avg_at_k) csv << *m.avg_at_k;
    csv << '\n';
    ++rows;
  }
  manifest.artifacts.push_back(out_path);
  manifest.config_hash = fnv1a_hex(read_text(metrics_path));
  out << "wrote " << rows << " rows to " << out_path << '\n';
  return kExitOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"campo: staged clipped policy optimization on verifiable toy tasks"};
  app.set_version_flag("--version",
                       std::string("campo 0.1.0\ncheckpoint format ") +
                           std::to_string(kCheckpointVersion) + "\nmetrics jsonl schema " +
                           kMetricsSchemaVersion + "\nrecords jsonl schema " +
                           kRecordsSchemaVersion + "\nmanifest schema " + kManifestSchemaVersion);
  app.require_subcommand(1);

  Common common;
  RunManifest manifest;

  // curate
  std::string cur_in, cur_out, cur_report;
  std::vector<std::string> cur_eval;
  CurationConfig cur_cfg;
  auto* curate = app.add_subcommand("curate", "Filter a JSONL problem set and report the funnel");
  curate->add_option("--in", cur_in, "Input records (JSONL)")->required();
  curate->add_option("--out", cur_out, "Kept records (JSONL)")->required();
  curate->add_option("--eval-set", cur_eval, "Evaluation questions to decontaminate against (JSONL)");
  curate->add_option("--report", cur_report, "Funnel report (JSON)");
  curate->add_option("--ngram", cur_cfg.ngram, "Word n-gram size")->check(CLI::PositiveNumber);
  curate->add_option("--jaccard", cur_cfg.jaccard_threshold, "Near-duplicate Jaccard threshold")
      ->check(CLI::Range(0.0, 1.0));
  curate->add_option("--max-answer-chars", cur_cfg.max_answer_chars, "Longest accepted answer");
  add_common(curate, common);

  // verify
  std::string v_gold, v_pred, v_pairs, v_out;
  auto* verify_cmd = app.add_subcommand("verify", "Check answer equivalence");
  auto* gold_opt = verify_cmd->add_option("--gold", v_gold, "Reference answer");
  auto* pred_opt = verify_cmd->add_option("--pred", v_pred, "Candidate answer");
  auto* pairs_opt = verify_cmd->add_option("--pairs", v_pairs, "JSONL of {gold, pred}");
  verify_cmd->add_option("--out", v_out, "Where to write annotated pairs (default stdout)");
  gold_opt->needs(pred_opt);
  pred_opt->needs(gold_opt);
  pairs_opt->excludes(gold_opt)->excludes(pred_opt);
  add_common(verify_cmd, common);

  // train
  std::string t_config, t_out;
  int t_jobs = 0;
  auto* train_cmd = app.add_subcommand("train", "Multi-stage training from a JSON config");
  train_cmd->add_option("--config", t_config, "Training config (JSON)")->required();
  train_cmd->add_option("--out-dir", t_out, "Directory for metrics, checkpoints, manifest")->required();
  train_cmd->add_option("--jobs", t_jobs, "Parallel rollout workers");
  add_common(train_cmd, common);

  // eval
  std::string e_ckpt, e_task = "modular-add";
  EvalOptions e_opts;
  e_opts.k = 64;
  TaskSpec e_spec;
  auto* eval_cmd = app.add_subcommand("eval", "avg@k of a checkpoint on a seeded task set");
  eval_cmd->add_option("--ckpt", e_ckpt, "Policy checkpoint")->required();
  eval_cmd->add_option("--k", e_opts.k, "Samples per task")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--temperature", e_opts.temperature, "Sampling temperature")
      ->check(CLI::PositiveNumber);
  eval_cmd->add_option("--tasks", e_opts.tasks, "Evaluation set size")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--max-len", e_opts.max_len, "Response length cap")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--task", e_task, "modular-add | modular-mul | digit-sum");
  eval_cmd->add_option("--modulus", e_spec.modulus, "Task modulus");
  eval_cmd->add_option("--operand-max", e_spec.operand_max, "Largest operand");
  eval_cmd->add_option("--digits", e_spec.digits, "digit-sum query length");
  add_common(eval_cmd, common);

  // report
  std::string r_metrics, r_out;
  auto* report_cmd = app.add_subcommand("report", "Metrics JSONL to CSV curves");
  report_cmd->add_option("--metrics", r_metrics, "metrics.jsonl from a train run")->required();
  report_cmd->add_option("--out", r_out, "CSV output")->required();
  add_common(report_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  manifest.started_at = utc_now();
  manifest.seed = common.seed;
  std::string manifest_path = common.manifest;
  int code = kExitOk;
  try {
    if (curate->parsed()) {
      manifest.command = "curate";
      code = run_curate(cur_in, cur_out, cur_eval, cur_report, cur_cfg, out, manifest);
      if (manifest_path.empty()) manifest_path = cur_out + ".manifest.json";
    } else if (verify_cmd->parsed()) {
      manifest.command = "verify";
      if (v_pairs.empty() && gold_opt->count() == 0) {
        err << "verify: give --gold and --pred, or --pairs\n";
        return kExitUsage;
      }
      code = run_verify(v_gold, v_pred, v_pairs, v_out, common, out, manifest);
      if (manifest_path.empty() && !v_out.empty()) manifest_path = v_out + ".manifest.json";
    } else if (train_cmd->parsed()) {
      manifest.command = "train";
      code = run_train(t_config, t_out, common, t_jobs, out, manifest);
      if (manifest_path.empty()) manifest_path = (fs::path(t_out) / "manifest.json").string();
    } else if (eval_cmd->parsed()) {
      manifest.command = "eval";
      e_spec.family = task_family_from_string(e_task);
      e_opts.seed = common.seed;
      code = run_eval(e_ckpt, e_spec, e_opts, out, manifest);
      if (manifest_path.empty()) manifest_path = e_ckpt + ".eval.manifest.json";
    } else if (report_cmd->parsed()) {
      manifest.command = "report";
      code = run_report(r_metrics, r_out, out, manifest);
      if (manifest_path.empty()) manifest_path = r_out + ".manifest.json";
    }
  } catch (const FileError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const CollectAbort& e) {
    err << "aborted: " << e.what() << '\n';
    return kExitDomainFailure;
  } catch (const std::exception& e) {
    err << "failed: " << e.what() << '\n';
    return kExitDomainFailure;
  }

  manifest.finished_at = utc_now();
  if (!manifest_path.empty()) {
    try {
      write_manifest(manifest_path, manifest);
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    }
  }
  return code;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("campo");
  for (const auto& a : args) argv.push_back(a.c_str());
  return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace campo
