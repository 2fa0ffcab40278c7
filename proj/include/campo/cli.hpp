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

#ifndef CAMPO_CLI_HPP_
#define CAMPO_CLI_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace campo {

// Exit codes of the command-line entry point.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kMetricsSchemaVersion = "1";
inline constexpr const char* kRecordsSchemaVersion = "1";
inline constexpr const char* kManifestSchemaVersion = "1";

struct RunManifest {
  std::string command;
  std::string config_hash;  // FNV-1a 64 of the canonical config JSON, hex
  unsigned long long seed = 0;
  std::string started_at;  // ISO-8601 UTC
  std::string finished_at;
  std::vector<std::string> artifacts;
};

std::string fnv1a_hex(const std::string& bytes);

// Written to a temporary sibling and renamed into place.
void write_manifest(const std::string& path, const RunManifest& manifest);

// Runs one subcommand (curate, verify, train, eval, report).
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace campo

#endif  // CAMPO_CLI_HPP_
