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

#ifndef CAMPO_ERRORS_HPP_
#define CAMPO_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace campo {

// An input or output path could not be opened. Carries the offending path.
class FileError : public std::runtime_error {
 public:
  FileError(const std::string& what, std::string path)
      : std::runtime_error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

// Malformed content in an otherwise readable input file.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace campo

#endif  // CAMPO_ERRORS_HPP_
