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

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "campo/errors.hpp"
#include "campo/policy.hpp"

namespace campo {
namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
  std::array<unsigned char, 4> b{};
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b.data()), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
  std::array<unsigned char, 4> b{};
  if (!is.read(reinterpret_cast<char*>(b.data()), 4))
    throw std::runtime_error("truncated checkpoint: " + path);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(const std::string& path, const PolicyParams& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FileError("cannot open checkpoint for writing", path);
  put_u32(os, kCheckpointVersion);
  put_u32(os, static_cast<std::uint32_t>(params.order()));
  put_u32(os, static_cast<std::uint32_t>(params.buckets()));
  put_u32(os, static_cast<std::uint32_t>(params.vocab().size));
  put_u32(os, static_cast<std::uint32_t>(params.vocab().eos));
  const auto& t = params.logits();
  for (Index r = 0; r < t.rows(); ++r)
    for (Index c = 0; c < t.cols(); ++c)
      put_u32(os, std::bit_cast<std::uint32_t>(static_cast<float>(t(r, c))));
  if (!os) throw std::runtime_error("failed writing checkpoint: " + path);
}

PolicyParams read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FileError("cannot open checkpoint", path);
  const std::uint32_t version = get_u32(is, path);
  if (version != kCheckpointVersion)
    throw std::runtime_error("unsupported checkpoint version " +
                             std::to_string(version) + ": " + path);
  const auto order = static_cast<int>(get_u32(is, path));
  const auto buckets = static_cast<Index>(get_u32(is, path));
  Vocab vocab;
  vocab.size = static_cast<int>(get_u32(is, path));
  vocab.eos = static_cast<TokenId>(get_u32(is, path));
  PolicyParams params(vocab, order, buckets);
  auto& t = params.logits();
  for (Index r = 0; r < t.rows(); ++r)
    for (Index c = 0; c < t.cols(); ++c)
      t(r, c) = std::bit_cast<float>(get_u32(is, path));
  if (!params.all_finite())
    throw NonFiniteError("checkpoint contains non-finite logits: " + path);
  return params;
}

}  // namespace campo
