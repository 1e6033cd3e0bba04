// Copyright 2026 The tonetier Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "tonetier/tpf.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <limits>

#include "text_util.hpp"
#include "tonetier/error.hpp"

namespace tonetier {

namespace {

constexpr std::string_view kMagic = "TPF1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[at + i])) << (8 * i);
  }
  return v;
}

std::uint32_t checked_dim(Eigen::Index d) {
  if (d < 0 || static_cast<std::uint64_t>(d) > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::format_error, "matrix dimension does not fit in u32");
  }
  return static_cast<std::uint32_t>(d);
}

}  // namespace

std::string encode_tpf(const MatrixF& m) {
  std::string out;
  out.reserve(12 + 4 * static_cast<std::size_t>(m.size()));
  out += kMagic;
  put_u32(out, checked_dim(m.rows()));
  put_u32(out, checked_dim(m.cols()));
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    put_u32(out, std::bit_cast<std::uint32_t>(m.data()[i]));
  }
  return out;
}

std::string encode_tpf(const Matrix& m) { return encode_tpf(MatrixF(m.cast<float>())); }

MatrixF decode_tpf(std::string_view bytes, std::size_t& offset) {
  if (bytes.size() < offset + 12 || bytes.substr(offset, 4) != kMagic) {
    fail(ErrorCode::format_error, "missing TPF1 header at byte " + std::to_string(offset));
  }
  const std::uint32_t rows = get_u32(bytes, offset + 4);
  const std::uint32_t cols = get_u32(bytes, offset + 8);
  const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
  if (bytes.size() - offset - 12 < 4 * count) {
    fail(ErrorCode::format_error, "truncated TPF1 block");
  }
  MatrixF m(rows, cols);
  std::size_t at = offset + 12;
  for (std::uint64_t i = 0; i < count; ++i, at += 4) {
    m.data()[i] = std::bit_cast<float>(get_u32(bytes, at));
  }
  offset = at;
  return m;
}

MatrixF decode_tpf(std::string_view bytes) {
  std::size_t offset = 0;
  MatrixF m = decode_tpf(bytes, offset);
  if (offset != bytes.size()) fail(ErrorCode::format_error, "trailing bytes after TPF1 block");
  return m;
}

void write_tpf(const std::string& path, const MatrixF& m) {
  detail::write_file(path, encode_tpf(m));
}

void write_tpf(const std::string& path, const Matrix& m) {
  detail::write_file(path, encode_tpf(m));
}

MatrixF read_tpf(const std::string& path) { return decode_tpf(detail::read_file(path)); }

}  // namespace tonetier
