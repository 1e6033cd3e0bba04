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

// TPF1 float blocks: magic "TPF1", rows (u32 LE), cols (u32 LE), then
// rows*cols IEEE-754 binary32 values, little-endian, row-major.

#pragma once

#include <cstddef>
#include <string>
#include <string_view>

#include "tonetier/types.hpp"

namespace tonetier {

std::string encode_tpf(const MatrixF& m);
std::string encode_tpf(const Matrix& m);  // values rounded to binary32

// Decodes one block starting at `offset`, which advances past it.
MatrixF decode_tpf(std::string_view bytes, std::size_t& offset);
MatrixF decode_tpf(std::string_view bytes);

void write_tpf(const std::string& path, const MatrixF& m);
void write_tpf(const std::string& path, const Matrix& m);
MatrixF read_tpf(const std::string& path);

}  // namespace tonetier
