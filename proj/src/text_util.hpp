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

// Small text helpers shared by the config and table parsers.

#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tonetier::detail {

std::string trim(std::string_view s);

// Non-empty lines with `#` comments and surrounding whitespace removed.
std::vector<std::string> content_lines(std::string_view text);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_ws(std::string_view s);

double parse_double(std::string_view s, std::string_view what);
long long parse_int(std::string_view s, std::string_view what);

// `key = value` lines, in file order.
std::vector<std::pair<std::string, std::string>> parse_key_values(
    std::string_view text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace tonetier::detail
