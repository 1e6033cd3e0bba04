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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tonetier {

enum class ErrorCode {
  unknown_symbol,
  empty_syllable,
  misplaced_tone,
  category_mismatch,
  no_candidate,
  more_than_one_voice_mark,
  too_short,
  non_finite_sample,
  negative_frequency,
  length_mismatch,
  unknown_template,
  too_large,
  input_too_short,
  dim_mismatch,
  data_empty,
  missing_head,
  unresolvable,
  missing_tier,
  spec_invalid,
  unknown_label,
  io_error,
  format_error,
  config_error,
};

std::string_view to_string(ErrorCode code);

// All failures raised by the library carry a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace tonetier
