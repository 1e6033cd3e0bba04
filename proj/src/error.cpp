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

#include "tonetier/error.hpp"

namespace tonetier {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unknown_symbol: return "UnknownSymbol";
    case ErrorCode::empty_syllable: return "EmptySyllable";
    case ErrorCode::misplaced_tone: return "MisplacedTone";
    case ErrorCode::category_mismatch: return "CategoryMismatch";
    case ErrorCode::no_candidate: return "NoCandidate";
    case ErrorCode::more_than_one_voice_mark: return "MoreThanOneVoiceMark";
    case ErrorCode::too_short: return "TooShort";
    case ErrorCode::non_finite_sample: return "NonFiniteSample";
    case ErrorCode::negative_frequency: return "NegativeFrequency";
    case ErrorCode::length_mismatch: return "LengthMismatch";
    case ErrorCode::unknown_template: return "UnknownTemplate";
    case ErrorCode::too_large: return "TooLarge";
    case ErrorCode::input_too_short: return "InputTooShort";
    case ErrorCode::dim_mismatch: return "DimMismatch";
    case ErrorCode::data_empty: return "DataEmpty";
    case ErrorCode::missing_head: return "MissingHead";
    case ErrorCode::unresolvable: return "Unresolvable";
    case ErrorCode::missing_tier: return "MissingTier";
    case ErrorCode::spec_invalid: return "SpecInvalid";
    case ErrorCode::unknown_label: return "UnknownLabel";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::format_error: return "FormatError";
    case ErrorCode::config_error: return "ConfigError";
  }
  return "Unknown";
}

void fail(ErrorCode code, const std::string& what) {
  throw Error(code, std::string(to_string(code)) + ": " + what);
}

}  // namespace tonetier
