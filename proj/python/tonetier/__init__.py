# Copyright 2026 The tonetier Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Multi-tier CTC modeling of phones and tones."""

from tonetier._core import (
    EditCounts,
    TonetierError,
    beam_decode,
    brute_force_ctc,
    ctc_loss,
    edit_distance,
    extract_f0,
    greedy_decode,
    hz_to_mel,
    log_mel,
    phones_from_joint,
    report_metrics,
    resolve_symbol,
    run_experiment,
    score,
    synth_corpus,
    tiers,
    tokenize,
    tones_from_joint,
)

__all__ = [
    "EditCounts",
    "TonetierError",
    "beam_decode",
    "brute_force_ctc",
    "ctc_loss",
    "edit_distance",
    "extract_f0",
    "greedy_decode",
    "hz_to_mel",
    "log_mel",
    "phones_from_joint",
    "report_metrics",
    "resolve_symbol",
    "run_experiment",
    "score",
    "synth_corpus",
    "tiers",
    "tokenize",
    "tones_from_joint",
]
