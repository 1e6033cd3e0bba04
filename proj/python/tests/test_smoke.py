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
import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import pytest

import tonetier

TINY_SPEC = Path(__file__).resolve().parents[2] / "data" / "specs" / "tiny.json"


def test_tiers_of_a_vietnamese_syllable():
    t = tonetier.tiers("ma˧ʔ˥", "vie", variant=4)
    assert t["phone"] == ["m", "a"]
    assert t["tone"] == ["˧", "˥", "<boundary>"]
    assert t["voice"] == ["ʔ", "<boundary>"]
    assert tonetier.tiers("ma˨˩˦", "man")["joint"] == ["m", "a214"]


def test_tokenize_and_errors():
    assert tonetier.tokenize("ma˥.ta", "man") == [["m", "a˥"], ["t", "a"]]
    with pytest.raises(tonetier.TonetierError) as err:
        tonetier.tokenize("m@", "man")
    assert err.value.code == "UnknownSymbol"


def test_ctc_matches_enumeration_and_gradient_rows_sum_to_zero():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=(5, 3))
    loss, grad = tonetier.ctc_loss(logits, [1, 2])
    assert math.isclose(loss, tonetier.brute_force_ctc(logits, [1, 2]), rel_tol=1e-9)
    assert grad.shape == (5, 3)
    np.testing.assert_allclose(grad.sum(axis=1), 0.0, atol=1e-12)
    assert tonetier.greedy_decode(np.array([[0.0, 5.0], [0.0, 5.0], [5.0, 0.0]])) == [1]


def test_log_mel_shape():
    sr = 16000
    x = np.sin(2 * np.pi * 200 * np.arange(sr) / sr)
    feats = tonetier.log_mel(x.tolist(), sr)
    assert feats.shape == (98, 40)
    f0 = tonetier.extract_f0(x.tolist(), sr)
    assert len(f0) == 98
    assert abs(np.median([f for f in f0 if f > 0]) - 200) < 5


def test_metrics():
    c = tonetier.edit_distance(["a", "b", "c"], ["a", "c"])
    assert (c.substitutions, c.deletions, c.insertions, c.ref_length) == (0, 1, 0, 3)
    assert math.isclose(c.rate, 100 / 3)
    assert tonetier.phones_from_joint(["m", "a214"]) == ["m", "a"]
    assert "JER" not in tonetier.report_metrics(2)
    assert "VER" in tonetier.report_metrics(4)
    ref = {"joint": ["m", "a5", "t", "a3"]}
    hyp = {"joint": ["m", "a3", "k", "a3"]}
    rows = list(csv.DictReader(io.StringIO(tonetier.score([("u1", "man", ref, hyp)], 1))))
    coer = [r for r in rows if r["metric"] == "CoER" and r["language"] == "all"][0]
    assert coer["rate"] == "50.00"


def test_resolve_symbol():
    r = tonetier.resolve_symbol("uː13", "joint", {"vie": ["uː5", "uː51"], "lao": ["uː35", "k"]})
    assert r["source"] == "uː35"
    assert r["resolution"] == "joint-two-stage:exact"
    assert tonetier.resolve_symbol("a", "phone", {"x": ["a"], "y": ["a", "k"]})["contributors"] == ["x", "y"]


def test_synthetic_experiment(tmp_path):
    spec = json.loads(TINY_SPEC.read_text(encoding="utf-8"))
    n = tonetier.synth_corpus(str(tmp_path / "corpus"), 5, json.dumps(spec))
    assert n == 96
    plan = "\n".join([
        "setting=cross-lingual", "variant=2", "adapt_language=lao", "adapt_utterances=8",
        "hidden_dim=6", "fc_dim=6", "max_epochs=1", "adapt_head_epochs=1", "adapt_full_epochs=1",
        "beam_width=2",
    ])
    out = tonetier.run_experiment(str(tmp_path / "corpus" / "manifest.jsonl"), plan, str(tmp_path / "out"))
    assert "JER" not in out["report_csv"]
    assert out["audit"]
    assert (tmp_path / "out" / "mapping_audit.tsv").exists()
