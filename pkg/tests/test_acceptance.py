"""Acceptance gate: one test per release criterion, each printing a PASS line.

Run with: pytest tests/test_acceptance.py -v -s
"""

import hashlib
import json
import math
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from fastapi.testclient import TestClient

from faqgate.calibration import roc_curve, youden_threshold
from faqgate.energy import PowerSample, integrate_trace, per_request
from faqgate.gate import Router
from faqgate.metrics import ConfusionMatrix, metrics, wilson_ci
from faqgate.paired import holm_adjust, mcnemar_exact
from faqgate.smalltalk import StubBackend

CLI = [sys.executable, "-m", "faqgate.cli"]


def _ok(name: str) -> None:
    print(f"\nACCEPTANCE PASS: {name}")


def test_wilson_ci_overall_accuracy():
    lo, hi = wilson_ci(393, 400, 0.95)
    assert round(lo, 3) == 0.964
    assert round(hi, 3) == 0.991
    _ok("Wilson CI for 393/400 rounds to (0.964, 0.991)")


# (model, domain, fp, fn, printed accuracy/precision/recall/specificity), n=100/100
PUBLISHED_DOMAIN_ROWS = [
    ("SBERT", "tooth", 13, 5, "0.91", "0.88", "0.95", "0.87"),
    ("SBERT", "gastro", 24, 9, "0.835", "0.791", "0.91", "0.76"),
    ("MiniLM", "tooth", 7, 10, "0.915", "0.928", "0.90", "0.93"),
    ("MiniLM", "gastro", 2, 5, "0.965", "0.979", "0.95", "0.98"),
    ("E5", "tooth", 10, 4, "0.93", "0.906", "0.96", "0.90"),
    ("E5", "gastro", 1, 6, "0.965", "0.989", "0.94", "0.99"),
    ("E5-large-instruct", "tooth", 3, 1, "0.98", "0.971", "0.99", "0.97"),
    ("E5-large-instruct", "gastro", 1, 2, "0.985", "0.99", "0.98", "0.99"),
]


def _round_matches(value: float, printed: str) -> bool:
    decimals = len(printed.split(".")[1])
    return round(value, decimals) == float(printed)


def test_published_metric_rows_reproduced():
    for model, domain, fp, fn, acc, prec, rec, spec in PUBLISHED_DOMAIN_ROWS:
        rep = metrics(ConfusionMatrix(tp=100 - fn, fn=fn, fp=fp, tn=100 - fp))
        for value, printed in [
            (rep.accuracy, acc), (rep.precision, prec),
            (rep.recall, rec), (rep.specificity, spec),
        ]:
            assert _round_matches(value, printed), (model, domain, printed, value)
        assert rep.misclassifications == fp + fn
    _ok("all published per-domain metric rows reproduced from FP/FN counts")


# the fifteen printed discordant pairs with their published Holm-adjusted p
PUBLISHED_PAIRS = [
    (18, 45, "0.007"), (12, 42, "<0.001"), (4, 48, "<0.001"), (4, 49, "<0.001"),
    (0, 51, "<0.001"), (13, 16, "1.00"), (4, 21, "0.006"), (6, 24, "0.008"),
    (0, 24, "<0.001"), (1, 15, "0.004"), (6, 21, "0.030"), (0, 21, "<0.001"),
    (6, 7, "1.00"), (0, 7, "0.06"), (0, 6, "0.09"),
]


def test_published_pairwise_table_reproduced():
    raw = [mcnemar_exact(b, c) for b, c, _ in PUBLISHED_PAIRS]
    adjusted = holm_adjust(raw)  # family of all fifteen comparisons
    for (b, c, printed), adj in zip(PUBLISHED_PAIRS, adjusted):
        if printed.startswith("<"):
            assert adj < float(printed[1:]), (b, c, adj)
        else:
            want = float(printed)
            decimals = len(printed.split(".")[1])
            assert abs(adj - want) <= 0.002 or round(adj, decimals) == want, (b, c, adj)
    # spot anchors
    anchors = {(6, 7): 1.00, (0, 7): 0.06, (0, 6): 0.09, (1, 15): 0.004, (4, 21): 0.006}
    for (b, c, _), adj in zip(PUBLISHED_PAIRS, adjusted):
        if (b, c) in anchors:
            want = anchors[(b, c)]
            assert abs(adj - want) <= 0.002 or round(adj, 2) == want
    _ok("published Holm-adjusted p column reproduced from the fifteen (b,c) pairs")


def _tail_counts(m: int) -> np.ndarray:
    """cumulative count of assignments (out of 2^m) with <= k favorable flips."""
    values = np.arange(1 << m, dtype=np.uint32)
    pop = np.zeros(values.size, dtype=np.uint8)
    for _ in range(max(m, 1)):
        pop += (values & 1).astype(np.uint8)
        values >>= 1
    hist = np.bincount(pop, minlength=m + 1)
    return np.cumsum(hist)


def test_mcnemar_exactness_and_symmetry():
    # enumeration over all 2^(b+c) equally likely discordant assignments
    for m in range(0, 21):
        cumulative = _tail_counts(m)
        for b in range(m + 1):
            c = m - b
            k = min(b, c)
            enum_p = float(min(Fraction(1), 2 * Fraction(int(cumulative[k]), 1 << m)))
            assert mcnemar_exact(b, c) == pytest.approx(enum_p, abs=1e-15), (b, c)
    for b in range(41):
        for c in range(41):
            assert mcnemar_exact(b, c) == mcnemar_exact(c, b)
    _ok("exact binomial p equals 2^m enumeration (m<=20); symmetric for b,c<=40")


def _pairwise_auc(scores, labels):
    pos = scores[labels]
    neg = scores[~labels]
    wins = (pos[:, None] > neg[None, :]).sum()
    ties = (pos[:, None] == neg[None, :]).sum()
    return (wins + 0.5 * ties) / (len(pos) * len(neg))


def _exhaustive_youden(scores, labels):
    distinct = np.unique(scores)
    mids = (distinct[:-1] + distinct[1:]) / 2 if distinct.size > 1 else np.empty(0)
    candidates = np.concatenate(([np.inf], mids, [-np.inf]))
    best_j, best_t = -2.0, None
    for t in candidates:
        pred = scores >= t
        j = (pred & labels).sum() / labels.sum() - (pred & ~labels).sum() / (~labels).sum()
        if j > best_j or (j == best_j and t < best_t):
            best_j, best_t = j, t
    return best_t, best_j


def test_auc_and_youden_against_oracles():
    rng = np.random.default_rng(2026)
    checked = 0
    while checked < 200:
        n = int(rng.integers(4, 60))
        labels = rng.random(n) < rng.uniform(0.2, 0.8)
        if labels.all() or not labels.any():
            continue
        scores = np.round(rng.normal(labels.astype(float), 0.6), 2)  # ties likely
        roc = roc_curve(scores, labels)
        assert abs(roc.auc - _pairwise_auc(scores, labels)) < 1e-12
        got_t, got_j = youden_threshold(roc)
        want_t, want_j = _exhaustive_youden(scores, labels)
        assert abs(got_j - want_j) < 1e-12
        assert got_t == want_t or abs(got_t - want_t) < 1e-12
        checked += 1
    _ok("trapezoidal AUC == pairwise-ranking oracle and Youden == exhaustive scan (200 instances)")


def test_energy_arithmetic():
    trace = [PowerSample(t=float(t), power_w=20.0) for t in range(3601)]
    assert integrate_trace(trace) == 20.0
    assert per_request(33.65, 200) == pytest.approx(168.25, abs=1e-9)
    assert per_request(0.20, 200) == pytest.approx(1.00, abs=1e-9)
    assert 168.265 / 2.226 == pytest.approx(75.6, abs=0.05)
    assert 240 / 2.226 == pytest.approx(107.8, abs=0.05)
    _ok("constant-trace integral, per-request attribution, and ratio column all reproduce")


def test_zero_generation_and_verbatim_at_scale(demo_index, demo_corpus, toy_provider,
                                               frozen_config, demo_val, demo_test):
    import random

    from faqgate.fixtures import casual_utterance, clinical_variant

    _, answers = demo_corpus
    rng = random.Random(99)
    utterances = [(text, label) for _, text, label in demo_val + demo_test]
    while len(utterances) < 1000:
        if rng.random() < 0.5:
            utterances.append((clinical_variant(rng), "clinical"))
        else:
            utterances.append((casual_utterance(rng), "casual"))
    backend = StubBackend()
    router = Router(index=demo_index, answers=answers, provider=toy_provider,
                    config=frozen_config, smalltalk_backend=backend)
    casual_decisions = 0
    for text, _ in utterances:
        decision = router.route(text)
        if decision.label == "Casual":
            casual_decisions += 1
        else:
            entry = demo_index.entry(decision.matched_entry_id)
            stored = answers.text(entry.answer_id)
            assert hashlib.sha256(decision.answer_text.encode()).digest() == \
                hashlib.sha256(stored.encode()).digest()
    assert backend.call_count == casual_decisions
    assert len(utterances) == 1000
    _ok("1,000-utterance run: generation called once per casual decision, zero for "
        "clinical; every clinical reply byte-identical")


def _run_cli(*args, check=True):
    proc = subprocess.run(CLI + [str(a) for a in args], capture_output=True, text=True)
    if check and proc.returncode != 0:
        raise AssertionError(f"cli failed ({proc.returncode}): {proc.stderr}")
    return proc


def test_end_to_end_pipeline_deterministic(tmp_path):
    fx = tmp_path / "fixtures"
    _run_cli("demo-fixtures", "--out", fx, "--seed", 7)
    for i in (1, 2):
        _run_cli("calibrate", "--faq", fx / "faq.jsonl", "--answers", fx / "answers.jsonl",
                 "--val", fx / "val.jsonl", "--out", tmp_path / f"threshold{i}.json",
                 "--report", tmp_path / f"report{i}.json",
                 "--calibrated-at", "2026-01-01T00:00:00+00:00")
        _run_cli("eval", "--test", fx / "test.jsonl", "--config", tmp_path / f"threshold{i}.json",
                 "--faq", fx / "faq.jsonl", "--answers", fx / "answers.jsonl",
                 "--out", tmp_path / f"eval{i}.json")
    assert (tmp_path / "threshold1.json").read_bytes() == (tmp_path / "threshold2.json").read_bytes()
    assert (tmp_path / "report1.json").read_bytes() == (tmp_path / "report2.json").read_bytes()
    assert (tmp_path / "eval1.json").read_bytes() == (tmp_path / "eval2.json").read_bytes()

    config = json.loads((tmp_path / "threshold1.json").read_text())
    config["frozen"] = False
    (tmp_path / "unfrozen.json").write_text(json.dumps(config))
    proc = _run_cli("eval", "--test", fx / "test.jsonl", "--config", tmp_path / "unfrozen.json",
                    "--faq", fx / "faq.jsonl", "--answers", fx / "answers.jsonl",
                    "--out", tmp_path / "refused.json", check=False)
    assert proc.returncode == 1
    assert "frozen" in proc.stderr.lower()
    _ok("fixture pipeline is byte-deterministic and eval refuses unfrozen configs")


def test_service_latency_reported_positive(demo_dir, frozen_config, tmp_path):
    from faqgate.calibration import save_config
    from faqgate.service import ServerConfig, create_app

    threshold_path = tmp_path / "threshold.json"
    save_config(frozen_config, str(threshold_path))
    cfg = ServerConfig(
        faq_path=str(demo_dir / "faq.jsonl"),
        answers_path=str(demo_dir / "answers.jsonl"),
        threshold_path=str(threshold_path),
        embedding_provider={"provider_kind": "toy_hash", "model_id": "toy-hash-demo",
                            "dim": 256},
        rate_capacity=100,
    )
    app = create_app(cfg)
    with TestClient(app) as client:
        for text in ["Will it hurt?", "The weather is nice today.",
                     "How much will it cost?"] * 10:
            assert client.post("/v1/chat", json={"session_id": "s", "text": text}).status_code == 200
        out = client.get("/v1/metrics").json()
    assert out["latency_p95_s"] is not None
    assert out["latency_p95_s"] > 0
    assert out["latency_mean_s"] > 0
    _ok(f"service p95 latency reported and positive ({out['latency_p95_s']:.6f}s)")
