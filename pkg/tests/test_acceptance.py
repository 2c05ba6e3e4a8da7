"""Acceptance suite. One test per acceptance criterion; the conftest hook
prints an [ACCEPTANCE] line with the outcome of each."""
import json
import os
import signal
import subprocess
import sys
import time
import urllib.request
from pathlib import Path

import numpy as np
import pytest

from q16doc import (
    BUILTIN_STOPWORDS,
    FlagReport,
    TrainConfig,
    batch_loss,
    binarize,
    chi2_cloud,
    chi2_weight,
    cross_validate,
    flag_ratio,
    init_prompts,
    kfold_split,
    load_ratings,
    load_report,
    loss_gradient,
    report_to_bytes,
    scan,
    score_batch,
    tokenize,
    train,
)
from q16doc.cli import main as cli_main
from helpers import (
    oracle_chi2,
    quick_config,
    random_oracle_texts,
    separable_store,
)

GOLDEN_DIR = Path(__file__).parent / "goldens"


def fd_gradient(X, Y, Z, logit_scale, h=1e-3):
    """Central finite differences of batch_loss over every prompt coordinate."""
    Z = np.asarray(Z, dtype=np.float64)
    grad = np.zeros_like(Z)
    for c in range(Z.shape[0]):
        for d in range(Z.shape[1]):
            plus = Z.copy()
            plus[c, d] += h
            minus = Z.copy()
            minus[c, d] -= h
            grad[c, d] = (
                batch_loss(X, Y, plus, logit_scale)
                - batch_loss(X, Y, minus, logit_scale)
            ) / (2 * h)
    return grad


def test_gradient_correctness():
    start = time.monotonic()
    rng = np.random.default_rng(7)
    worst = 0.0
    for n_classes in (2, 3):
        for dim in (2, 8, 64):
            for _ in range(20):
                X = rng.standard_normal((6, dim))
                X /= np.linalg.norm(X, axis=1, keepdims=True)
                # Unit prompt rows, matching the trained representation; near-zero
                # rows inflate finite-difference truncation error via 1/norm(z).
                Z = rng.standard_normal((n_classes, dim))
                Z /= np.linalg.norm(Z, axis=1, keepdims=True)
                labels = rng.integers(0, n_classes, size=6)
                Y = np.eye(n_classes)[labels]
                analytic = loss_gradient(X, Y, Z, 4.0)
                numeric = fd_gradient(X, Y, Z, 4.0)
                scale = max(np.abs(numeric).max(), 1e-12)
                worst = max(worst, float(np.abs(analytic - numeric).max() / scale))
    elapsed = time.monotonic() - start
    assert worst < 1e-4, f"max relative error {worst}"
    assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_synthetic_separability():
    start = time.monotonic()
    store, labeled = separable_store(n_per_class=20, d=8)
    config = quick_config(epochs=200)
    init = init_prompts("class-mean", labeled, store, seed=config.seed)
    model = train(labeled, store, config, init)
    probs = score_batch(store.vectors, model.prompts, model.config.logit_scale)
    predictions = probs.argmax(axis=1)
    train_accuracy = float((predictions == labeled.labels).mean())
    assert train_accuracy == 1.0

    metrics = cross_validate(labeled, store, quick_config(epochs=60), k=5)
    assert metrics.mean.accuracy >= 0.99
    elapsed = time.monotonic() - start
    assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_chi_squared_oracle():
    for seed in range(50):
        rng = np.random.default_rng(seed)
        flagged_texts = random_oracle_texts(rng, int(rng.integers(1, 6)))
        rest_texts = random_oracle_texts(rng, int(rng.integers(0, 8)))
        flagged = tokenize(flagged_texts)
        assert flagged.total <= 50
        cloud = chi2_cloud(flagged, tokenize(rest_texts), max_terms=10_000)
        got = {e.term: e.weight for e in cloud.entries}
        want = oracle_chi2(flagged_texts, rest_texts, BUILTIN_STOPWORDS)
        assert got == want, f"seed {seed}: weights diverge from recount"


def test_chi_squared_spot_values():
    assert chi2_weight(10, 5) == 5.0
    assert chi2_weight(7, 7) == 0.0
    assert chi2_weight(3.0, 3.0) == 0.0


def test_kfold_properties():
    from q16doc import LabeledSet

    rng = np.random.default_rng(2024)
    for _ in range(200):
        k = int(rng.integers(2, 6))
        n_per_class = [int(rng.integers(k, 30)) for _ in (0, 1)]
        labels = np.array([0] * n_per_class[0] + [1] * n_per_class[1])
        rng.shuffle(labels)
        labeled = LabeledSet(
            ids=tuple(f"s{i}" for i in range(labels.size)), labels=labels
        )
        seed = int(rng.integers(0, 2**32))
        folds = kfold_split(labeled, k=k, seed=seed)
        again = kfold_split(labeled, k=k, seed=seed)

        merged = np.sort(np.concatenate(folds))
        assert np.array_equal(merged, np.arange(labels.size))  # partition
        for a, b in zip(folds, again):
            assert np.array_equal(a, b)  # seed determinism
        for cls in (0, 1):
            counts = [int((labels[f] == cls).sum()) for f in folds]
            assert max(counts) - min(counts) <= 1  # stratification


def test_threshold_semantics(corpus):
    rated = load_ratings(corpus.ratings)
    assert ((rated.ratings > 1.5) & (rated.ratings < 2.5)).any()
    conservative = binarize(rated, neg_threshold=1.5, pos_threshold=3.5)
    default = binarize(rated, neg_threshold=2.5, pos_threshold=3.5)
    negatives_strict = {
        i for i, l in zip(conservative.ids, conservative.labels) if l == 1
    }
    negatives_loose = {i for i, l in zip(default.ids, default.labels) if l == 1}
    assert negatives_strict < negatives_loose  # strict subset


@pytest.fixture(scope="module")
def fixture_model(corpus):
    from q16doc import load_store

    store = load_store(corpus.embeddings)
    labeled = binarize(load_ratings(corpus.ratings))
    config = TrainConfig(epochs=10, seed=16)
    init = init_prompts("class-mean", labeled, store, seed=16)
    return store, train(labeled, store, config, init)


def test_scan_monotonicity_and_determinism(fixture_model):
    store, model = fixture_model
    loose = scan(store, model, decision_threshold=0.5)
    tight = scan(store, model, decision_threshold=0.7)
    assert set(tight.flagged_ids()) <= set(loose.flagged_ids())
    blobs = {report_to_bytes(scan(store, model, decision_threshold=0.5)) for _ in range(3)}
    assert len(blobs) == 1  # byte-identical


def large_scale_report(flagged_count, total_count):
    return FlagReport(
        dataset_name="reported-counts",
        total_count=total_count,
        threshold=0.5,
        model_fingerprint="none",
        flagged_count=flagged_count,
        entries=(),
    )


def test_flag_ratio_arithmetic():
    first = flag_ratio(large_scale_report(40_501, 1_331_167))
    assert abs(first - 0.03043) <= 1e-5
    second = flag_ratio(large_scale_report(43_395, 1_743_042))
    assert abs(second - 0.02490) <= 1e-5


def run_pipeline(corpus, out_root: Path) -> Path:
    """train -> eval -> scan -> document with pinned settings; returns doc dir."""
    model_path = out_root / "model.json"
    report_path = out_root / "report.ldjson"
    doc_dir = out_root / "doc"
    steps = [
        [
            "train",
            "--embeddings", str(corpus.embeddings),
            "--ratings", str(corpus.ratings),
            "--model", str(model_path),
            "--epochs", "40",
            "--seed", "16",
        ],
        [
            "eval",
            "--embeddings", str(corpus.embeddings),
            "--ratings", str(corpus.ratings),
            "--k", "5",
            "--epochs", "10",
            "--seed", "16",
            "--out-dir", str(out_root / "metrics"),
        ],
        [
            "scan",
            "--embeddings", str(corpus.embeddings),
            "--model", str(model_path),
            "--report", str(report_path),
        ],
        [
            "document",
            "--report", str(report_path),
            "--captions", str(corpus.captions),
            "--annotations", str(corpus.annotations),
            "--out-dir", str(doc_dir),
        ],
    ]
    for argv in steps:
        code = cli_main(argv)
        assert code == 0, f"{argv[0]} failed"
    return doc_dir


GOLDEN_NAMES = (
    "datasheet.md",
    "datasheet.json",
    "cloud-annotation-frequency.svg",
    "cloud-caption-frequency.svg",
    "cloud-chi-squared.svg",
)


def test_end_to_end_golden(corpus, tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("Q16_SEED", raising=False)
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    start = time.monotonic()
    doc_dir = run_pipeline(corpus, tmp_path)
    elapsed = time.monotonic() - start
    for name in GOLDEN_NAMES:
        produced = (doc_dir / name).read_bytes()
        golden = (GOLDEN_DIR / name).read_bytes()
        assert produced == golden, f"{name} diverges from the reviewed golden"
    assert elapsed < 10.0, f"took {elapsed:.2f}s"


def test_real_smid_check():
    embeddings_path = os.environ.get("Q16_SMID_EMBEDDINGS")
    ratings_path = os.environ.get("Q16_SMID_RATINGS")
    if not embeddings_path or not ratings_path:
        pytest.skip("real embeddings not supplied via Q16_SMID_EMBEDDINGS/Q16_SMID_RATINGS")
    from q16doc import load_store

    store = load_store(embeddings_path)
    labeled = binarize(load_ratings(ratings_path))
    config = TrainConfig(epochs=150, seed=16)
    metrics = cross_validate(labeled, store, config, k=10)
    assert metrics.mean.accuracy >= 0.90


def post_decision(url, image_id):
    body = json.dumps({"image_id": image_id, "verdict": "confirm-inappropriate"}).encode()
    req = urllib.request.Request(
        url + "/api/decision", data=body, headers={"Content-Type": "application/json"}
    )
    with urllib.request.urlopen(req, timeout=10) as resp:
        assert resp.status == 200
        return json.loads(resp.read())


def spawn_serve(report_path, log_path):
    proc = subprocess.Popen(
        [
            sys.executable, "-m", "q16doc.cli", "serve",
            "--report", str(report_path),
            "--decisions", str(log_path),
            "--bind", "127.0.0.1:0",
        ],
        stdout=subprocess.PIPE,
        stderr=subprocess.DEVNULL,
        text=True,
    )
    url = proc.stdout.readline().strip()
    assert url.startswith("http://"), "service did not report its URL"
    return proc, url


def test_crash_durability(fixture_model, tmp_path):
    from q16doc import save_report

    store, model = fixture_model
    report = scan(store, model, decision_threshold=0.5)
    assert report.flagged_count >= 50
    report_path = tmp_path / "report.ldjson"
    save_report(report, report_path)
    log_path = tmp_path / "decisions.ldjson"

    victims = report.flagged_ids()[:50]
    proc, url = spawn_serve(report_path, log_path)
    try:
        for image_id in victims:
            post_decision(url, image_id)  # each call returns only after the ack
    finally:
        proc.kill()  # SIGKILL: no flush-on-exit help allowed
        proc.wait(timeout=10)

    proc2, url2 = spawn_serve(report_path, log_path)
    try:
        with urllib.request.urlopen(url2 + "/api/summary", timeout=10) as resp:
            summary = json.loads(resp.read())
        assert summary["confirmed"] == 50
        partition = (
            summary["confirmed"] + summary["rejected"] + summary["unsure"] + summary["pending"]
        )
        assert partition == summary["flagged"]
        with urllib.request.urlopen(
            url2 + "/api/report?filter=confirmed&limit=500", timeout=10
        ) as resp:
            page = json.loads(resp.read())
        assert sorted(i["id"] for i in page["items"]) == sorted(victims)
    finally:
        proc2.send_signal(signal.SIGTERM)
        proc2.wait(timeout=10)
