"""Prompt tuning: rated data to binary labels, SGD training of prompt rows,
k-fold evaluation, and few-shot learning curves.

Ratings are mean human scores in [1, 5].  Low ratings mark potentially
inappropriate images (class 1), high ratings mark counterexamples (class 0),
and the middle band is excluded.  Training moves only the two prompt rows;
image embeddings stay frozen.  Every operation is deterministic given the
seed recorded in TrainConfig.
"""
from __future__ import annotations

import base64
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimMismatch,
    DuplicateId,
    EmptyClass,
    MalformedLine,
    MalformedMeta,
    MissingFile,
    RejectedValue,
    TooFewSamples,
)
from .kernels import (
    DEFAULT_LOGIT_SCALE,
    PromptEmbeddings,
    batch_loss,
    loss_gradient,
    score_batch,
)
from .store import EmbeddingStore, load_store, read_id_records

DEFAULT_SEED = 16
DEFAULT_CLASS_NAMES = ("non-inappropriate", "inappropriate")
INIT_MODES = ("provided-file", "class-mean", "random-sphere")
MODEL_FORMAT_VERSION = 1

DEFAULT_NEG_THRESHOLD = 2.5
DEFAULT_POS_THRESHOLD = 3.5


@dataclass(eq=False)
class RatedSet:
    """Per-image mean ratings on the 1..5 scale."""

    ids: tuple[str, ...]
    ratings: np.ndarray

    def __post_init__(self):
        self.ids = tuple(self.ids)
        ratings = np.asarray(self.ratings, dtype=np.float64)
        if ratings.shape != (len(self.ids),):
            raise ValueError("one rating per id required")
        if ratings.size and not np.isfinite(ratings).all():
            raise RejectedValue("non-finite rating")
        if ratings.size and (ratings.min() < 1.0 or ratings.max() > 5.0):
            raise RejectedValue("rating outside [1, 5]")
        if len(set(self.ids)) != len(self.ids):
            raise DuplicateId("duplicate id in rated set")
        ratings.setflags(write=False)
        self.ratings = ratings

    def __len__(self) -> int:
        return len(self.ids)


@dataclass(eq=False)
class LabeledSet:
    """Binary-labeled image ids: 0 = counterexample, 1 = inappropriate."""

    ids: tuple[str, ...]
    labels: np.ndarray

    def __post_init__(self):
        self.ids = tuple(self.ids)
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.shape != (len(self.ids),):
            raise ValueError("one label per id required")
        if labels.size and not np.isin(labels, (0, 1)).all():
            raise ValueError("labels must be 0 or 1")
        if len(set(self.ids)) != len(self.ids):
            raise DuplicateId("duplicate id in labeled set")
        labels.setflags(write=False)
        self.labels = labels

    def __len__(self) -> int:
        return len(self.ids)

    def class_count(self, label: int) -> int:
        return int((self.labels == label).sum())

    def subset(self, indices) -> "LabeledSet":
        indices = np.asarray(indices, dtype=np.int64)
        return LabeledSet(
            ids=tuple(self.ids[i] for i in indices), labels=self.labels[indices]
        )


def load_ratings(path) -> RatedSet:
    """Read a rated-set file: one JSON object {"id", "rating"} per line."""
    records = read_id_records(path, "rating", allow_duplicates=False)
    ids = []
    ratings = []
    for line_number, image_id, value in records:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise MalformedLine(line_number, "rating must be a number")
        ids.append(image_id)
        ratings.append(float(value))
    return RatedSet(ids=tuple(ids), ratings=np.array(ratings, dtype=np.float64))


def load_labels(path) -> LabeledSet:
    """Read a labeled-set file: one JSON object {"id", "label"} per line,
    label already binarized to 0 or 1."""
    records = read_id_records(path, "label", allow_duplicates=False)
    ids = []
    labels = []
    for line_number, image_id, value in records:
        if isinstance(value, bool) or not isinstance(value, int) or value not in (0, 1):
            raise MalformedLine(line_number, "label must be 0 or 1")
        ids.append(image_id)
        labels.append(value)
    return LabeledSet(ids=tuple(ids), labels=np.array(labels, dtype=np.int64))


def binarize(
    rated: RatedSet,
    neg_threshold: float = DEFAULT_NEG_THRESHOLD,
    pos_threshold: float = DEFAULT_POS_THRESHOLD,
) -> LabeledSet:
    """Threshold ratings into labels: < neg_threshold is class 1 (inappropriate),
    > pos_threshold is class 0, everything between is excluded.  Both
    comparisons are strict, so boundary ratings drop out."""
    if not neg_threshold < pos_threshold:
        raise ValueError(
            f"neg_threshold {neg_threshold} must be below pos_threshold {pos_threshold}"
        )
    ids = []
    labels = []
    for image_id, rating in zip(rated.ids, rated.ratings):
        if rating < neg_threshold:
            ids.append(image_id)
            labels.append(1)
        elif rating > pos_threshold:
            ids.append(image_id)
            labels.append(0)
    labeled = LabeledSet(ids=tuple(ids), labels=np.array(labels, dtype=np.int64))
    for cls in (0, 1):
        if labeled.class_count(cls) == 0:
            raise EmptyClass(f"no samples with label {cls} after thresholding")
    return labeled


def kfold_split(labeled: LabeledSet, k: int = 10, seed: int = DEFAULT_SEED):
    """Stratified split into k disjoint folds of sorted index arrays.

    Indices of each class are shuffled with the seeded generator and dealt
    into k nearly equal parts, so per-fold class counts differ from an exact
    split by at most one sample."""
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    for cls in (0, 1):
        if labeled.class_count(cls) < k:
            raise TooFewSamples(
                f"class {cls} has {labeled.class_count(cls)} samples, fewer than k={k}"
            )
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for cls in (0, 1):
        class_idx = np.flatnonzero(labeled.labels == cls)
        rng.shuffle(class_idx)
        for i, part in enumerate(np.array_split(class_idx, k)):
            folds[i].extend(part.tolist())
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    momentum: float = 0.9
    batch_size: int = 32
    epochs: int = 500
    logit_scale: float = DEFAULT_LOGIT_SCALE
    seed: int = DEFAULT_SEED
    init_mode: str = "class-mean"
    renormalize: bool = True

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.epochs < 0:
            raise ValueError("epochs must be nonnegative")
        if self.logit_scale <= 0:
            raise ValueError("logit_scale must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in unsigned 64 bits")
        if self.init_mode not in INIT_MODES:
            raise ValueError(f"init_mode must be one of {INIT_MODES}")

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "logit_scale": self.logit_scale,
            "seed": self.seed,
            "init_mode": self.init_mode,
            "renormalize": self.renormalize,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)


def init_prompts(
    mode: str,
    labeled: LabeledSet,
    store: EmbeddingStore,
    init_file=None,
    seed: int = DEFAULT_SEED,
    class_names: tuple[str, ...] = DEFAULT_CLASS_NAMES,
) -> PromptEmbeddings:
    """Build the starting prompt matrix.

    class-mean averages the training embeddings of each class, random-sphere
    draws seeded unit vectors, and provided-file loads a 2-row embedding
    container (its ids become the class names)."""
    if mode not in INIT_MODES:
        raise ValueError(f"init_mode must be one of {INIT_MODES}")
    if mode == "provided-file":
        if init_file is None:
            raise MissingFile("provided-file init needs an embedding container path")
        prompt_store = load_store(init_file)
        if len(prompt_store) != len(class_names):
            raise DimMismatch(
                f"init container has {len(prompt_store)} rows, need {len(class_names)}"
            )
        if prompt_store.dim != store.dim:
            raise DimMismatch(
                f"init dim {prompt_store.dim} does not match store dim {store.dim}"
            )
        return PromptEmbeddings(prompt_store.ids, prompt_store.vectors)
    if mode == "class-mean":
        rows = []
        X = store.rows(labeled.ids).astype(np.float64)
        for cls in range(len(class_names)):
            mask = labeled.labels == cls
            if not mask.any():
                raise EmptyClass(f"class {cls} empty, cannot take its mean")
            rows.append(X[mask].mean(axis=0))
        return PromptEmbeddings(class_names, np.array(rows, dtype=np.float32))
    rng = np.random.default_rng(seed)
    matrix = rng.standard_normal((len(class_names), store.dim))
    matrix /= np.linalg.norm(matrix, axis=1)[:, None]
    return PromptEmbeddings(class_names, matrix.astype(np.float32))


@dataclass(eq=False)
class PromptModel:
    """Tuned prompts plus everything needed to reproduce them."""

    prompts: PromptEmbeddings
    config: TrainConfig
    loss_history: tuple[float, ...] = ()
    normalized: bool = False

    @property
    def dim(self) -> int:
        return self.prompts.dim

    @property
    def class_names(self) -> tuple[str, ...]:
        return self.prompts.class_names

    def to_json_bytes(self) -> bytes:
        doc = {
            "format_version": MODEL_FORMAT_VERSION,
            "class_names": list(self.class_names),
            "dim": self.dim,
            "logit_scale": self.config.logit_scale,
            "normalized": self.normalized,
            "init_mode": self.config.init_mode,
            "train_config": self.config.to_dict(),
            "loss_history": list(self.loss_history),
            "prompt_rows": [
                base64.b64encode(row.astype("<f4").tobytes()).decode("ascii")
                for row in self.prompts.matrix
            ],
        }
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")

    @property
    def fingerprint(self) -> str:
        """Hex sha256 of the canonical model file bytes."""
        return hashlib.sha256(self.to_json_bytes()).hexdigest()


def _measure_normalized(matrix: np.ndarray, tolerance: float = 1e-3) -> bool:
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
    return bool(np.abs(norms - 1.0).max() <= tolerance)


def save_model(model: PromptModel, path) -> None:
    Path(path).write_bytes(model.to_json_bytes())


def load_model(path) -> PromptModel:
    path = Path(path)
    if not path.exists():
        raise MissingFile(f"model file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise MalformedMeta(f"model file is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedMeta("model file must hold a JSON object")
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise MalformedMeta(f"unsupported model format_version {doc.get('format_version')!r}")
    required = {"class_names", "dim", "train_config", "loss_history", "prompt_rows"}
    missing = required - doc.keys()
    if missing:
        raise MalformedMeta(f"model file missing keys: {sorted(missing)}")
    try:
        config = TrainConfig.from_dict(doc["train_config"])
    except (TypeError, ValueError) as exc:
        raise MalformedMeta(f"bad train_config: {exc}") from None
    names = doc["class_names"]
    rows_b64 = doc["prompt_rows"]
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise MalformedMeta("class_names must be a list of strings")
    if not isinstance(rows_b64, list) or len(rows_b64) != len(names):
        raise MalformedMeta("prompt_rows must match class_names in length")
    dim = doc["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise MalformedMeta(f"bad dim {dim!r}")
    rows = []
    for i, encoded in enumerate(rows_b64):
        try:
            raw = base64.b64decode(encoded, validate=True)
        except (TypeError, ValueError):
            raise MalformedMeta(f"prompt row {i} is not valid base64") from None
        row = np.frombuffer(raw, dtype="<f4")
        if row.shape[0] != dim:
            raise MalformedMeta(f"prompt row {i} has {row.shape[0]} values, expected {dim}")
        rows.append(row)
    prompts = PromptEmbeddings(tuple(names), np.array(rows, dtype=np.float32))
    return PromptModel(
        prompts=prompts,
        config=config,
        loss_history=tuple(float(v) for v in doc["loss_history"]),
        normalized=bool(doc.get("normalized", False)),
    )


def train(
    labeled: LabeledSet,
    store: EmbeddingStore,
    config: TrainConfig,
    init: PromptEmbeddings,
) -> PromptModel:
    """Minimize the batch cross-entropy with mini-batch SGD plus momentum.

    Loss history holds the full-set loss before training and after every
    epoch.  With epochs=0 the returned prompts equal the init bitwise."""
    if len(labeled) == 0:
        raise ValueError("labeled set is empty")
    for cls in (0, 1):
        if labeled.class_count(cls) == 0:
            raise EmptyClass(f"class {cls} has no training samples")
    if init.dim != store.dim:
        raise DimMismatch(f"init dim {init.dim} does not match store dim {store.dim}")
    X = store.rows(labeled.ids).astype(np.float64)
    y = labeled.labels
    Z = init.matrix.astype(np.float64)
    velocity = np.zeros_like(Z)
    rng = np.random.default_rng(config.seed)
    history = [batch_loss(X, y, Z, config.logit_scale)]
    for _ in range(config.epochs):
        order = rng.permutation(len(labeled))
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            grad = loss_gradient(X[batch], y[batch], Z, config.logit_scale)
            velocity = config.momentum * velocity - config.learning_rate * grad
            Z = Z + velocity
            if config.renormalize:
                Z = Z / np.linalg.norm(Z, axis=1)[:, None]
        history.append(batch_loss(X, y, Z, config.logit_scale))
    matrix = Z.astype(np.float32)
    return PromptModel(
        prompts=PromptEmbeddings(init.class_names, matrix),
        config=config,
        loss_history=tuple(history),
        normalized=_measure_normalized(matrix),
    )


@dataclass(frozen=True)
class MetricSummary:
    """Plain accuracy/precision/recall/f1 quadruple (used for mean and std)."""

    accuracy: float
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
        }


@dataclass(frozen=True)
class FoldMetrics(MetricSummary):
    """Metrics of one evaluation set; f1 must be the harmonic mean of
    precision and recall whenever both are nonzero."""

    def __post_init__(self):
        for name in ("accuracy", "precision", "recall", "f1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} {v} outside [0, 1]")
        if self.precision > 0 and self.recall > 0:
            harmonic = 2 * self.precision * self.recall / (self.precision + self.recall)
            if abs(self.f1 - harmonic) > 1e-6:
                raise ValueError("f1 inconsistent with precision and recall")

    @classmethod
    def from_confusion(cls, tp: int, fp: int, fn: int, tn: int) -> "FoldMetrics":
        total = tp + fp + fn + tn
        accuracy = (tp + tn) / total if total else 0.0
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (
            2 * precision * recall / (precision + recall)
            if precision + recall
            else 0.0
        )
        return cls(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


@dataclass(eq=False)
class EvalMetrics:
    """Per-fold metrics plus their mean and population standard deviation."""

    folds: tuple[FoldMetrics, ...]
    mean: MetricSummary = field(init=False)
    std: MetricSummary = field(init=False)

    def __post_init__(self):
        self.folds = tuple(self.folds)
        if not self.folds:
            raise ValueError("at least one fold required")
        table = np.array(
            [[f.accuracy, f.precision, f.recall, f.f1] for f in self.folds]
        )
        self.mean = MetricSummary(*[float(v) for v in table.mean(axis=0)])
        self.std = MetricSummary(*[float(v) for v in table.std(axis=0)])

    def to_dict(self) -> dict:
        return {
            "folds": [f.to_dict() for f in self.folds],
            "mean": self.mean.to_dict(),
            "std": self.std.to_dict(),
        }


def _confusion(pred: np.ndarray, truth: np.ndarray) -> FoldMetrics:
    tp = int(((pred == 1) & (truth == 1)).sum())
    fp = int(((pred == 1) & (truth == 0)).sum())
    fn = int(((pred == 0) & (truth == 1)).sum())
    tn = int(((pred == 0) & (truth == 0)).sum())
    return FoldMetrics.from_confusion(tp, fp, fn, tn)


def evaluate(model: PromptModel, labeled: LabeledSet, store: EmbeddingStore) -> EvalMetrics:
    """Single-set metrics; the positive class for precision/recall is class 1."""
    if len(labeled) == 0:
        raise ValueError("labeled set is empty")
    probs = score_batch(
        store.rows(labeled.ids), model.prompts, model.config.logit_scale
    )
    pred = probs.argmax(axis=1)
    return EvalMetrics(folds=(_confusion(pred, labeled.labels),))


def cross_validate(
    labeled: LabeledSet,
    store: EmbeddingStore,
    config: TrainConfig,
    k: int = 10,
    init_file=None,
) -> EvalMetrics:
    """Train on k-1 folds, test on the held-out fold, aggregate over folds.

    Every fold trains with the same seed; fold composition is the only
    source of variation."""
    folds = kfold_split(labeled, k=k, seed=config.seed)
    return EvalMetrics(
        folds=tuple(
            _run_fold(labeled, store, config, folds, i, init_file) for i in range(k)
        )
    )


def _train_indices(folds, held_out: int) -> np.ndarray:
    parts = [folds[j] for j in range(len(folds)) if j != held_out]
    return np.sort(np.concatenate(parts))


def _run_fold(labeled, store, config, folds, held_out, init_file, train_idx=None) -> FoldMetrics:
    if train_idx is None:
        train_idx = _train_indices(folds, held_out)
    train_set = labeled.subset(train_idx)
    test_set = labeled.subset(folds[held_out])
    init = init_prompts(
        config.init_mode, train_set, store, init_file=init_file, seed=config.seed
    )
    model = train(train_set, store, config, init)
    return evaluate(model, test_set, store).folds[0]


def fewshot_curve(
    labeled: LabeledSet,
    store: EmbeddingStore,
    config: TrainConfig,
    fractions,
    k: int = 10,
    init_file=None,
) -> dict:
    """Cross-validated metrics per training fraction.

    Only the training folds are subsampled (stratified, ceil(f * class count)
    per class); test folds stay complete.  Fraction 1.0 reproduces
    cross_validate exactly."""
    fractions = list(fractions)
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ValueError(f"fraction {f} outside (0, 1]")
    folds = kfold_split(labeled, k=k, seed=config.seed)
    curve = {}
    for fi, fraction in enumerate(fractions):
        fold_metrics = []
        for held_out in range(k):
            full_idx = _train_indices(folds, held_out)
            sub_idx = _subsample(
                labeled, full_idx, fraction, seed_parts=(config.seed, held_out, fi)
            )
            fold_metrics.append(
                _run_fold(labeled, store, config, folds, held_out, init_file, sub_idx)
            )
        curve[fraction] = EvalMetrics(folds=tuple(fold_metrics))
    return curve


def _subsample(labeled, train_idx, fraction, seed_parts) -> np.ndarray:
    """Stratified draw of ceil(fraction * class count) per class, kept sorted
    so fraction 1.0 returns train_idx unchanged."""
    rng = np.random.default_rng(seed_parts)
    chosen = []
    for cls in (0, 1):
        class_idx = train_idx[labeled.labels[train_idx] == cls]
        if class_idx.size == 0:
            raise TooFewSamples(f"class {cls} missing from training folds")
        take = math.ceil(fraction * class_idx.size)
        chosen.append(rng.choice(class_idx, size=take, replace=False))
    return np.sort(np.concatenate(chosen))
