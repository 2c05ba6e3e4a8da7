"""Documentation generation: token statistics, three word clouds, and the
datasheet answer for the question on potentially upsetting content.

The clouds are (1) most frequent annotation terms over flagged images, (2)
most frequent caption terms over flagged images, and (3) caption terms scoring
highest under chi-squared deviation between the flagged subset and the rest of
the dataset.  All counting is integer-exact; chi-squared arithmetic sticks to
plain Python floats so results are reproducible bit for bit.
"""
from __future__ import annotations

import html
import json
import os
import re
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import EmptyFlaggedSet, IoFailure
from .scan import FlagReport
from .stopwords import BUILTIN_STOPWORDS

QUESTION_16 = (
    "Does the dataset contain data that, if viewed directly, might be "
    "offensive, insulting, threatening, or might otherwise cause anxiety?"
)

CLOUD_KINDS = ("annotation-frequency", "caption-frequency", "chi-squared")
VERDICT_TO_BUCKET = {
    "confirm-inappropriate": "confirmed",
    "reject-flag": "rejected",
    "unsure": "unsure",
}

# maximal alphanumeric runs; underscores split tokens
_TOKEN_RE = re.compile(r"[^\W_]+")


@dataclass(eq=False)
class TokenStats:
    """Unigram/bigram counts over a document set."""

    unigrams: dict
    bigrams: dict
    total: int

    def __post_init__(self):
        if self.total != sum(self.unigrams.values()):
            raise ValueError("total must equal the unigram count sum")
        for counts in (self.unigrams, self.bigrams):
            for term, count in counts.items():
                if count < 1:
                    raise ValueError(f"count for {term!r} must be at least 1")

    @property
    def vocabulary(self) -> frozenset:
        return frozenset(self.unigrams) | frozenset(self.bigrams)


def tokenize(texts, stopwords=None) -> TokenStats:
    """Count unigrams and bigrams.

    Text is lowercased and split on non-alphanumeric characters; tokens
    shorter than 2 characters and stopwords are dropped.  Bigrams join
    adjacent surviving tokens, never crossing text boundaries."""
    if stopwords is None:
        stopwords = BUILTIN_STOPWORDS
    unigrams: dict = {}
    bigrams: dict = {}
    total = 0
    for text in texts:
        kept = [
            t
            for t in _TOKEN_RE.findall(text.lower())
            if len(t) >= 2 and t not in stopwords
        ]
        for t in kept:
            unigrams[t] = unigrams.get(t, 0) + 1
        total += len(kept)
        for a, b in zip(kept, kept[1:]):
            pair = f"{a} {b}"
            bigrams[pair] = bigrams.get(pair, 0) + 1
    return TokenStats(unigrams=unigrams, bigrams=bigrams, total=total)


@dataclass(frozen=True)
class CloudEntry:
    term: str
    weight: float
    rank: int
    count: int
    image_count: int = 0

    def to_dict(self) -> dict:
        return {
            "term": self.term,
            "weight": self.weight,
            "rank": self.rank,
            "count": self.count,
            "image_count": self.image_count,
        }


@dataclass(eq=False)
class WordCloudData:
    kind: str
    entries: tuple[CloudEntry, ...]
    source_totals: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CLOUD_KINDS:
            raise ValueError(f"kind must be one of {CLOUD_KINDS}")
        self.entries = tuple(self.entries)
        weights = [e.weight for e in self.entries]
        if any(w < 0 for w in weights):
            raise ValueError("weights must be nonnegative")
        if weights != sorted(weights, reverse=True):
            raise ValueError("entries must be sorted by descending weight")
        if [e.rank for e in self.entries] != list(range(1, len(self.entries) + 1)):
            raise ValueError("ranks must be consecutive from 1")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "entries": [e.to_dict() for e in self.entries],
            "source_totals": dict(self.source_totals),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WordCloudData":
        return cls(
            kind=data["kind"],
            entries=tuple(CloudEntry(**e) for e in data["entries"]),
            source_totals=dict(data.get("source_totals", {})),
        )


def _ranked(candidates, max_terms, kind, source_totals):
    """candidates: list of (term, weight, count, image_count)."""
    chosen = sorted(candidates, key=lambda c: (-c[1], c[0]))[:max_terms]
    entries = tuple(
        CloudEntry(term=t, weight=w, rank=i + 1, count=c, image_count=ic)
        for i, (t, w, c, ic) in enumerate(chosen)
    )
    return WordCloudData(kind=kind, entries=entries, source_totals=source_totals)


def frequency_cloud(
    stats: TokenStats,
    max_terms: int = 100,
    kind: str = "annotation-frequency",
    image_counts=None,
) -> WordCloudData:
    """Top terms by raw count, unigrams and bigrams pooled, ties lexicographic."""
    image_counts = image_counts or {}
    pooled = dict(stats.unigrams)
    pooled.update(stats.bigrams)
    candidates = [
        (term, float(count), count, image_counts.get(term, 0))
        for term, count in pooled.items()
    ]
    return _ranked(
        candidates, max_terms, kind, source_totals={"tokens": stats.total}
    )


def chi2_weight(observed: float, expected: float) -> float:
    """Squared deviation of observed from expected counts, scaled by expected."""
    if expected <= 0:
        raise ValueError("expected count must be positive")
    return (observed - expected) ** 2 / expected


def chi2_cloud(
    flagged_stats: TokenStats,
    rest_stats: TokenStats,
    max_terms: int = 100,
    common_ratio: float = 2.0,
    smoothing: float = 1.0,
    image_counts=None,
) -> WordCloudData:
    """Terms over-represented in the flagged subset's captions.

    Rest-set counts are rescaled to the flagged set's token mass and smoothed
    (expected = smoothing + rest_count * flagged_total / max(rest_total, 1));
    terms whose relative frequencies in the two sets are within a factor of
    common_ratio of each other are removed first; survivors are weighted by
    (observed - expected)^2 / expected."""
    if flagged_stats.total <= 0:
        raise EmptyFlaggedSet("no tokens in the flagged set")
    if common_ratio <= 0:
        raise ValueError("common_ratio must be positive")
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    image_counts = image_counts or {}
    flagged_total = flagged_stats.total
    rest_total = rest_stats.total
    scale = flagged_total / max(rest_total, 1)
    observed = dict(flagged_stats.unigrams)
    observed.update(flagged_stats.bigrams)
    rest_pooled = dict(rest_stats.unigrams)
    rest_pooled.update(rest_stats.bigrams)
    candidates = []
    for term, count in observed.items():
        rest_count = rest_pooled.get(term, 0)
        rel_flagged = count / flagged_total
        rel_rest = rest_count / rest_total if rest_total > 0 else 0.0
        common = (
            rel_rest > 0.0
            and rel_flagged < common_ratio * rel_rest
            and rel_rest < common_ratio * rel_flagged
        )
        if common:
            continue
        expected = smoothing + rest_count * scale
        weight = (count - expected) ** 2 / expected
        candidates.append((term, weight, count, image_counts.get(term, 0)))
    return _ranked(
        candidates,
        max_terms,
        "chi-squared",
        source_totals={"flagged_tokens": flagged_total, "rest_tokens": rest_total},
    )


def term_image_counts(texts_by_id: dict, stopwords=None) -> dict:
    """Number of distinct images whose texts contain each term."""
    counts: dict = {}
    for image_id in texts_by_id:
        stats = tokenize(texts_by_id[image_id], stopwords=stopwords)
        for term in stats.vocabulary:
            counts[term] = counts.get(term, 0) + 1
    return counts


@dataclass(frozen=True)
class ReviewSummary:
    confirmed: int = 0
    rejected: int = 0
    unsure: int = 0
    pending: int = 0

    def to_dict(self) -> dict:
        return {
            "confirmed": self.confirmed,
            "rejected": self.rejected,
            "unsure": self.unsure,
            "pending": self.pending,
        }


def summarize_verdicts(flagged_ids, verdicts_by_id) -> ReviewSummary:
    """Partition flagged ids into review buckets; ids without a verdict (or
    with decisions outside the flagged set) count as pending."""
    buckets = {"confirmed": 0, "rejected": 0, "unsure": 0}
    pending = 0
    for image_id in flagged_ids:
        verdict = verdicts_by_id.get(image_id)
        bucket = VERDICT_TO_BUCKET.get(verdict)
        if bucket is None:
            pending += 1
        else:
            buckets[bucket] += 1
    return ReviewSummary(pending=pending, **buckets)


@dataclass(eq=False)
class Datasheet:
    dataset_name: str
    total_count: int
    flagged_count: int
    flag_ratio: float
    annotation_coverage: float
    caption_coverage: float
    annotation_cloud: WordCloudData
    caption_cloud: WordCloudData
    chi_squared_cloud: WordCloudData
    review: ReviewSummary
    generated_at: int
    model_fingerprint: str

    @property
    def clouds(self) -> tuple[WordCloudData, WordCloudData, WordCloudData]:
        return (self.annotation_cloud, self.caption_cloud, self.chi_squared_cloud)

    def to_dict(self) -> dict:
        return {
            "dataset_name": self.dataset_name,
            "total_count": self.total_count,
            "flagged_count": self.flagged_count,
            "flag_ratio": self.flag_ratio,
            "annotation_coverage": self.annotation_coverage,
            "caption_coverage": self.caption_coverage,
            "clouds": {c.kind: c.to_dict() for c in self.clouds},
            "review": self.review.to_dict(),
            "generated_at": self.generated_at,
            "model_fingerprint": self.model_fingerprint,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Datasheet":
        clouds = data["clouds"]
        return cls(
            dataset_name=data["dataset_name"],
            total_count=data["total_count"],
            flagged_count=data["flagged_count"],
            flag_ratio=data["flag_ratio"],
            annotation_coverage=data["annotation_coverage"],
            caption_coverage=data["caption_coverage"],
            annotation_cloud=WordCloudData.from_dict(clouds["annotation-frequency"]),
            caption_cloud=WordCloudData.from_dict(clouds["caption-frequency"]),
            chi_squared_cloud=WordCloudData.from_dict(clouds["chi-squared"]),
            review=ReviewSummary(**data["review"]),
            generated_at=data["generated_at"],
            model_fingerprint=data["model_fingerprint"],
        )


def _resolve_timestamp(generated_at) -> int:
    if generated_at is not None:
        return int(generated_at)
    env = os.environ.get("SOURCE_DATE_EPOCH")
    if env is not None:
        return int(env)
    return int(time.time())


def _empty_cloud(kind: str) -> WordCloudData:
    return WordCloudData(kind=kind, entries=(), source_totals={"tokens": 0})


def build_datasheet(
    report: FlagReport,
    annotations,
    captions,
    decisions=None,
    max_terms: int = 100,
    common_ratio: float = 2.0,
    smoothing: float = 1.0,
    stopwords=None,
    generated_at=None,
) -> Datasheet:
    """Assemble the documentation answer from a flag report plus text sources.

    annotations/captions may cover only part of the flagged set; coverage
    fractions record the gap.  decisions is an id -> verdict mapping (or
    None for an unreviewed dataset)."""
    flagged = report.flagged_ids()
    verdicts = decisions or {}
    review = summarize_verdicts(flagged, verdicts)
    ratio = report.flagged_count / report.total_count if report.total_count else 0.0
    timestamp = _resolve_timestamp(generated_at)
    if not flagged:
        return Datasheet(
            dataset_name=report.dataset_name,
            total_count=report.total_count,
            flagged_count=report.flagged_count,
            flag_ratio=ratio,
            annotation_coverage=1.0,
            caption_coverage=1.0,
            annotation_cloud=_empty_cloud("annotation-frequency"),
            caption_cloud=_empty_cloud("caption-frequency"),
            chi_squared_cloud=_empty_cloud("chi-squared"),
            review=review,
            generated_at=timestamp,
            model_fingerprint=report.model_fingerprint,
        )

    flagged_set = set(flagged)
    ann_texts_by_id = {
        i: list(annotations.get(i)) for i in flagged if i in annotations
    }
    cap_texts_by_id = {i: list(captions.get(i)) for i in flagged if i in captions}
    annotation_coverage = len(ann_texts_by_id) / len(flagged)
    caption_coverage = len(cap_texts_by_id) / len(flagged)

    ann_stats = tokenize(
        [t for texts in ann_texts_by_id.values() for t in texts], stopwords=stopwords
    )
    cap_stats = tokenize(
        [t for texts in cap_texts_by_id.values() for t in texts], stopwords=stopwords
    )
    rest_ids = sorted(i for i in captions.by_id if i not in flagged_set)
    rest_stats = tokenize(
        [t for i in rest_ids for t in captions.get(i)], stopwords=stopwords
    )

    annotation_cloud = frequency_cloud(
        ann_stats,
        max_terms=max_terms,
        kind="annotation-frequency",
        image_counts=term_image_counts(ann_texts_by_id, stopwords=stopwords),
    )
    caption_image_counts = term_image_counts(cap_texts_by_id, stopwords=stopwords)
    caption_cloud = frequency_cloud(
        cap_stats,
        max_terms=max_terms,
        kind="caption-frequency",
        image_counts=caption_image_counts,
    )
    if cap_stats.total > 0:
        chi_cloud = chi2_cloud(
            cap_stats,
            rest_stats,
            max_terms=max_terms,
            common_ratio=common_ratio,
            smoothing=smoothing,
            image_counts=caption_image_counts,
        )
    else:
        chi_cloud = _empty_cloud("chi-squared")

    return Datasheet(
        dataset_name=report.dataset_name,
        total_count=report.total_count,
        flagged_count=report.flagged_count,
        flag_ratio=ratio,
        annotation_coverage=annotation_coverage,
        caption_coverage=caption_coverage,
        annotation_cloud=annotation_cloud,
        caption_cloud=caption_cloud,
        chi_squared_cloud=chi_cloud,
        review=review,
        generated_at=timestamp,
        model_fingerprint=report.model_fingerprint,
    )


# rendering


def _iso(timestamp: int) -> str:
    return datetime.fromtimestamp(timestamp, tz=timezone.utc).strftime(
        "%Y-%m-%dT%H:%M:%SZ"
    )


_CLOUD_TITLES = {
    "annotation-frequency": "Most frequent annotation terms (flagged images)",
    "caption-frequency": "Most frequent caption terms (flagged images)",
    "chi-squared": "Caption terms over-represented among flagged images (chi-squared)",
}


def render_markdown(datasheet: Datasheet) -> str:
    ds = datasheet
    lines = [
        f"# Dataset documentation: {ds.dataset_name}",
        "",
        f"## {QUESTION_16}",
        "",
    ]
    if ds.flagged_count > 0:
        lines.append(
            f"Potentially: an automated scan flagged {ds.flagged_count} of "
            f"{ds.total_count} images ({ds.flag_ratio:.4%}) as potentially "
            "inappropriate. The terms below summarize what the flagged subset "
            "depicts; human review status is tracked underneath."
        )
    else:
        lines.append(
            f"No: an automated scan flagged 0 of {ds.total_count} images. "
            "Absence of flags is not a guarantee of harmless content."
        )
    lines += [
        "",
        "| Statistic | Value |",
        "| --- | --- |",
        f"| Total images | {ds.total_count} |",
        f"| Flagged images | {ds.flagged_count} |",
        f"| Flag ratio | {ds.flag_ratio:.6f} |",
        f"| Annotation coverage of flagged set | {ds.annotation_coverage:.4f} |",
        f"| Caption coverage of flagged set | {ds.caption_coverage:.4f} |",
        "",
        "### Human review status",
        "",
        "| Verdict | Count |",
        "| --- | --- |",
        f"| Confirmed inappropriate | {ds.review.confirmed} |",
        f"| Rejected (not inappropriate) | {ds.review.rejected} |",
        f"| Unsure | {ds.review.unsure} |",
        f"| Pending | {ds.review.pending} |",
    ]
    for cloud in ds.clouds:
        lines += ["", f"### {_CLOUD_TITLES[cloud.kind]}", ""]
        if not cloud.entries:
            lines.append("No terms.")
            continue
        lines += [
            "| Rank | Term | Weight | Count | Images |",
            "| --- | --- | --- | --- | --- |",
        ]
        for e in cloud.entries:
            lines.append(
                f"| {e.rank} | {e.term} | {e.weight:g} | {e.count} | {e.image_count} |"
            )
    lines += [
        "",
        "---",
        "",
        f"Generated at {_iso(ds.generated_at)}. Model fingerprint "
        f"`{ds.model_fingerprint}`.",
        "",
    ]
    return "\n".join(lines)


def render_json(datasheet: Datasheet) -> bytes:
    return (json.dumps(datasheet.to_dict(), indent=2) + "\n").encode("utf-8")


MIN_FONT = 12
MAX_FONT = 40


def _font_size(weight: float, wmin: float, wmax: float) -> float:
    if wmax <= wmin:
        return float(MAX_FONT)
    return MIN_FONT + (weight - wmin) / (wmax - wmin) * (MAX_FONT - MIN_FONT)


def render_svg_cloud(cloud: WordCloudData, width: int = 640) -> str:
    """Deterministic ranked-rows rendering: one term per row, font size affine
    in weight between 12 and 40 px."""
    rows = []
    y = 10
    if not cloud.entries:
        y += MAX_FONT
        rows.append(
            f'<text x="10" y="{y}" font-size="{MIN_FONT}" fill="#888">no terms</text>'
        )
    else:
        weights = [e.weight for e in cloud.entries]
        wmin, wmax = min(weights), max(weights)
        for e in cloud.entries:
            size = _font_size(e.weight, wmin, wmax)
            y += int(size) + 6
            rows.append(
                f'<text x="10" y="{y}" font-size="{size:.2f}">'
                f"{html.escape(e.term)}</text>"
            )
    height = y + 20
    header = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">'
    )
    title = f"<title>{html.escape(_CLOUD_TITLES[cloud.kind])}</title>"
    return "\n".join([header, title, *rows, "</svg>"]) + "\n"


def render(datasheet: Datasheet, out_dir, formats=("markdown", "json", "svg-clouds")):
    """Write the requested renderings into out_dir; returns the paths written."""
    valid = {"markdown", "json", "svg-clouds"}
    unknown = set(formats) - valid
    if unknown:
        raise ValueError(f"unknown formats: {sorted(unknown)}")
    out_dir = Path(out_dir)
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if "markdown" in formats:
            path = out_dir / "datasheet.md"
            path.write_text(render_markdown(datasheet), encoding="utf-8")
            written.append(path)
        if "json" in formats:
            path = out_dir / "datasheet.json"
            path.write_bytes(render_json(datasheet))
            written.append(path)
        if "svg-clouds" in formats:
            for cloud in datasheet.clouds:
                path = out_dir / f"cloud-{cloud.kind}.svg"
                path.write_text(render_svg_cloud(cloud), encoding="utf-8")
                written.append(path)
    except OSError as exc:
        raise IoFailure(f"cannot write datasheet output: {exc}") from exc
    return written
