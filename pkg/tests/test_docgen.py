"""Docgen tests. The chi-squared cloud is checked bit-for-bit against an
independent oracle that re-tokenizes and recounts the raw texts with its own
character-level scanner."""
import json
import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from q16doc import (
    AnnotationSet,
    BUILTIN_STOPWORDS,
    CaptionSet,
    CloudEntry,
    Datasheet,
    QUESTION_16,
    ReviewSummary,
    TokenStats,
    WordCloudData,
    build_datasheet,
    chi2_cloud,
    chi2_weight,
    frequency_cloud,
    load_stopwords,
    render,
    render_json,
    render_markdown,
    render_svg_cloud,
    summarize_verdicts,
    term_image_counts,
    tokenize,
)
from q16doc.errors import EmptyFlaggedSet
from q16doc.scan import FlagEntry, FlagReport
from helpers import oracle_chi2, oracle_counts, oracle_tokens, random_oracle_texts


# tokenize


def test_tokenize_forced_example():
    stats = tokenize(["A picture of a gun"])
    assert stats.unigrams == {"picture": 1, "gun": 1}
    assert stats.bigrams == {"picture gun": 1}
    assert stats.total == 2


def test_tokenize_empty():
    stats = tokenize([])
    assert stats.unigrams == {} and stats.bigrams == {} and stats.total == 0


def test_tokenize_case_folds():
    stats = tokenize(["Gun gun GUN"])
    assert stats.unigrams == {"gun": 3}
    assert stats.bigrams == {"gun gun": 2}


def test_tokenize_splits_on_underscore_and_punctuation():
    stats = tokenize(["machine_gun, fired!"])
    assert stats.unigrams == {"machine": 1, "gun": 1, "fired": 1}
    assert "machine gun" in stats.bigrams


def test_tokenize_drops_short_tokens():
    stats = tokenize(["a b c gun x5 go"])
    assert stats.unigrams == {"gun": 1, "x5": 1, "go": 1}


def test_tokenize_bigrams_do_not_cross_texts():
    stats = tokenize(["red blood", "sharp knife"])
    assert set(stats.bigrams) == {"red blood", "sharp knife"}


def test_tokenize_custom_stopwords():
    stats = tokenize(["picture of gun"], stopwords=frozenset({"gun"}))
    assert stats.unigrams == {"picture": 1, "of": 1}


def test_tokenize_idempotent_on_normalized_text():
    texts = ["A Picture of the Bloody KNIFE, twice!", "dogs and cats"]
    first = tokenize(texts)
    rejoined = []
    for text in texts:
        kept = oracle_tokens(text, BUILTIN_STOPWORDS)
        rejoined.append(" ".join(kept))
    second = tokenize(rejoined)
    assert first.unigrams == second.unigrams
    assert first.bigrams == second.bigrams


def test_tokenize_text_order_invariant():
    texts = ["blood on the street", "a calm lake", "gun and knife"]
    a = tokenize(texts)
    b = tokenize(list(reversed(texts)))
    assert a.unigrams == b.unigrams and a.bigrams == b.bigrams and a.total == b.total


def test_tokenize_stopword_only_text_changes_nothing():
    base = tokenize(["blood weapon"])
    padded = tokenize(["blood weapon", "the of and a"])
    assert padded.unigrams == base.unigrams
    assert padded.bigrams == base.bigrams
    assert padded.total == base.total


def test_tokenize_matches_oracle_counter():
    texts = ["A picture of a gas mask", "the guillotine, again", "GAS gas mask"]
    stats = tokenize(texts)
    uni, bi, total = oracle_counts(texts, BUILTIN_STOPWORDS)
    assert stats.unigrams == dict(uni)
    assert stats.bigrams == dict(bi)
    assert stats.total == total


def test_token_stats_invariants():
    with pytest.raises(ValueError):
        TokenStats(unigrams={"gun": 1}, bigrams={}, total=5)
    with pytest.raises(ValueError):
        TokenStats(unigrams={"gun": 0}, bigrams={}, total=0)


def test_load_stopwords(tmp_path):
    p = tmp_path / "stop.txt"
    p.write_text("Foo\n\n  bar \n")
    assert load_stopwords(p) == frozenset({"foo", "bar"})


# frequency_cloud


def stats_of(unigrams, bigrams=None):
    return TokenStats(
        unigrams=unigrams, bigrams=bigrams or {}, total=sum(unigrams.values())
    )


def test_frequency_cloud_top_terms():
    cloud = frequency_cloud(stats_of({"aa": 5, "bb": 3, "cc": 1}), max_terms=2)
    assert [(e.term, e.weight) for e in cloud.entries] == [("aa", 5.0), ("bb", 3.0)]
    assert [e.rank for e in cloud.entries] == [1, 2]


def test_frequency_cloud_tie_lexicographic():
    cloud = frequency_cloud(stats_of({"yy": 2, "xx": 2}))
    assert [e.term for e in cloud.entries] == ["xx", "yy"]


def test_frequency_cloud_pools_bigrams():
    cloud = frequency_cloud(stats_of({"gas": 4}, {"gas mask": 6}))
    assert cloud.entries[0].term == "gas mask"
    assert cloud.entries[0].count == 6


def test_frequency_cloud_respects_max_terms():
    unigrams = {f"term{i:02d}": i + 1 for i in range(30)}
    cloud = frequency_cloud(stats_of(unigrams), max_terms=10)
    assert len(cloud.entries) == 10


def test_cloud_validation():
    ok = CloudEntry(term="gun", weight=2.0, rank=1, count=2)
    bad_rank = CloudEntry(term="gun", weight=1.0, rank=3, count=1)
    with pytest.raises(ValueError):
        WordCloudData(kind="caption-frequency", entries=(ok, bad_rank))
    with pytest.raises(ValueError):
        WordCloudData(kind="unknown-kind", entries=())
    rising = (
        CloudEntry(term="aa", weight=1.0, rank=1, count=1),
        CloudEntry(term="bb", weight=2.0, rank=2, count=2),
    )
    with pytest.raises(ValueError):
        WordCloudData(kind="caption-frequency", entries=rising)


# chi-squared


def test_chi2_weight_spot_values():
    assert chi2_weight(10, 5) == 5.0
    assert chi2_weight(7, 7) == 0.0
    with pytest.raises(ValueError):
        chi2_weight(3, 0)


def test_chi2_cloud_hand_example():
    flagged = tokenize(["blood blood blood weapon"])
    rest = tokenize(["calm calm"])
    cloud = chi2_cloud(flagged, rest)
    by_term = {e.term: e.weight for e in cloud.entries}
    # rest never saw these, so expected = smoothing = 1
    assert by_term["blood"] == 4.0
    assert by_term["blood blood"] == 1.0
    assert by_term["weapon"] == 0.0
    ordered = [e.term for e in cloud.entries]
    assert ordered == ["blood", "blood blood", "blood weapon", "weapon"]


def test_chi2_common_terms_removed():
    # dog has identical relative frequency in both sets
    flagged = tokenize(["dog blood blood blood"])
    rest = tokenize(["dog calm calm calm", "dog calm calm calm"])
    cloud = chi2_cloud(flagged, rest)
    terms = {e.term for e in cloud.entries}
    assert "dog" not in terms
    assert "blood" in terms


def test_chi2_boundary_factor_kept():
    # relative frequencies differ by exactly the factor, not less: keep
    flagged = stats_of({"gun": 2, "pad": 2})
    rest = stats_of({"gun": 1, "other": 3})
    cloud = chi2_cloud(flagged, rest, common_ratio=2.0)
    assert "gun" in {e.term for e in cloud.entries}


def test_chi2_zero_weight_ranked_last():
    flagged = stats_of({"aa": 3, "bb": 1})
    rest = stats_of({})
    cloud = chi2_cloud(flagged, rest)
    assert cloud.entries[-1].term == "bb"
    assert cloud.entries[-1].weight == 0.0


def test_chi2_empty_flagged():
    with pytest.raises(EmptyFlaggedSet):
        chi2_cloud(stats_of({}), stats_of({"calm": 3}))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_chi2_matches_oracle_bit_exact(seed):
    import numpy as np

    rng = np.random.default_rng(seed)
    flagged_texts = random_oracle_texts(rng, int(rng.integers(1, 6)))
    rest_texts = random_oracle_texts(rng, int(rng.integers(0, 8)))
    flagged = tokenize(flagged_texts)
    if flagged.total == 0:
        return
    cloud = chi2_cloud(flagged, tokenize(rest_texts), max_terms=10_000)
    got = {e.term: e.weight for e in cloud.entries}
    want = oracle_chi2(flagged_texts, rest_texts, BUILTIN_STOPWORDS)
    assert got == want


def test_term_image_counts():
    counts = term_image_counts(
        {"i1": ["blood weapon"], "i2": ["blood", "blood again"], "i3": ["calm"]}
    )
    assert counts["blood"] == 2
    assert counts["weapon"] == 1
    assert counts["calm"] == 1
    assert counts["blood weapon"] == 1


# review summaries


def test_summarize_verdicts_partition():
    flagged = ("a", "b", "c", "d")
    verdicts = {
        "a": "confirm-inappropriate",
        "b": "reject-flag",
        "x": "confirm-inappropriate",
    }
    summary = summarize_verdicts(flagged, verdicts)
    assert summary == ReviewSummary(confirmed=1, rejected=1, unsure=0, pending=2)


# build_datasheet


def report_with(flagged_ids, rest_ids=(), threshold=0.5, name="fixture"):
    entries = []
    for i, image_id in enumerate(sorted(flagged_ids)):
        entries.append(FlagEntry(id=image_id, p=0.9 - i * 1e-6, flagged=True))
    for i, image_id in enumerate(sorted(rest_ids)):
        entries.append(FlagEntry(id=image_id, p=0.1 - i * 1e-6, flagged=False))
    entries.sort(key=lambda e: (-e.p, e.id))
    return FlagReport(
        dataset_name=name,
        total_count=len(flagged_ids) + len(rest_ids),
        threshold=threshold,
        model_fingerprint="deadbeef",
        flagged_count=len(flagged_ids),
        entries=tuple(entries),
    )


def corpus():
    annotations = AnnotationSet(
        by_id={
            "f1": ("gas mask",),
            "f2": ("guillotine",),
            "f3": ("gas mask", "weapon"),
            "r1": ("teapot",),
            "r2": ("cup",),
        }
    )
    captions = CaptionSet(
        by_id={
            "f1": ("a picture of a gas mask", "soldier wearing a gas mask"),
            "f2": ("an old guillotine on a stage",),
            "f3": ("a weapon next to a gas mask",),
            "r1": ("a picture of a teapot",),
            "r2": ("a cup of tea on a table",),
            "r3": ("a quiet empty street",),
        }
    )
    return annotations, captions


def test_build_datasheet_counts_and_clouds():
    annotations, captions = corpus()
    report = report_with(["f1", "f2", "f3"], ["r1", "r2", "r3"])
    ds = build_datasheet(report, annotations, captions, generated_at=0)
    assert ds.total_count == 6
    assert ds.flagged_count == 3
    assert ds.flag_ratio == 0.5
    assert ds.annotation_coverage == 1.0
    assert ds.caption_coverage == 1.0
    ann_terms = {e.term: e.count for e in ds.annotation_cloud.entries}
    assert ann_terms["gas"] == 2 and ann_terms["mask"] == 2
    assert ann_terms["gas mask"] == 2
    top_caption = ds.caption_cloud.entries[0]
    assert top_caption.term in {"gas", "mask"}
    assert top_caption.image_count == 2
    chi_terms = {e.term for e in ds.chi_squared_cloud.entries}
    assert "gas" in chi_terms
    assert "picture" not in chi_terms  # appears on both sides at similar rates
    assert ds.review == ReviewSummary(pending=3)
    assert ds.generated_at == 0
    assert ds.model_fingerprint == "deadbeef"


def test_build_datasheet_zero_flagged():
    annotations, captions = corpus()
    report = report_with([], ["r1", "r2"])
    ds = build_datasheet(report, annotations, captions, generated_at=5)
    assert ds.flag_ratio == 0.0
    assert ds.annotation_coverage == 1.0 and ds.caption_coverage == 1.0
    assert all(c.entries == () for c in ds.clouds)


def test_build_datasheet_coverage_gap():
    annotations, captions = corpus()
    flagged = [f"g{i}" for i in range(10)]
    captions_by_id = {i: (f"caption for {i}",) for i in flagged[:9]}
    captions_by_id["r1"] = ("background text",)
    partial_captions = CaptionSet(by_id=captions_by_id)
    report = report_with(flagged, ["r1"])
    ds = build_datasheet(report, AnnotationSet(by_id={}), partial_captions, generated_at=0)
    assert ds.caption_coverage == 0.9
    assert ds.annotation_coverage == 0.0


def test_build_datasheet_review_merge():
    annotations, captions = corpus()
    report = report_with(["f1", "f2", "f3"], ["r1"])
    ds = build_datasheet(
        report,
        annotations,
        captions,
        decisions={"f1": "confirm-inappropriate", "f2": "unsure"},
        generated_at=0,
    )
    assert ds.review == ReviewSummary(confirmed=1, unsure=1, pending=1)


def test_build_datasheet_deterministic():
    annotations, captions = corpus()
    report = report_with(["f1", "f2", "f3"], ["r1", "r2"])
    a = build_datasheet(report, annotations, captions, generated_at=0)
    b = build_datasheet(report, annotations, captions, generated_at=0)
    assert render_json(a) == render_json(b)
    assert render_markdown(a) == render_markdown(b)


def test_build_datasheet_source_date_epoch(monkeypatch):
    annotations, captions = corpus()
    report = report_with(["f1"], ["r1"])
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "1234567890")
    ds = build_datasheet(report, annotations, captions)
    assert ds.generated_at == 1234567890
    ds2 = build_datasheet(report, annotations, captions, generated_at=7)
    assert ds2.generated_at == 7


# rendering


def sample_datasheet():
    annotations, captions = corpus()
    report = report_with(["f1", "f2", "f3"], ["r1", "r2", "r3"])
    return build_datasheet(report, annotations, captions, generated_at=1600000000)


def test_markdown_has_verbatim_question_heading():
    md = render_markdown(sample_datasheet())
    assert f"## {QUESTION_16}" in md
    assert QUESTION_16 == (
        "Does the dataset contain data that, if viewed directly, might be "
        "offensive, insulting, threatening, or might otherwise cause anxiety?"
    )


def test_markdown_carries_counts():
    md = render_markdown(sample_datasheet())
    assert "| Total images | 6 |" in md
    assert "| Flagged images | 3 |" in md
    assert "2026" not in md  # timestamp comes from generated_at, not the clock


def test_json_roundtrip_lossless():
    ds = sample_datasheet()
    blob = render_json(ds)
    ds2 = Datasheet.from_dict(json.loads(blob))
    assert render_json(ds2) == blob
    assert render_markdown(ds2) == render_markdown(ds)


def test_svg_empty_cloud_placeholder():
    svg = render_svg_cloud(WordCloudData(kind="chi-squared", entries=()))
    assert "no terms" in svg
    assert svg.startswith("<svg")


def test_svg_font_sizes_affine():
    entries = (
        CloudEntry(term="top", weight=10.0, rank=1, count=10),
        CloudEntry(term="mid", weight=5.0, rank=2, count=5),
        CloudEntry(term="low", weight=0.0, rank=3, count=1),
    )
    svg = render_svg_cloud(WordCloudData(kind="caption-frequency", entries=entries))
    assert 'font-size="40.00"' in svg
    assert 'font-size="26.00"' in svg
    assert 'font-size="12.00"' in svg


def test_svg_equal_weights_equal_fonts():
    entries = (
        CloudEntry(term="aa", weight=3.0, rank=1, count=3),
        CloudEntry(term="bb", weight=3.0, rank=2, count=3),
    )
    svg = render_svg_cloud(WordCloudData(kind="caption-frequency", entries=entries))
    sizes = set(re.findall(r'font-size="([0-9.]+)"', svg))
    assert len(sizes) == 1


def test_svg_escapes_terms():
    entries = (CloudEntry(term="at&t <script>", weight=1.0, rank=1, count=1),)
    svg = render_svg_cloud(WordCloudData(kind="caption-frequency", entries=entries))
    assert "at&amp;t &lt;script&gt;" in svg
    assert "<script>" not in svg


def test_render_writes_files(tmp_path):
    ds = sample_datasheet()
    written = render(ds, tmp_path / "out")
    names = sorted(p.name for p in written)
    assert names == [
        "cloud-annotation-frequency.svg",
        "cloud-caption-frequency.svg",
        "cloud-chi-squared.svg",
        "datasheet.json",
        "datasheet.md",
    ]
    for p in written:
        assert p.stat().st_size > 0


def test_render_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        render(sample_datasheet(), tmp_path, formats=("pdf",))
