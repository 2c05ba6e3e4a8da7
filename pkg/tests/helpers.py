"""Shared test fixtures: synthetic stores, labeled sets, and small models."""
import numpy as np

from q16doc import (
    EmbeddingStore,
    LabeledSet,
    PromptEmbeddings,
    PromptModel,
    TrainConfig,
)


def separable_store(n_per_class=20, d=8, seed=3, spread=0.05, name="synthetic"):
    """Two tight clusters at antipodal unit vectors; cluster at +e0 is class 1."""
    rng = np.random.default_rng(seed)
    center = np.zeros(d)
    center[0] = 1.0
    ids = []
    vectors = []
    labels = []
    for cls, sign in ((1, 1.0), (0, -1.0)):
        for i in range(n_per_class):
            v = sign * center + spread * rng.standard_normal(d)
            v /= np.linalg.norm(v)
            ids.append(f"img-{cls}-{i:03d}")
            vectors.append(v)
            labels.append(cls)
    store = EmbeddingStore(
        ids=tuple(ids),
        vectors=np.array(vectors, dtype=np.float32),
        dim=d,
        normalized=False,
        name=name,
    )
    return store, LabeledSet(ids=tuple(ids), labels=np.array(labels))


def quick_config(**overrides):
    base = dict(epochs=60, batch_size=32, seed=16)
    base.update(overrides)
    return TrainConfig(**base)


def direct_model(matrix, class_names=("non-inappropriate", "inappropriate"), **config):
    """PromptModel built straight from a matrix, skipping training."""
    cfg = quick_config(epochs=0, **config)
    prompts = PromptEmbeddings(class_names, np.asarray(matrix, dtype=np.float32))
    return PromptModel(prompts=prompts, config=cfg, loss_history=(0.0,), normalized=False)


# Independent chi-squared oracle: character-level tokenizer and recount that
# share no code with the implementation under test.

ORACLE_WORDS = [
    "blood", "weapon", "gun", "knife", "violence", "dog", "cat", "tree",
    "house", "sky", "water", "fire", "mask", "flag", "person", "street",
]


def oracle_tokens(text, stopwords):
    out = []
    word = ""
    for ch in text.lower():
        if ch.isalnum() and ch != "_":
            word += ch
        else:
            if len(word) >= 2 and word not in stopwords:
                out.append(word)
            word = ""
    if len(word) >= 2 and word not in stopwords:
        out.append(word)
    return out


def oracle_counts(texts, stopwords):
    from collections import Counter

    uni = Counter()
    bi = Counter()
    total = 0
    for text in texts:
        toks = oracle_tokens(text, stopwords)
        uni.update(toks)
        total += len(toks)
        bi.update(f"{a} {b}" for a, b in zip(toks, toks[1:]))
    return uni, bi, total


def oracle_chi2(flagged_texts, rest_texts, stopwords, common_ratio=2.0, smoothing=1.0):
    fu, fb, ft = oracle_counts(flagged_texts, stopwords)
    ru, rb, rt = oracle_counts(rest_texts, stopwords)
    scale = ft / max(rt, 1)
    weights = {}
    for source, rest_source in ((fu, ru), (fb, rb)):
        for term, count in source.items():
            rest_count = rest_source.get(term, 0)
            rel_f = count / ft
            rel_r = rest_count / rt if rt > 0 else 0.0
            if rel_r > 0.0 and rel_f < common_ratio * rel_r and rel_r < common_ratio * rel_f:
                continue
            expected = smoothing + rest_count * scale
            weights[term] = (count - expected) ** 2 / expected
    return weights


def random_oracle_texts(rng, n_texts, max_len=8):
    texts = []
    for _ in range(n_texts):
        k = int(rng.integers(1, max_len))
        words = [ORACLE_WORDS[int(rng.integers(0, len(ORACLE_WORDS)))] for _ in range(k)]
        texts.append(" ".join(words))
    return texts
