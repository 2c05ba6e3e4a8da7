"""Numerical kernels: cosine scoring, cross-entropy loss and gradient, 2-D PCA.

Classification happens in the shared embedding space: an image vector x is
scored against one learned prompt vector per class by cosine similarity

    sim(x, z) = (x . z) / (||x|| ||z||),

the similarities are scaled by a positive logit scale and pushed through a
max-subtracted softmax, and training minimizes the mean cross-entropy of the
softmaxed similarities against one-hot labels.  Only the prompt rows carry
gradient; image embeddings are constants.

All functions are pure and deterministic, and every reduction runs in 64-bit
arithmetic regardless of the (typically float32) storage dtype.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateData, EmptyBatch, ZeroNorm

DEFAULT_LOGIT_SCALE = 100.0


@dataclass(eq=False)
class PromptEmbeddings:
    """Per-class learned prompt vectors: class index 0 is the non-inappropriate
    counterexample class, index 1 the inappropriate class."""

    class_names: tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self):
        self.class_names = tuple(self.class_names)
        matrix = np.asarray(self.matrix, dtype=np.float32)
        if matrix.ndim != 2:
            raise ValueError(f"prompt matrix must be 2-D, got shape {matrix.shape}")
        if len(self.class_names) < 2:
            raise ValueError("need at least 2 classes")
        if matrix.shape[0] != len(self.class_names):
            raise ValueError(
                f"{len(self.class_names)} class names but {matrix.shape[0]} prompt rows"
            )
        if not np.isfinite(matrix).all():
            raise ValueError("prompt matrix contains NaN or infinity")
        matrix.setflags(write=False)
        self.matrix = matrix

    @property
    def num_classes(self) -> int:
        return len(self.class_names)

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]


@dataclass(eq=False)
class ScoreVector:
    """Logits and softmax probabilities for one image against all classes."""

    logits: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=np.float64)
        self.probabilities = np.asarray(self.probabilities, dtype=np.float64)
        total = float(self.probabilities.sum())
        if abs(total - 1.0) > 1e-5:
            raise ValueError(f"probabilities sum to {total}, not 1")
        if ((self.probabilities < 0) | (self.probabilities > 1)).any():
            raise ValueError("probabilities outside [0, 1]")
        if np.abs(self.probabilities - softmax(self.logits)).max() > 1e-5:
            raise ValueError("probabilities do not match softmax(logits)")


def _prompt_matrix(prompts) -> np.ndarray:
    mat = prompts.matrix if isinstance(prompts, PromptEmbeddings) else prompts
    return np.asarray(mat, dtype=np.float64)


def _unit_rows(matrix: np.ndarray, what: str) -> tuple[np.ndarray, np.ndarray]:
    """Rows scaled to unit L2 norm, plus the original norms. ZeroNorm on a zero row."""
    norms = np.linalg.norm(matrix, axis=1)
    if (norms < 1e-300).any():
        row = int((norms < 1e-300).argmax())
        raise ZeroNorm(f"{what} row {row} has zero norm")
    return matrix / norms[:, None], norms


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis (max-subtraction)."""
    logits = np.asarray(logits, dtype=np.float64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def cosine_similarity(x, z) -> float:
    """(x . z) / (||x|| ||z||), in [-1, 1]."""
    x = np.asarray(x, dtype=np.float64).ravel()
    z = np.asarray(z, dtype=np.float64).ravel()
    if x.shape != z.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {z.shape}")
    if not (np.isfinite(x).all() and np.isfinite(z).all()):
        raise ValueError("cosine similarity of non-finite vector")
    # sqrt of the product keeps cos(x, x) == 1.0 exact
    denom = np.sqrt(np.dot(x, x) * np.dot(z, z))
    if denom == 0.0:
        raise ZeroNorm("cosine similarity of a zero vector")
    return float(np.clip(np.dot(x, z) / denom, -1.0, 1.0))


def score(x, prompts, logit_scale: float = DEFAULT_LOGIT_SCALE) -> ScoreVector:
    """Score one image vector against every class prompt."""
    if logit_scale <= 0:
        raise ValueError(f"logit_scale must be positive, got {logit_scale}")
    x = np.asarray(x, dtype=np.float64).ravel()
    mat = _prompt_matrix(prompts)
    nx = np.linalg.norm(x)
    if nx < 1e-300:
        raise ZeroNorm("image vector has zero norm")
    v, _ = _unit_rows(mat, "prompt")
    logits = logit_scale * (v @ (x / nx))
    return ScoreVector(logits=logits, probabilities=softmax(logits))


def score_batch(X, prompts, logit_scale: float = DEFAULT_LOGIT_SCALE) -> np.ndarray:
    """Softmax probabilities for a batch: N x C array, rows summing to 1."""
    if logit_scale <= 0:
        raise ValueError(f"logit_scale must be positive, got {logit_scale}")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyBatch("score_batch needs a non-empty 2-D batch")
    u, _ = _unit_rows(X, "image")
    v, _ = _unit_rows(_prompt_matrix(prompts), "prompt")
    return softmax(logit_scale * (u @ v.T))


def one_hot(labels, num_classes: int) -> np.ndarray:
    """Integer class labels to a one-hot float64 matrix."""
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ValueError("labels must be 1-D")
    if labels.size and (labels.min() < 0 or labels.max() >= num_classes):
        raise ValueError(f"label outside [0, {num_classes})")
    out = np.zeros((labels.shape[0], num_classes), dtype=np.float64)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def _check_labels(Y, n: int, c: int) -> np.ndarray:
    Y = np.asarray(Y)
    if Y.ndim == 1:
        return one_hot(Y, c)
    Y = Y.astype(np.float64)
    if Y.shape != (n, c):
        raise ValueError(f"labels must be {n}x{c} one-hot, got {Y.shape}")
    if not (np.isin(Y, (0.0, 1.0)).all() and (Y.sum(axis=1) == 1.0).all()):
        raise ValueError("labels must be one-hot rows")
    return Y


def _similarity_parts(X, Y, prompts, logit_scale):
    if logit_scale <= 0:
        raise ValueError(f"logit_scale must be positive, got {logit_scale}")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise EmptyBatch("batch is empty")
    mat = _prompt_matrix(prompts)
    Y = _check_labels(Y, X.shape[0], mat.shape[0])
    u, _ = _unit_rows(X, "image")
    v, prompt_norms = _unit_rows(mat, "prompt")
    cos = u @ v.T
    logits = logit_scale * cos
    return u, v, prompt_norms, cos, logits, Y


def batch_loss(X, Y, prompts, logit_scale: float = DEFAULT_LOGIT_SCALE) -> float:
    """Mean cross-entropy of softmaxed scaled similarities: (1/N) sum -log p[true]."""
    _, _, _, _, logits, Y = _similarity_parts(X, Y, prompts, logit_scale)
    m = logits.max(axis=1)
    lse = m + np.log(np.exp(logits - m[:, None]).sum(axis=1))
    true_logit = (logits * Y).sum(axis=1)
    return float(np.mean(lse - true_logit))


def loss_gradient(X, Y, prompts, logit_scale: float = DEFAULT_LOGIT_SCALE) -> np.ndarray:
    """Gradient of batch_loss with respect to each prompt row (C x D, float64).

    With u, v the unit image/prompt vectors, r the prompt norms and
    p = softmax(logit_scale * u.v), each row's gradient is

        (logit_scale / (N r_c)) * sum_n (p - y)_nc * (u_n - (u_n . v_c) v_c)

    i.e. the softmax residual pushed through the normalized-dot-product
    Jacobian.  Image embeddings are constants and receive no gradient.
    """
    u, v, prompt_norms, cos, logits, Y = _similarity_parts(X, Y, prompts, logit_scale)
    n = u.shape[0]
    residual = (softmax(logits) - Y) / n
    tangent = residual.T @ u - (residual * cos).sum(axis=0)[:, None] * v
    return (logit_scale / prompt_norms)[:, None] * tangent


@dataclass(eq=False)
class Pca2Result:
    """Top-2 principal directions of mean-centered data."""

    projections: np.ndarray
    components: np.ndarray
    explained_variance: np.ndarray


def _orthogonal_fallback(orth: np.ndarray) -> np.ndarray:
    """Deterministic unit vector orthogonal to `orth` (used for flat directions)."""
    d = orth.shape[0]
    for i in range(d):
        candidate = np.zeros(d)
        candidate[i] = 1.0
        candidate -= (candidate @ orth) * orth
        norm = np.linalg.norm(candidate)
        if norm > 0.5:
            return candidate / norm
    raise DegenerateData("no orthogonal direction exists")


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    pivot = int(np.abs(v).argmax())
    return -v if v[pivot] < 0 else v


def _power_iteration(cov: np.ndarray, orth=None, max_iter: int = 2000):
    rng = np.random.default_rng(1905)
    v = rng.standard_normal(cov.shape[0])
    if orth is not None:
        v -= (v @ orth) * orth
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = cov @ v
        if orth is not None:
            w -= (w @ orth) * orth
        norm = np.linalg.norm(w)
        if norm < 1e-18:
            raise DegenerateData("covariance has no dominant direction")
        w /= norm
        done = abs(abs(w @ v) - 1.0) < 1e-14
        v = w
        if done:
            break
    eigval = float(v @ cov @ v)
    return _canonical_sign(v), eigval


def pca2(X) -> Pca2Result:
    """Project mean-centered rows onto the top-2 principal directions.

    Components come from power iteration with deflation on the sample
    covariance (N-1 denominator); they are unit-norm, mutually orthogonal,
    and sign-canonicalized so the largest-magnitude coordinate is positive.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("pca2 expects a 2-D matrix")
    n, d = X.shape
    if n < 2:
        raise ValueError("pca2 needs at least 2 rows")
    if d < 2:
        raise DegenerateData("pca2 needs at least 2 dimensions")
    if not np.isfinite(X).all():
        raise ValueError("pca2 input contains NaN or infinity")
    centered = X - X.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    total_var = float(np.trace(cov))
    if total_var <= 1e-24:
        raise DegenerateData("all points identical: zero variance")
    c1, var1 = _power_iteration(cov)
    # All remaining variance numerically zero: any orthogonal direction works,
    # so pick a deterministic one instead of iterating on rounding noise.
    if total_var - var1 <= 1e-12 * total_var:
        c2, var2 = _canonical_sign(_orthogonal_fallback(c1)), 0.0
    else:
        deflated = cov - var1 * np.outer(c1, c1)
        c2, var2 = _power_iteration(deflated, orth=c1)
    components = np.stack([c1, c2])
    return Pca2Result(
        projections=centered @ components.T,
        components=components,
        explained_variance=np.array([var1, var2]),
    )
