# Embedding stores
# ================
#
# Everything in this package starts from an embedding store: a flat binary
# matrix of per-image feature vectors plus a JSON header that names the ids.
# This demo builds one from scratch, round-trips it through disk, and shows
# the 2D projection used for eyeballing scan results.

import tempfile
from pathlib import Path

import numpy as np

from q16doc import EmbeddingStore, load_store, pca2, save_store

workdir = Path(tempfile.mkdtemp(prefix="q16-demo-"))
print(f"working in {workdir}")

# Fake a tiny dataset: two clusters in 8 dimensions. Real stores come from a
# frozen image encoder; the package never touches pixels, only vectors.
rng = np.random.default_rng(0)
n = 40
centers = np.zeros((n, 8))
centers[: n // 2, 0] = 1.0   # first half leans one way
centers[n // 2 :, 0] = -1.0  # second half the other
vectors = centers + 0.2 * rng.standard_normal((n, 8))
vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)

ids = tuple(f"img-{i:03d}" for i in range(n))
store = EmbeddingStore(
    ids=ids,
    vectors=vectors.astype(np.float32),
    dim=8,
    normalized=True,
    name="demo",
)
print(f"store '{store.name}': {len(store.ids)} vectors of dim {store.dim}")

# Stores serialize as a .json header next to a .f32 payload. The header
# carries ids, dim, dtype, and the normalization flag; the payload is the raw
# row-major float32 matrix.
meta = workdir / "demo.json"
save_store(store, meta)
for p in sorted(workdir.iterdir()):
    print(f"  wrote {p.name} ({p.stat().st_size} bytes)")

reloaded = load_store(meta)
print(f"round-trip identical: {np.array_equal(reloaded.vectors, store.vectors)}")

# Vectors can be pulled back out by id.
vec = reloaded.row("img-007")
print(f"img-007 norm: {float(np.linalg.norm(vec)):.4f}")

# pca2 projects the store onto its top two principal directions, handy for a
# quick visual check that a dataset has the structure you expect.
result = pca2(reloaded.vectors)
xs = result.projections[:, 0]
print(f"explained variance: {result.explained_variance[0]:.4f}, "
      f"{result.explained_variance[1]:.4f}")
print(f"cluster means on first axis: "
      f"{xs[: n // 2].mean():+.3f} vs {xs[n // 2 :].mean():+.3f}")
