# Scanning and documenting a dataset
# ==================================
#
# A trained model turns a store into a flag report; the report plus whatever
# text accompanies the images (annotator labels, captions) turns into the
# datasheet answer for the question "Does the dataset contain data that might
# be considered inappropriate?". This demo runs the whole chain and renders
# markdown, JSON, and SVG word clouds.

import json
import tempfile
from pathlib import Path

import numpy as np

from q16doc import (
    EmbeddingStore,
    LabeledSet,
    TrainConfig,
    build_datasheet,
    flag_ratio,
    init_prompts,
    load_annotations,
    load_captions,
    render,
    scan,
    train,
)

workdir = Path(tempfile.mkdtemp(prefix="q16-demo-"))
print(f"working in {workdir}")

# Synthetic dataset: 25 risky images clustered on +e0, 75 benign on -e0.
rng = np.random.default_rng(3)
n_risky, n_benign, dim = 25, 75, 12
risky = np.zeros((n_risky, dim));  risky[:, 0] = 1.0
benign = np.zeros((n_benign, dim)); benign[:, 0] = -1.0
vectors = np.vstack([risky, benign]) + 0.2 * rng.standard_normal((100, dim))
vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
ids = tuple(f"img-{i:03d}" for i in range(100))
store = EmbeddingStore(ids=ids, vectors=vectors.astype(np.float32), dim=dim,
                       normalized=True, name="audit-demo")

labeled = LabeledSet(ids=ids, labels=np.array([1] * n_risky + [0] * n_benign))
config = TrainConfig(epochs=80, batch_size=25, seed=16)
model = train(labeled, store, config, init_prompts("class-mean", labeled, store))

# scan() scores every image and keeps those whose class-1 probability clears
# the threshold. The report also records the model fingerprint so a datasheet
# can be traced back to the exact prompts that produced it.
report = scan(store, model, decision_threshold=0.5)
print(f"flagged {report.flagged_count} of {report.total_count} "
      f"(ratio {flag_ratio(report):.4f})")
print(f"model fingerprint: {report.model_fingerprint[:16]}...")

# Side text: annotator labels for most images, captions for some. Both
# loaders take LDJSON files keyed by image id.
annotations_path = workdir / "annotations.ldjson"
captions_path = workdir / "captions.ldjson"
risky_words = ["weapon", "blood stain", "street fight"]
benign_words = ["meadow", "bicycle", "picnic"]
with annotations_path.open("w") as fh:
    for i, image_id in enumerate(ids):
        words = risky_words if i < n_risky else benign_words
        fh.write(json.dumps({"id": image_id, "labels": [words[i % 3]]}) + "\n")
with captions_path.open("w") as fh:
    for i, image_id in enumerate(ids):
        if i % 4 == 0:
            continue  # leave a coverage gap on purpose
        noun = (risky_words if i < n_risky else benign_words)[i % 3]
        fh.write(json.dumps({"id": image_id, "captions": [f"a photo of a {noun}"]}) + "\n")

datasheet = build_datasheet(
    report,
    load_annotations(annotations_path),
    load_captions(captions_path),
)
print(f"caption coverage: {datasheet.caption_coverage:.2f}")

# Three clouds: frequency over annotator labels, frequency over captions, and
# the chi-squared cloud that surfaces terms overrepresented among flagged
# images relative to the rest of the dataset.
for cloud in (datasheet.annotation_cloud, datasheet.caption_cloud,
              datasheet.chi_squared_cloud):
    top = ", ".join(f"{e.term} ({e.weight:g})" for e in cloud.entries[:3])
    print(f"  {cloud.kind}: {top}")

out_dir = workdir / "datasheet"
written = render(datasheet, out_dir)
print("rendered:")
for path in written:
    print(f"  {path}")

# The markdown answer is what lands in a dataset's documentation.
print("\n--- datasheet.md (first lines) ---")
for line in (out_dir / "datasheet.md").read_text().splitlines()[:8]:
    print(line)
