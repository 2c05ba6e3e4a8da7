# Human review service
# ====================
#
# Flags are suggestions, not verdicts. The review service puts the flagged
# subset in front of a person, records every decision in an append-only log,
# and folds the tallies back into the datasheet. This demo starts a service,
# drives its HTTP API the way the bundled browser UI does, and shows that the
# log survives a restart.

import json
import tempfile
import urllib.request
from pathlib import Path

import numpy as np

from q16doc import (
    AnnotationSet,
    CaptionSet,
    DecisionLog,
    EmbeddingStore,
    LabeledSet,
    TrainConfig,
    build_datasheet,
    init_prompts,
    scan,
    serve,
    train,
)

workdir = Path(tempfile.mkdtemp(prefix="q16-demo-"))
log_path = workdir / "decisions.ldjson"


def get(url):
    with urllib.request.urlopen(url) as resp:
        return json.loads(resp.read())


def post(url, payload):
    req = urllib.request.Request(url, data=json.dumps(payload).encode(),
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


# Small trained model and report, same recipe as the scan demo.
rng = np.random.default_rng(8)
dim = 10
vectors = np.vstack([
    np.tile([1.0] + [0.0] * (dim - 1), (10, 1)),
    np.tile([-1.0] + [0.0] * (dim - 1), (30, 1)),
]) + 0.2 * rng.standard_normal((40, dim))
vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)
ids = tuple(f"img-{i:02d}" for i in range(40))
store = EmbeddingStore(ids=ids, vectors=vectors.astype(np.float32), dim=dim,
                       normalized=True, name="review-demo")
labeled = LabeledSet(ids=ids, labels=np.array([1] * 10 + [0] * 30))
model = train(labeled, store, TrainConfig(epochs=60, batch_size=10, seed=16),
              init_prompts("class-mean", labeled, store))
report = scan(store, model)
print(f"report: {report.flagged_count} flagged of {report.total_count}")

# serve() binds, replays the log (empty on first run), and starts serving on
# a background thread. Port 0 lets the OS pick a free port.
service = serve(report, log_path=log_path, bind_address="127.0.0.1:0")
print(f"service at {service.url}")

summary = get(f"{service.url}/api/summary")
print(f"before review: {summary}")

# The review queue pages through flagged images, most suspicious first.
page = get(f"{service.url}/api/report?offset=0&limit=3&filter=pending")
for item in page["items"]:
    print(f"  {item['id']}  p={item['p']:.3f}")

# Record verdicts the way the UI's keyboard shortcuts do. Every POST is
# fsynced to the log before the acknowledgment comes back.
queue = [item["id"] for item in page["items"]]
post(f"{service.url}/api/decision",
     {"image_id": queue[0], "verdict": "confirm-inappropriate"})
post(f"{service.url}/api/decision",
     {"image_id": queue[1], "verdict": "reject-flag", "note": "false positive"})
post(f"{service.url}/api/decision", {"image_id": queue[2], "verdict": "unsure"})

summary = get(f"{service.url}/api/summary")
print(f"after three verdicts: confirmed {summary['confirmed']}, "
      f"rejected {summary['rejected']}, unsure {summary['unsure']}, "
      f"pending {summary['pending']}")

service.shutdown()

# The log is plain LDJSON, one decision per line, last verdict per image wins.
print(f"log lines: {len(log_path.read_text().splitlines())}")

# A fresh service (or a fresh DecisionLog) replays the same state.
replayed = DecisionLog(log_path)
for image_id, verdict in sorted(replayed.effective.items()):
    print(f"  {image_id}: {verdict}")

# Decisions also feed the datasheet's review summary.
datasheet = build_datasheet(report, AnnotationSet(by_id={}), CaptionSet(by_id={}),
                            decisions=replayed.effective)
print(f"datasheet review counts: confirmed {datasheet.review.confirmed}, "
      f"rejected {datasheet.review.rejected}, pending {datasheet.review.pending}")
