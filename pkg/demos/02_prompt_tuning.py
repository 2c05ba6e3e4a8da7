# Soft prompt tuning
# ==================
#
# The classifier is a pair of learned prompt vectors, one per class, scored
# against image embeddings by cosine similarity. Training moves only the
# prompts; the image embeddings stay frozen. This demo trains on a synthetic
# separable set, cross-validates, and traces the few-shot curve.

import numpy as np

from q16doc import (
    EmbeddingStore,
    LabeledSet,
    TrainConfig,
    cross_validate,
    evaluate,
    fewshot_curve,
    init_prompts,
    score_batch,
    train,
)

# Two classes of unit vectors around opposite anchors. Class 1 plays the
# "potentially inappropriate" role.
rng = np.random.default_rng(16)
n_per_class, dim = 30, 16
anchor = np.zeros(dim)
anchor[0] = 1.0
pos = anchor + 0.25 * rng.standard_normal((n_per_class, dim))
neg = -anchor + 0.25 * rng.standard_normal((n_per_class, dim))
vectors = np.vstack([neg, pos])
vectors /= np.linalg.norm(vectors, axis=1, keepdims=True)

ids = tuple(f"img-{i:03d}" for i in range(2 * n_per_class))
store = EmbeddingStore(ids=ids, vectors=vectors.astype(np.float32), dim=dim,
                       normalized=True, name="tuning-demo")
labels = np.array([0] * n_per_class + [1] * n_per_class)
labeled = LabeledSet(ids=ids, labels=labels)

# class-mean init starts each prompt at the normalized mean of its class,
# which converges much faster than random directions.
config = TrainConfig(epochs=120, batch_size=16, seed=16)
init = init_prompts("class-mean", labeled, store, seed=config.seed)
model = train(labeled, store, config, init)
print(f"trained {model.prompts.matrix.shape} prompts, "
      f"final loss {model.loss_history[-1]:.6f}")

probs = score_batch(store.vectors, model.prompts, model.config.logit_scale)
train_acc = float((probs.argmax(axis=1) == labels).mean())
print(f"training accuracy: {train_acc:.3f}")

# evaluate() reports accuracy/precision/recall/f1 for class 1.
metrics = evaluate(model, labeled, store)
print(f"on the training set: acc {metrics.mean.accuracy:.3f} "
      f"precision {metrics.mean.precision:.3f} recall {metrics.mean.recall:.3f}")

# Stratified k-fold cross-validation is the honest number.
cv = cross_validate(labeled, store, TrainConfig(epochs=60, seed=16), k=5)
print(f"5-fold accuracy: {cv.mean.accuracy:.3f} (+/- {cv.std.accuracy:.3f})")

# The few-shot curve retrains on shrinking fractions of each fold's training
# split. Useful for judging how much labeling effort the method needs.
curve = fewshot_curve(labeled, store, TrainConfig(epochs=60, seed=16),
                      fractions=(0.25, 0.5, 1.0), k=5)
for fraction, fold_metrics in sorted(curve.items()):
    print(f"  fraction {fraction:.2f}: accuracy {fold_metrics.mean.accuracy:.3f}")
