"""q16doc: dataset documentation from precomputed image embeddings.

Learns soft prompt embeddings that separate potentially inappropriate images
from counterexamples, scans whole datasets into flag reports, renders the
Question-16 datasheet answer (flag ratio plus three word clouds), and runs a
local human-in-the-loop review service.
"""

__version__ = "0.1.0"

from . import errors
from .docgen import (
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
    render,
    render_json,
    render_markdown,
    render_svg_cloud,
    summarize_verdicts,
    term_image_counts,
    tokenize,
)
from .kernels import (
    DEFAULT_LOGIT_SCALE,
    Pca2Result,
    PromptEmbeddings,
    ScoreVector,
    batch_loss,
    cosine_similarity,
    loss_gradient,
    one_hot,
    pca2,
    score,
    score_batch,
    softmax,
)
from .review import (
    Decision,
    DecisionLog,
    ReviewService,
    VERDICTS,
    serve,
)
from .scan import (
    FlagEntry,
    FlagReport,
    ReportDiff,
    diff_reports,
    flag_ratio,
    load_report,
    report_to_bytes,
    save_report,
    scan,
)
from .stopwords import BUILTIN_STOPWORDS, load_stopwords
from .store import (
    AnnotationSet,
    CaptionSet,
    EmbeddingStore,
    load_annotations,
    load_captions,
    load_store,
    save_store,
)
from .tuning import (
    DEFAULT_CLASS_NAMES,
    DEFAULT_SEED,
    EvalMetrics,
    FoldMetrics,
    LabeledSet,
    MetricSummary,
    PromptModel,
    RatedSet,
    TrainConfig,
    binarize,
    cross_validate,
    evaluate,
    fewshot_curve,
    init_prompts,
    kfold_split,
    load_labels,
    load_model,
    load_ratings,
    save_model,
    train,
)
