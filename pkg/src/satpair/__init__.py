"""satpair: contrastive vision-language training and evaluation at desk scale.

Trains linear projection heads over frozen image/text features with symmetric
InfoNCE, and evaluates embeddings on retrieval, zero-shot classification,
semantic localization, linear probing, and k-NN — plus the dataset-side
plumbing: crop planning, a two-prompt captioning client, manifests, and
caption statistics.
"""

from .captions import (
    PROMPT_DETAIL,
    PROMPT_IDS,
    PROMPT_SHORT,
    PROMPT_TEXTS,
    CaptionClientConfig,
    caption_image,
    prompt_text,
)
from .crops import CropRect, random_resized_crop_plan, resize_center_crop_plan, round_half_up
from .embed_io import read_embeddings, read_ids, write_embeddings, write_ids
from .errors import (
    BadMagicError,
    BadTemplateError,
    ClassTooSmallError,
    ConvergenceWarning,
    DimMismatchError,
    DuplicateKeyError,
    EmptyInputError,
    EndpointDownError,
    InsufficientShotsError,
    KOutOfRangeError,
    KTooLargeError,
    LengthMismatchError,
    MalformedResponseError,
    NaNScoreError,
    NonPositiveTemperatureError,
    NotNormalizedError,
    NoWindowsError,
    SatpairError,
    ShapeMismatchError,
    StepOutOfRangeError,
    TruncatedFileError,
    VersionUnsupportedError,
    WeightSumInvalidError,
    WindowTooLargeError,
    ZeroRowError,
)
from .manifest import ImageRef, ManifestRecord, build_manifest, merge_manifests, read_manifest, write_manifest
from .matrix import EmbeddingMatrix, SimilarityMatrix, l2_normalize, similarity
from .probe import (
    FULL,
    SHOT_CHOICES,
    LabeledFeatures,
    LogRegModel,
    ProbeConfig,
    knn_classify,
    logreg_fit,
    logreg_objective,
    logreg_predict,
    sample_k_shot,
    stratified_split,
)
from .retrieval import PairedSet, RetrievalReport, rank_row, recall_at_k, retrieval_report
from .rng import derive_rng, make_rng
from .semloc import (
    GroundTruthRegion,
    SemLocMap,
    SemLocWeights,
    prob_centroid,
    r_as,
    r_da,
    r_mi,
    r_su,
    semloc_report,
    similarity_map,
    window_grid,
)
from .textstats import (
    CaptionStats,
    Histogram,
    caption_length_histogram,
    caption_stats,
    caption_word_count,
    default_stoplist,
    load_stoplist,
    token_frequency,
    tokenize,
)
from .train import (
    HeadGrads,
    OptimizerState,
    ProjectionHead,
    TrainConfig,
    adamw_step,
    cosine_warmup_lr,
    effective_lr,
    fit,
    info_nce_grad,
    info_nce_loss,
    load_head,
    project,
    project_backward,
    save_head,
)
from .zeroshot import (
    DEFAULT_TEMPLATE,
    TEMPLATE_A,
    TEMPLATE_THE,
    TEMPLATES,
    PromptTemplate,
    ZeroShotReport,
    build_prompts,
    top1_accuracy,
    zeroshot_classify,
)

__version__ = "0.1.0"
