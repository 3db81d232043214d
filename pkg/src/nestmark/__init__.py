"""nestmark: nested two-key statistical watermarks for token streams.

Embed layered keyed watermarks while decoding from any logit source,
recover them with two-stage z-tests, and measure error rates with a
reproducible Monte-Carlo harness on synthetic language models.
"""

from .core import (
    DEFAULT_DELTA_1,
    DEFAULT_DELTA_2,
    DEFAULT_GAMMA,
    DEFAULT_MAX_TOKENS,
    DEFAULT_THETA,
    DegenerateSampleError,
    DuplicateOffsetError,
    EmptyLayersError,
    EmptyStreamError,
    GammaOutOfRangeError,
    GenerationParams,
    ModelMismatchError,
    ModelSpecError,
    PositionOutOfRangeError,
    SchemeValidationError,
    TokenId,
    UnknownAxisError,
    VocabMismatchError,
    VocabSpec,
    WatermarkError,
    WatermarkLayer,
    WatermarkScheme,
    default_scheme,
    load_scheme,
    save_scheme,
    scheme_from_json,
    scheme_to_json,
    validate_scheme,
)
from .detector import DetectionReport, count_hits, detect, render_html, z_first, z_second
from .evaluation import (
    QualityComparison,
    TrialBatch,
    TrialConfig,
    TrialRecord,
    quality_proxy,
    run_batch,
    sweep,
)
from .generator import (
    FLAG_G1,
    FLAG_G2,
    FLAG_NONE,
    FLAG_SKIP,
    GenerationRecord,
    bias_logits,
    generate,
    softmax,
)
from .partition import (
    GroupMembership,
    groups_at,
    membership,
    nested_group_masks,
    prf_seed,
    splitmix64,
    uniform_draw,
)
from .synthetic_lm import (
    LogitSource,
    SeededGaussianLM,
    UniformLM,
    parse_model_spec,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_DELTA_1",
    "DEFAULT_DELTA_2",
    "DEFAULT_GAMMA",
    "DEFAULT_MAX_TOKENS",
    "DEFAULT_THETA",
    "DegenerateSampleError",
    "DetectionReport",
    "DuplicateOffsetError",
    "EmptyLayersError",
    "EmptyStreamError",
    "FLAG_G1",
    "FLAG_G2",
    "FLAG_NONE",
    "FLAG_SKIP",
    "GammaOutOfRangeError",
    "GenerationParams",
    "GenerationRecord",
    "GroupMembership",
    "LogitSource",
    "ModelMismatchError",
    "ModelSpecError",
    "PositionOutOfRangeError",
    "QualityComparison",
    "SchemeValidationError",
    "SeededGaussianLM",
    "TokenId",
    "TrialBatch",
    "TrialConfig",
    "TrialRecord",
    "UniformLM",
    "UnknownAxisError",
    "VocabMismatchError",
    "VocabSpec",
    "WatermarkError",
    "WatermarkLayer",
    "WatermarkScheme",
    "bias_logits",
    "count_hits",
    "default_scheme",
    "detect",
    "generate",
    "groups_at",
    "load_scheme",
    "membership",
    "nested_group_masks",
    "parse_model_spec",
    "prf_seed",
    "quality_proxy",
    "render_html",
    "run_batch",
    "save_scheme",
    "scheme_from_json",
    "scheme_to_json",
    "softmax",
    "splitmix64",
    "sweep",
    "uniform_draw",
    "validate_scheme",
    "z_first",
    "z_second",
]
