"""Surprisal scoring and mixed-effects condition statistics for
sentence-frame stimulus corpora."""

from .corpus import (
    Condition,
    ItemRef,
    ScoringInput,
    StimulusItem,
    experiments_in,
    parse_corpus,
    serialize_corpus,
    truncate_to_context,
)
from .errors import SurpstatError
from .external_scores import (
    ScoreFileHeader,
    TokenScoreRecord,
    detokenize,
    load_score_file,
    load_scores,
    to_word_surprisals,
    write_scores,
)
from .inference import bh_adjust, f_upper_tail
from .mixedmodel import (
    AnovaResult,
    FitConfig,
    FittedLMM,
    ModelSpec,
    fit_reml,
    reml_deviance_at,
    select_random_effects,
    type3_anova,
)
from .ngram import NGramBackend, NGramModel, tokenize_text, train
from .pipeline import (
    RunConfig,
    RunReport,
    condition_summary,
    emit_report,
    run,
    stats_from_table,
)
from .scoring import (
    ScoringBackend,
    TokenDistribution,
    WordSurprisal,
    score_corpus,
    word_surprisal,
)

__version__ = "0.1.0"

__all__ = [
    "AnovaResult",
    "Condition",
    "FitConfig",
    "FittedLMM",
    "ItemRef",
    "ModelSpec",
    "NGramBackend",
    "NGramModel",
    "RunConfig",
    "RunReport",
    "ScoreFileHeader",
    "ScoringBackend",
    "ScoringInput",
    "StimulusItem",
    "SurpstatError",
    "TokenDistribution",
    "TokenScoreRecord",
    "WordSurprisal",
    "bh_adjust",
    "condition_summary",
    "detokenize",
    "emit_report",
    "experiments_in",
    "f_upper_tail",
    "fit_reml",
    "load_score_file",
    "load_scores",
    "parse_corpus",
    "reml_deviance_at",
    "run",
    "score_corpus",
    "select_random_effects",
    "serialize_corpus",
    "stats_from_table",
    "to_word_surprisals",
    "tokenize_text",
    "train",
    "truncate_to_context",
    "type3_anova",
    "word_surprisal",
]
