"""Transformer checkpoint scoring for stimulus corpora.

Runs declared checkpoints (causal or masked) over a stimulus file and
emits per-sub-token surprisals in the JSONL score format.
"""

from .config import ExtractorConfig, ModelDecl, from_file, from_mapping
from .errors import CheckpointError, ConfigError, CorpusError, ExtractorError
from .runner import ExtractionSummary, extract
from .scorers import LoadedModel, detokenize_rule, load_model
from .stimuli import StimulusRow, read_stimuli
from .wire import FORMAT_VERSION

__all__ = [
    "CheckpointError",
    "ConfigError",
    "CorpusError",
    "ExtractionSummary",
    "ExtractorConfig",
    "ExtractorError",
    "FORMAT_VERSION",
    "LoadedModel",
    "ModelDecl",
    "StimulusRow",
    "detokenize_rule",
    "extract",
    "from_file",
    "from_mapping",
    "load_model",
    "read_stimuli",
]
