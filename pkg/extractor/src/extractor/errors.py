"""Error taxonomy for the extractor."""


class ExtractorError(Exception):
    """Base class; the CLI maps these to a clean exit."""


class ConfigError(ExtractorError):
    """Bad or incomplete extraction config."""


class CheckpointError(ExtractorError):
    """A declared checkpoint could not be resolved or loaded."""

    def __init__(self, model_id: str, checkpoint: str, reason: str):
        self.model_id = model_id
        self.checkpoint = checkpoint
        super().__init__(
            f"model {model_id!r}: cannot load checkpoint {checkpoint!r}: {reason}"
        )


class CorpusError(ExtractorError):
    """Stimulus file is malformed."""
