"""Exception types shared across the package."""

from __future__ import annotations


class SurpstatError(Exception):
    """Base class for all errors raised by this package."""


# -- corpus ------------------------------------------------------------------

class CorpusError(SurpstatError):
    pass


class DuplicateItem(CorpusError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"duplicate (experiment_id, frame_id, condition): {key!r}")


class MalformedRow(CorpusError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class UnknownCondition(CorpusError):
    def __init__(self, label, line=None):
        self.label = label
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}unknown condition label {label!r}")


# -- scoring -----------------------------------------------------------------

class ScoringError(SurpstatError):
    pass


class EmptyTokenization(ScoringError):
    def __init__(self, word):
        self.word = word
        super().__init__(f"target {word!r} tokenizes to zero tokens")


class BackendError(ScoringError):
    def __init__(self, cause, item_ref=None):
        self.cause = cause
        self.item_ref = item_ref
        where = f" while scoring {item_ref}" if item_ref is not None else ""
        super().__init__(f"backend failure{where}: {cause}")


class EmptyCorpus(SurpstatError):
    pass


# -- external scores ---------------------------------------------------------

class ScoreFileError(SurpstatError):
    pass


class TokenMismatch(ScoreFileError):
    def __init__(self, item_ref, got, expected):
        self.item_ref = item_ref
        super().__init__(
            f"{item_ref}: sub-tokens detokenize to {got!r}, item word is {expected!r}"
        )


class InvalidScore(ScoreFileError):
    pass


class UnknownItem(ScoreFileError):
    def __init__(self, item_ref):
        self.item_ref = item_ref
        super().__init__(f"score record for unknown item {item_ref}")


# -- mixed model -------------------------------------------------------------

class MixedModelError(SurpstatError):
    pass


class RankDeficient(MixedModelError):
    pass


class NotConverged(MixedModelError):
    pass


class SelectionFailed(MixedModelError):
    def __init__(self, attempts):
        self.attempts = attempts
        lines = "; ".join(
            f"{list(spec.random_intercepts)}: {reason}" for spec, reason in attempts
        )
        super().__init__(f"no random-effects structure converged ({lines})")


# -- inference ---------------------------------------------------------------

class InvalidDf(SurpstatError):
    pass


class InvalidP(SurpstatError):
    pass


# -- pipeline ----------------------------------------------------------------

class ConfigError(SurpstatError):
    pass


class EmptyGroup(SurpstatError):
    pass


class PipelineError(SurpstatError):
    """Wraps a module error with the (model, experiment, item) it occurred in."""

    def __init__(self, cause, model_id=None, experiment_id=None, item_ref=None):
        self.cause = cause
        self.model_id = model_id
        self.experiment_id = experiment_id
        self.item_ref = item_ref
        ctx = ", ".join(
            f"{k}={v}"
            for k, v in [
                ("model", model_id),
                ("experiment", experiment_id),
                ("item", item_ref),
            ]
            if v is not None
        )
        super().__init__(f"[{ctx}] {cause}")
