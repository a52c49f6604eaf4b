"""Drive the extraction: models x items, single append-only writer."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Tuple

from .config import ExtractorConfig
from .scorers import load_model
from .stimuli import StimulusRow, read_stimuli
from .wire import header_line, record_line

log = logging.getLogger(__name__)


@dataclass
class ExtractionSummary:
    output: str
    n_models: int
    n_records: int
    skipped: Tuple[str, ...] = ()


def _is_oom(exc: BaseException) -> bool:
    # torch.OutOfMemoryError subclasses RuntimeError; driver OOMs sometimes
    # surface as plain RuntimeError with the phrase in the message
    return isinstance(exc, RuntimeError) and "out of memory" in str(exc).lower()


def extract(config: ExtractorConfig) -> ExtractionSummary:
    """Score every (item, model) pair and write the score file.

    A model whose checkpoint cannot be resolved is fatal.  A model that runs
    out of memory is skipped with a warning and the remaining models still
    run; nothing from the skipped model reaches the output.
    """
    rows = read_stimuli(config.corpus)
    log.info("scoring %d items with %d models", len(rows), len(config.models))

    skipped: List[str] = []
    n_records = 0
    with open(config.output, "w", encoding="utf-8") as out:
        for decl in config.models:
            try:
                lines = _score_model(decl, rows, config.device)
            except RuntimeError as exc:
                if not _is_oom(exc):
                    raise
                log.warning(
                    "model %s: out of memory, skipping (%s)", decl.model_id, exc
                )
                skipped.append(decl.model_id)
                continue
            for line in lines:
                out.write(line + "\n")
            n_records += len(lines) - 1  # header line is not a record
            log.info("model %s: %d records", decl.model_id, len(lines) - 1)

    return ExtractionSummary(
        output=str(config.output),
        n_models=len(config.models) - len(skipped),
        n_records=n_records,
        skipped=tuple(skipped),
    )


def _score_model(decl, rows: List[StimulusRow], device: str) -> List[str]:
    # buffer the whole model block so an OOM mid-model leaves no partial
    # output behind
    lm = load_model(decl, device)
    lines = [header_line(decl.model_id, decl.checkpoint, lm.rule, lm.lowercases)]
    for row in rows:
        pieces = lm.score_word(row.pre_context, row.critical_word)
        lines.append(record_line(row, decl.model_id, pieces))
    return lines
