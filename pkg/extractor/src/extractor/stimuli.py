"""Minimal reader for the tab-separated stimulus format.

Only the columns the extractor needs are required; extra columns (cloze
norms, post context) are carried by the file format but ignored here.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List

from .errors import CorpusError

REQUIRED = ("experiment_id", "frame_id", "condition", "pre_context", "critical_word")

# condition labels admitted by the score-file format
CONDITIONS = ("Predictable", "Related", "Unrelated")


@dataclass(frozen=True)
class StimulusRow:
    experiment_id: str
    frame_id: str
    condition: str
    pre_context: str
    critical_word: str

    @property
    def key(self):
        return (self.experiment_id, self.frame_id, self.condition)


def read_stimuli(path: Path) -> List[StimulusRow]:
    try:
        fp = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise CorpusError(f"cannot read stimulus file {path}: {exc}")
    with fp:
        reader = csv.DictReader(fp, delimiter="\t")
        if reader.fieldnames is None:
            raise CorpusError(f"{path}: empty stimulus file")
        missing = [c for c in REQUIRED if c not in reader.fieldnames]
        if missing:
            raise CorpusError(f"{path}: missing columns: {', '.join(missing)}")
        rows = []
        seen = set()
        for lineno, rec in enumerate(reader, start=2):
            if any(rec.get(c) is None for c in REQUIRED):
                raise CorpusError(f"{path}:{lineno}: short row")
            row = StimulusRow(*(rec[c] for c in REQUIRED))
            if row.condition not in CONDITIONS:
                raise CorpusError(
                    f"{path}:{lineno}: unknown condition {row.condition!r}"
                )
            if not row.critical_word:
                raise CorpusError(f"{path}:{lineno}: empty critical_word")
            if row.key in seen:
                raise CorpusError(f"{path}:{lineno}: duplicate item {row.key}")
            seen.add(row.key)
            rows.append(row)
    if not rows:
        raise CorpusError(f"{path}: no stimulus rows")
    return rows
