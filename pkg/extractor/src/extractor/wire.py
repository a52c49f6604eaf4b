"""Serialize score lines in the JSONL wire format.

Headers declare per-model provenance (checkpoint, detokenization rule,
casefolding); every other line carries one (item, model) score record.
Keys are sorted so identical runs produce identical bytes.
"""

from __future__ import annotations

import json
from typing import List, Tuple

from .stimuli import StimulusRow

FORMAT_VERSION = 1


def header_line(
    model_id: str, checkpoint: str, rule: str, lowercases: bool
) -> str:
    payload = {
        "format_version": FORMAT_VERSION,
        "model_id": model_id,
        "checkpoint": checkpoint,
        "detokenize": rule,
    }
    if lowercases:
        payload["lowercases"] = True
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


def record_line(
    row: StimulusRow, model_id: str, pieces: List[Tuple[str, float]]
) -> str:
    payload = {
        "experiment_id": row.experiment_id,
        "frame_id": row.frame_id,
        "condition": row.condition,
        "model_id": model_id,
        "sub_tokens": [
            {"text": text, "surprisal_bits": bits} for text, bits in pieces
        ],
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)
