"""Ingest token-level surprisal files produced by an external extractor.

Wire format: UTF-8 JSON lines.  A header record (recognized by its
"format_version" field) declares, per model_id, the checkpoint and the
detokenization rule used to stitch sub-token texts back into words.  Every
other record carries the sub-token scores for one (item, model) pair:

    {"experiment_id": ..., "frame_id": ..., "condition": ...,
     "model_id": ..., "sub_tokens": [{"text": ..., "surprisal_bits": ...}]}

Surprisal is stored in bits.  A zero-probability word is marked with
"infinite": true and null surprisal_bits on the offending sub-tokens.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import IO, Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .corpus import Condition, ItemRef, StimulusItem
from .errors import InvalidScore, MalformedRow, TokenMismatch, UnknownItem
from .scoring import WordSurprisal

FORMAT_VERSION = 1

# leading sub-word markers for byte-level / sentencepiece vocabularies
_SPACE_MARKERS = ("Ġ", "▁", " ")

DETOKENIZE_RULES = ("concat", "strip_space_markers", "wordpiece")


def detokenize(texts: Sequence[str], rule: str = "concat") -> str:
    """Stitch sub-token texts into the surface word under the given rule."""
    if rule == "concat":
        return "".join(texts)
    if rule == "strip_space_markers":
        out = []
        for t in texts:
            while t[:1] in _SPACE_MARKERS:
                t = t[1:]
            out.append(t)
        return "".join(out)
    if rule == "wordpiece":
        return "".join(t[2:] if t.startswith("##") else t for t in texts)
    raise ValueError(f"unknown detokenization rule {rule!r}")


@dataclass(frozen=True)
class ScoreFileHeader:
    """Per-model provenance and detokenization declaration."""

    format_version: int
    model_id: str
    checkpoint: Optional[str] = None
    detokenize: str = "concat"
    lowercases: bool = False

    def __post_init__(self):
        if self.detokenize not in DETOKENIZE_RULES:
            raise ValueError(f"unknown detokenization rule {self.detokenize!r}")


@dataclass(frozen=True)
class TokenScoreRecord:
    """Sub-token surprisals for one (item, model) pair."""

    item_ref: ItemRef
    model_id: str
    sub_tokens: Tuple[Tuple[str, float], ...]  # (text, surprisal_bits)
    infinite: bool = False

    def __post_init__(self):
        if not self.sub_tokens:
            raise InvalidScore(f"{self.item_ref}: record has no sub_tokens")
        for text, bits in self.sub_tokens:
            if math.isnan(bits) or bits < 0.0:
                raise InvalidScore(
                    f"{self.item_ref}: sub-token {text!r} has surprisal {bits!r}"
                )
            if math.isinf(bits) and not self.infinite:
                raise InvalidScore(
                    f"{self.item_ref}: infinite surprisal without infinite flag"
                )

    def total_bits(self) -> float:
        if self.infinite:
            return math.inf
        return sum(bits for _, bits in self.sub_tokens)


def _record_from_payload(payload: dict, line: int) -> TokenScoreRecord:
    try:
        condition = Condition.parse(str(payload["condition"]), line)
        item_ref = ItemRef(
            experiment_id=str(payload["experiment_id"]),
            frame_id=str(payload["frame_id"]),
            condition=condition,
        )
        infinite = bool(payload.get("infinite", False))
        sub_tokens = []
        for entry in payload["sub_tokens"]:
            bits = entry["surprisal_bits"]
            if bits is None:
                if not infinite:
                    raise InvalidScore(
                        f"line {line}: null surprisal_bits without infinite flag"
                    )
                bits = math.inf
            sub_tokens.append((str(entry["text"]), float(bits)))
        return TokenScoreRecord(
            item_ref=item_ref,
            model_id=str(payload["model_id"]),
            sub_tokens=tuple(sub_tokens),
            infinite=infinite,
        )
    except KeyError as exc:
        raise MalformedRow(line, f"score record missing field {exc.args[0]!r}")


def _header_from_payload(payload: dict, line: int) -> ScoreFileHeader:
    try:
        return ScoreFileHeader(
            format_version=int(payload["format_version"]),
            model_id=str(payload["model_id"]),
            checkpoint=payload.get("checkpoint"),
            detokenize=str(payload.get("detokenize", "concat")),
            lowercases=bool(payload.get("lowercases", False)),
        )
    except KeyError as exc:
        raise MalformedRow(line, f"header missing field {exc.args[0]!r}")
    except ValueError as exc:
        raise MalformedRow(line, str(exc))


def load_score_file(
    stream: Union[IO, bytes, str],
    corpus: Optional[Sequence[StimulusItem]] = None,
) -> Tuple[Dict[str, ScoreFileHeader], List[TokenScoreRecord]]:
    """Parse a score stream into (headers by model_id, records in order).

    With a corpus supplied, every record must name a known item and its
    sub-token texts must detokenize to that item's critical word under the
    model's declared rule.
    """
    if isinstance(stream, bytes):
        text = stream.decode("utf-8")
    elif isinstance(stream, str):
        text = stream
    else:
        raw = stream.read()
        text = raw.decode("utf-8") if isinstance(raw, bytes) else raw

    by_ref = None
    if corpus is not None:
        by_ref = {item.ref: item for item in corpus}

    headers: Dict[str, ScoreFileHeader] = {}
    records: List[TokenScoreRecord] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRow(line_no, f"invalid JSON: {exc.msg}")
        if not isinstance(payload, dict):
            raise MalformedRow(line_no, "record is not an object")
        if "format_version" in payload:
            header = _header_from_payload(payload, line_no)
            headers[header.model_id] = header
            continue
        record = _record_from_payload(payload, line_no)
        if by_ref is not None:
            item = by_ref.get(record.item_ref)
            if item is None:
                raise UnknownItem(record.item_ref)
            header = headers.get(record.model_id)
            rule = header.detokenize if header else "concat"
            got = detokenize([t for t, _ in record.sub_tokens], rule)
            expected = item.critical_word
            if header is not None and header.lowercases:
                got, expected = got.lower(), expected.lower()
            if got != expected:
                raise TokenMismatch(record.item_ref, got, item.critical_word)
        records.append(record)
    return headers, records


def load_scores(
    stream: Union[IO, bytes, str],
    corpus: Optional[Sequence[StimulusItem]] = None,
) -> List[TokenScoreRecord]:
    """Validated TokenScoreRecords from a line-delimited score stream."""
    return load_score_file(stream, corpus)[1]


def to_word_surprisals(records: Iterable[TokenScoreRecord]) -> List[WordSurprisal]:
    """Whole-word surprisals: sum of sub-token bits per record."""
    return [
        WordSurprisal(
            item_ref=r.item_ref,
            model_id=r.model_id,
            surprisal_bits=r.total_bits(),
            n_subtokens=len(r.sub_tokens),
        )
        for r in records
    ]


def write_scores(
    fp: IO[str],
    headers: Iterable[ScoreFileHeader],
    records: Iterable[TokenScoreRecord],
) -> None:
    """Emit headers then records as deterministic JSON lines."""
    for h in headers:
        payload = {
            "format_version": h.format_version,
            "model_id": h.model_id,
            "detokenize": h.detokenize,
        }
        if h.checkpoint is not None:
            payload["checkpoint"] = h.checkpoint
        if h.lowercases:
            payload["lowercases"] = True
        fp.write(json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n")
    for r in records:
        payload = {
            "experiment_id": r.item_ref.experiment_id,
            "frame_id": r.item_ref.frame_id,
            "condition": r.item_ref.condition.value,
            "model_id": r.model_id,
            "sub_tokens": [
                {"text": text, "surprisal_bits": None if math.isinf(bits) else bits}
                for text, bits in r.sub_tokens
            ],
        }
        if r.infinite:
            payload["infinite"] = True
        fp.write(json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n")
