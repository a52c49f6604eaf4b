"""Stimulus corpora: parsing, validation, and scoring-input preparation.

A corpus is a flat list of items, one per (experiment, sentence frame,
condition) cell.  Two on-disk formats are supported: a tab-delimited table
with a header line, and a JSON tree with the same field names.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Union

from .errors import DuplicateItem, MalformedRow, UnknownCondition

COLUMNS = (
    "experiment_id",
    "frame_id",
    "condition",
    "pre_context",
    "post_context",
    "critical_word",
    "cloze",
)


class Condition(enum.Enum):
    PREDICTABLE = "Predictable"
    RELATED = "Related"
    UNRELATED = "Unrelated"

    def __str__(self):
        return self.value

    @classmethod
    def parse(cls, label: str, line=None) -> "Condition":
        for member in cls:
            if member.value == label:
                return member
        raise UnknownCondition(label, line)


@dataclass(frozen=True, order=True)
class ItemRef:
    """Identity of one corpus item: (experiment_id, frame_id, condition)."""

    experiment_id: str
    frame_id: str
    condition: Condition

    def __str__(self):
        return f"{self.experiment_id}/{self.frame_id}/{self.condition.value}"


@dataclass(frozen=True)
class StimulusItem:
    experiment_id: str
    frame_id: str
    condition: Condition
    pre_context: str
    post_context: str
    critical_word: str
    cloze: float | None = None

    def __post_init__(self):
        if not self.critical_word:
            raise ValueError("critical_word is empty")
        if self.critical_word != self.critical_word.strip():
            raise ValueError(
                f"critical_word {self.critical_word!r} has surrounding whitespace"
            )
        if self.cloze is not None and not (0.0 <= self.cloze <= 1.0):
            raise ValueError(f"cloze {self.cloze!r} outside [0, 1]")

    @property
    def ref(self) -> ItemRef:
        return ItemRef(self.experiment_id, self.frame_id, self.condition)


@dataclass(frozen=True)
class ScoringInput:
    """What a backend sees: the preceding context and the target word only."""

    item_ref: ItemRef
    context: str
    target_word: str


def truncate_to_context(item: StimulusItem) -> ScoringInput:
    """Build the scoring input for an item.

    The context is the item's pre_context verbatim; post_context never
    enters the default scoring path.
    """
    return ScoringInput(
        item_ref=item.ref, context=item.pre_context, target_word=item.critical_word
    )


def _decode(source: Union[bytes, BinaryIO]) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def _item_from_fields(fields: dict, line) -> StimulusItem:
    missing = [c for c in COLUMNS[:-1] if fields.get(c) is None]
    if missing:
        raise MalformedRow(line, f"missing required field(s) {missing}")
    condition = fields["condition"]
    if not isinstance(condition, Condition):
        condition = Condition.parse(str(condition), line)
    cloze = fields.get("cloze")
    if cloze in (None, ""):
        cloze = None
    else:
        try:
            cloze = float(cloze)
        except (TypeError, ValueError):
            raise MalformedRow(line, f"cloze {cloze!r} is not a number")
    try:
        return StimulusItem(
            experiment_id=str(fields["experiment_id"]),
            frame_id=str(fields["frame_id"]),
            condition=condition,
            pre_context=str(fields["pre_context"]),
            post_context=str(fields["post_context"]),
            critical_word=str(fields["critical_word"]),
            cloze=cloze,
        )
    except ValueError as exc:
        raise MalformedRow(line, str(exc))


def parse_corpus(source, format: str = "delimited") -> list[StimulusItem]:
    """Parse and validate a corpus from a byte stream or bytes.

    format "delimited" is the tab-separated table; "structured" is the JSON
    tree (a list of objects, or {"items": [...]}).  Row order is preserved.
    Raises DuplicateItem, MalformedRow, or UnknownCondition.
    """
    text = _decode(source)
    if format == "delimited":
        items = list(_parse_delimited(text))
    elif format == "structured":
        items = list(_parse_structured(text))
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    seen = set()
    for item in items:
        if item.ref in seen:
            raise DuplicateItem(
                (item.experiment_id, item.frame_id, item.condition.value)
            )
        seen.add(item.ref)
    return items


def _parse_delimited(text: str) -> Iterable[StimulusItem]:
    reader = csv.reader(io.StringIO(text), delimiter="\t")
    try:
        header = next(reader)
    except StopIteration:
        return
    unknown = [h for h in header if h not in COLUMNS]
    if unknown:
        raise MalformedRow(1, f"unknown column(s) {unknown}")
    for line, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and row[0] == ""):
            continue
        if len(row) != len(header):
            raise MalformedRow(line, f"expected {len(header)} fields, got {len(row)}")
        yield _item_from_fields(dict(zip(header, row)), line)


def _parse_structured(text: str) -> Iterable[StimulusItem]:
    if not text.strip():
        return
    tree = json.loads(text)
    if isinstance(tree, dict):
        tree = tree.get("items", [])
    for i, obj in enumerate(tree, start=1):
        if not isinstance(obj, dict):
            raise MalformedRow(i, f"expected an object, got {type(obj).__name__}")
        yield _item_from_fields(obj, i)


def serialize_corpus(items: Iterable[StimulusItem], format: str = "delimited") -> bytes:
    """Inverse of parse_corpus: parse_corpus(serialize_corpus(items)) == items."""
    items = list(items)
    if format == "delimited":
        buf = io.StringIO()
        writer = csv.writer(buf, delimiter="\t", lineterminator="\n")
        writer.writerow(COLUMNS)
        for item in items:
            writer.writerow(
                [
                    item.experiment_id,
                    item.frame_id,
                    item.condition.value,
                    item.pre_context,
                    item.post_context,
                    item.critical_word,
                    "" if item.cloze is None else repr(item.cloze),
                ]
            )
        return buf.getvalue().encode("utf-8")
    if format == "structured":
        tree = []
        for item in items:
            obj = {
                "experiment_id": item.experiment_id,
                "frame_id": item.frame_id,
                "condition": item.condition.value,
                "pre_context": item.pre_context,
                "post_context": item.post_context,
                "critical_word": item.critical_word,
            }
            if item.cloze is not None:
                obj["cloze"] = item.cloze
            tree.append(obj)
        return json.dumps({"items": tree}, indent=2, ensure_ascii=False).encode("utf-8")
    raise ValueError(f"unknown corpus format {format!r}")


def experiments_in(items: Iterable[StimulusItem]) -> list[str]:
    """Experiment ids in first-appearance order."""
    seen: dict[str, None] = {}
    for item in items:
        seen.setdefault(item.experiment_id, None)
    return list(seen)
