"""Per-word surprisal in bits from backend token probabilities.

A word's surprisal is the sum over its sub-word tokens t_1..t_k of
-log2 P(t_i | context + t_1..t_{i-1}), i.e. the negative base-2 log of the
joint probability of the word given the preceding context.
"""

from __future__ import annotations

import abc
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .corpus import ItemRef, ScoringInput, StimulusItem, truncate_to_context
from .errors import BackendError, EmptyTokenization, ScoringError

log = logging.getLogger(__name__)

PROB_SUM_TOL = 1e-6


@dataclass(frozen=True)
class TokenDistribution:
    """A conditional next-token distribution over a backend's vocabulary."""

    vocabulary_ids: tuple
    probabilities: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        probs = np.asarray(self.probabilities, dtype=float)
        if len(self.vocabulary_ids) != probs.shape[0]:
            raise ValueError("vocabulary_ids and probabilities differ in length")
        if np.any(probs < 0):
            raise ValueError("negative probability in distribution")
        total = float(probs.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(
            self, "_index", {t: i for i, t in enumerate(self.vocabulary_ids)}
        )

    def probability(self, token_id) -> float:
        """P(token_id); tokens outside the vocabulary have probability 0."""
        i = self._index.get(token_id)
        return float(self.probabilities[i]) if i is not None else 0.0


class ScoringBackend(abc.ABC):
    """Contract a probability source must fulfil to be scored against.

    Implementations must be deterministic: identical inputs yield identical
    distributions.  `encodes_leading_space` declares whether the tokenizer
    represents the space between context and target inside the target's
    first token (byte-level BPE style); the scoring layer inserts the single
    joining space accordingly.
    """

    model_id: str
    mode: str  # "causal" or "masked"
    encodes_leading_space: bool = False

    @abc.abstractmethod
    def tokenize(self, text: str, context: str) -> list:
        """Token ids of `text` read as a continuation of `context`."""

    @abc.abstractmethod
    def tokenize_context(self, context: str) -> list:
        """Token ids of a bare context string."""

    @abc.abstractmethod
    def next_token_distribution(
        self, context_tokens: Sequence, right_context_tokens: Optional[Sequence] = None
    ) -> TokenDistribution:
        """Distribution of the next token after `context_tokens`.

        Masked backends fill one mask slot after the left context;
        `right_context_tokens`, when given, follow the slot.
        """


@dataclass(frozen=True)
class WordSurprisal:
    item_ref: ItemRef
    model_id: str
    surprisal_bits: float
    n_subtokens: int

    def __post_init__(self):
        if math.isnan(self.surprisal_bits) or self.surprisal_bits < 0:
            raise ValueError(f"surprisal_bits {self.surprisal_bits!r} is negative")
        if self.n_subtokens < 1:
            raise ValueError("n_subtokens must be >= 1")

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.surprisal_bits)


@dataclass
class ScoringRun:
    """score_corpus output: one surprisal per scored item, plus failures."""

    surprisals: list
    failures: list  # (ItemRef, exception) pairs, collect policy only

    @property
    def infinite_count(self) -> int:
        return sum(1 for s in self.surprisals if s.is_infinite)


def _target_text(backend: ScoringBackend, word: str) -> str:
    # single space joins context and word; it lives inside the target's
    # tokens only when the tokenizer encodes leading whitespace
    return (" " + word) if backend.encodes_leading_space else word


def word_surprisal(
    backend: ScoringBackend,
    scoring_input: ScoringInput,
    *,
    right_context: Optional[str] = None,
) -> WordSurprisal:
    """Surprisal in bits of the target word given its preceding context.

    Sub-token probabilities are chained left to right; a zero-probability
    sub-token makes the result +inf (logged, never raised).  `right_context`
    is forwarded to masked backends only.
    """
    try:
        context_tokens = backend.tokenize_context(scoring_input.context)
        target_tokens = backend.tokenize(
            _target_text(backend, scoring_input.target_word), scoring_input.context
        )
    except ScoringError:
        raise
    except Exception as exc:
        raise BackendError(exc, scoring_input.item_ref)
    if not target_tokens:
        raise EmptyTokenization(scoring_input.target_word)

    right_tokens = None
    if right_context is not None and backend.mode == "masked" and right_context != "":
        right_tokens = backend.tokenize_context(right_context)

    bits = 0.0
    prefix = list(context_tokens)
    for token in target_tokens:
        try:
            dist = backend.next_token_distribution(prefix, right_tokens)
        except Exception as exc:
            raise BackendError(exc, scoring_input.item_ref)
        p = dist.probability(token)
        if p <= 0.0:
            log.warning(
                "zero probability for sub-token %r of %r (%s); surprisal is +inf",
                token,
                scoring_input.target_word,
                scoring_input.item_ref,
            )
            bits = math.inf
        else:
            bits += -math.log2(p)
        prefix.append(token)

    return WordSurprisal(
        item_ref=scoring_input.item_ref,
        model_id=backend.model_id,
        surprisal_bits=bits,
        n_subtokens=len(target_tokens),
    )


def score_corpus(
    backend: ScoringBackend,
    items: Sequence[StimulusItem],
    *,
    include_right_context: bool = False,
    policy: str = "fail_fast",
) -> ScoringRun:
    """Score every item's critical word; order preserved, deterministic.

    policy "fail_fast" raises the first per-item error (with item_ref
    attached); "collect" records failures and keeps going.
    """
    if policy not in ("fail_fast", "collect"):
        raise ValueError(f"unknown error policy {policy!r}")
    surprisals, failures = [], []
    for item in items:
        scoring_input = truncate_to_context(item)
        right = item.post_context if include_right_context else None
        try:
            surprisals.append(
                word_surprisal(backend, scoring_input, right_context=right)
            )
        except ScoringError as exc:
            if getattr(exc, "item_ref", None) is None:
                exc = BackendError(exc, item.ref)
            if policy == "fail_fast":
                raise exc
            failures.append((item.ref, exc))
    return ScoringRun(surprisals=surprisals, failures=failures)
