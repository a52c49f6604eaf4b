"""Trainable interpolated n-gram language model and its scoring backend.

Smoothing is absolute discounting with interpolation: at each order the
discounted relative frequency is mixed with the next-lower-order estimate,
bottoming out in a uniform distribution over the vocabulary.  Every
in-vocabulary token therefore keeps strictly positive probability.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, List, Optional, Sequence, Tuple

import numpy as np

from .errors import EmptyCorpus
from .scoring import ScoringBackend, TokenDistribution

UNK = "<unk>"

_TOKEN_RE = re.compile(r"[a-z0-9']+|[^\sa-z0-9']")


def tokenize_text(text: str) -> List[str]:
    """Lowercased word/punctuation tokens; punctuation marks stand alone."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class NGramModel:
    """Immutable-by-convention n-gram model with per-order count tables.

    counts maps a context tuple (length 0 .. order-1) to a Counter of
    successor tokens; the empty tuple holds unigram counts.
    """

    order: int
    discount: float
    vocabulary: Tuple[str, ...]
    counts: dict = field(repr=False)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        if not 0.0 < self.discount < 1.0:
            raise ValueError(f"discount must be in (0, 1), got {self.discount}")
        if UNK not in self.vocabulary:
            raise ValueError("vocabulary must contain the UNK sentinel")

    def _map_token(self, token: str) -> str:
        return token if token in self._vocab_set else UNK

    @property
    def _vocab_set(self) -> frozenset:
        cached = getattr(self, "_vocab_set_cache", None)
        if cached is None:
            cached = frozenset(self.vocabulary)
            object.__setattr__(self, "_vocab_set_cache", cached)
        return cached

    def probability(self, token: str, context: Sequence[str]) -> float:
        """Interpolated P(token | context) after UNK substitution."""
        word = self._map_token(token)
        ctx = tuple(self._map_token(t) for t in context)[max(0, len(context) - (self.order - 1)):]
        return self._prob(word, ctx)

    def _prob(self, word: str, ctx: Tuple[str, ...]) -> float:
        if len(ctx) == 0:
            successors = self.counts.get((), Counter())
            total = sum(successors.values())
            base = 1.0 / len(self.vocabulary)
            if total == 0:
                return base
            kept = max(successors.get(word, 0) - self.discount, 0.0) / total
            reserved = self.discount * len(successors) / total
            return kept + reserved * base
        successors = self.counts.get(ctx, None)
        lower = self._prob(word, ctx[1:])
        if not successors:
            return lower  # unseen context: full backoff
        total = sum(successors.values())
        kept = max(successors.get(word, 0) - self.discount, 0.0) / total
        reserved = self.discount * len(successors) / total
        return kept + reserved * lower

    def next_token_distribution(self, context: Sequence[str]) -> TokenDistribution:
        ctx = tuple(self._map_token(t) for t in context)[max(0, len(context) - (self.order - 1)):]
        probs = np.array([self._prob(w, ctx) for w in self.vocabulary])
        return TokenDistribution(vocabulary_ids=self.vocabulary, probabilities=probs)

    def save(self, fp: IO[str]) -> None:
        payload = {
            "order": self.order,
            "discount": self.discount,
            "vocabulary": list(self.vocabulary),
            "counts": [
                [list(ctx), dict(sorted(successors.items()))]
                for ctx, successors in sorted(self.counts.items())
            ],
        }
        json.dump(payload, fp, sort_keys=True, indent=1)

    @classmethod
    def load(cls, fp: IO[str]) -> "NGramModel":
        payload = json.load(fp)
        counts = {
            tuple(ctx): Counter(successors) for ctx, successors in payload["counts"]
        }
        return cls(
            order=int(payload["order"]),
            discount=float(payload["discount"]),
            vocabulary=tuple(payload["vocabulary"]),
            counts=counts,
        )


def train(tokens: Sequence[str], order: int, discount: float) -> NGramModel:
    """Count all n-grams of length 1..order over a tokenized corpus."""
    if len(tokens) == 0:
        raise EmptyCorpus("cannot train an n-gram model on an empty corpus")
    vocabulary = tuple(sorted(set(tokens) | {UNK}))
    counts: dict = {}
    for n in range(1, order + 1):
        for i in range(len(tokens) - n + 1):
            ctx = tuple(tokens[i : i + n - 1])
            word = tokens[i + n - 1]
            counts.setdefault(ctx, Counter())[word] += 1
    return NGramModel(order=order, discount=discount, vocabulary=vocabulary, counts=counts)


def next_token_distribution(
    model: NGramModel, context: Sequence[str]
) -> TokenDistribution:
    return model.next_token_distribution(context)


class NGramBackend(ScoringBackend):
    """ScoringBackend over a trained NGramModel; one token per word."""

    mode = "causal"
    encodes_leading_space = False

    def __init__(self, model: NGramModel, model_id: str = "ngram"):
        self.model = model
        self.model_id = model_id

    def tokenize(self, text: str, context: str) -> List[str]:
        # out-of-vocabulary words become UNK here, as a real subword
        # tokenizer can only ever emit in-vocabulary ids
        return [self.model._map_token(t) for t in tokenize_text(text)]

    def tokenize_context(self, context: str) -> List[str]:
        return [self.model._map_token(t) for t in tokenize_text(context)]

    def next_token_distribution(
        self, context_tokens: Sequence, right_context_tokens: Optional[Sequence] = None
    ) -> TokenDistribution:
        return self.model.next_token_distribution(list(context_tokens))
