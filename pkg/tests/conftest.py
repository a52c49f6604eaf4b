"""Shared fixtures: small stimulus sets and deterministic shim backends."""

from __future__ import annotations

import hashlib

import numpy as np
import pytest

from surpstat.corpus import Condition, StimulusItem
from surpstat.scoring import ScoringBackend, TokenDistribution

# (label, passed) pairs registered by the acceptance tests as they run
ACCEPTANCE_CHECKLIST = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_CHECKLIST:
        return
    terminalreporter.section("acceptance checklist")
    for label, passed in ACCEPTANCE_CHECKLIST:
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {label}")


def _stable_hash(*parts) -> int:
    text = "\x1f".join(str(p) for p in parts)
    return int.from_bytes(hashlib.md5(text.encode("utf-8")).digest()[:8], "big")


class SubwordShim(ScoringBackend):
    """Deterministic backend that splits words into 2-character chunks.

    Next-token probabilities are stable pseudo-random weights keyed on
    (prefix, candidate), so the same query always sees the same
    distribution but different contexts see different ones.
    """

    mode = "causal"
    encodes_leading_space = False

    def __init__(self, words, model_id="shim"):
        self.model_id = model_id
        chunks = set()
        for word in words:
            chunks.update(self._split(word))
        self.vocab = tuple(sorted(chunks))

    @staticmethod
    def _split(text):
        text = text.strip()
        return [text[i : i + 2] for i in range(0, len(text), 2)]

    def tokenize(self, text, context):
        return self._split(text)

    def tokenize_context(self, context):
        # chunk each whitespace word separately so joins don't bleed
        out = []
        for word in context.split():
            out.extend(self._split(word))
        return out

    def next_token_distribution(self, context_tokens, right_context_tokens=None):
        key = tuple(context_tokens)
        weights = np.array(
            [1 + _stable_hash(key, tok) % 997 for tok in self.vocab], dtype=float
        )
        return TokenDistribution(
            vocabulary_ids=self.vocab, probabilities=weights / weights.sum()
        )


class FixedProbBackend(ScoringBackend):
    """One token per word; P(word|anything) read from an explicit table."""

    mode = "causal"
    encodes_leading_space = False

    def __init__(self, prob_table, model_id="fixed"):
        self.model_id = model_id
        self.table = dict(prob_table)
        total = sum(self.table.values())
        if total > 1.0:
            raise ValueError("probabilities exceed 1")
        self.rest = 1.0 - total  # probability mass on an absorbing filler

    def tokenize(self, text, context):
        return [text.strip()]

    def tokenize_context(self, context):
        return context.split()

    def next_token_distribution(self, context_tokens, right_context_tokens=None):
        vocab = tuple(sorted(self.table)) + ("<other>",)
        probs = np.array([self.table[w] for w in vocab[:-1]] + [self.rest])
        return TokenDistribution(vocabulary_ids=vocab, probabilities=probs)


def make_item(
    experiment_id="exp1",
    frame_id="f01",
    condition=Condition.RELATED,
    pre_context="The rider was wearing his",
    post_context="for the race.",
    critical_word="helmet",
    cloze=0.1,
):
    return StimulusItem(
        experiment_id=experiment_id,
        frame_id=frame_id,
        condition=condition,
        pre_context=pre_context,
        post_context=post_context,
        critical_word=critical_word,
        cloze=cloze,
    )


@pytest.fixture
def wearing_items():
    """One frame, three conditions, completion-style stimuli."""
    frame = dict(
        experiment_id="exp1", frame_id="f01", pre_context="The rider was wearing his"
    )
    return [
        make_item(condition=Condition.PREDICTABLE, critical_word="helmet", cloze=0.9, **frame),
        make_item(condition=Condition.RELATED, critical_word="dirt", cloze=0.03, **frame),
        make_item(condition=Condition.UNRELATED, critical_word="table", cloze=0.0, **frame),
    ]


@pytest.fixture
def two_frame_items(wearing_items):
    """Two frames x three conditions across one experiment."""
    frame2 = dict(
        experiment_id="exp1",
        frame_id="f02",
        pre_context="At the gallery she waited in the",
        post_context="all afternoon.",
    )
    return wearing_items + [
        make_item(condition=Condition.PREDICTABLE, critical_word="line", cloze=0.8, **frame2),
        make_item(condition=Condition.RELATED, critical_word="painting", cloze=0.05, **frame2),
        make_item(condition=Condition.UNRELATED, critical_word="toothbrush", cloze=0.0, **frame2),
    ]


@pytest.fixture
def hand_corpus_tokens():
    """The tiny corpus every hand-count probability below is derived from."""
    return "the dog ran . the dog sat .".split()
