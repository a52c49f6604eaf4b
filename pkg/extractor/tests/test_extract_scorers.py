"""Scoring math against direct forward-pass oracles."""

import math

import pytest
import torch

from extractor.config import ModelDecl
from extractor.errors import CheckpointError
from extractor.scorers import detokenize_rule, load_model

CONTEXT = "the rider was wearing his"

LN2 = math.log(2.0)


@pytest.fixture(scope="module")
def causal_lm(causal_checkpoint):
    return load_model(ModelDecl("tiny", causal_checkpoint, "causal"), "cpu")


@pytest.fixture(scope="module")
def masked_lm(masked_checkpoint):
    return load_model(ModelDecl("tiny-mlm", masked_checkpoint, "masked"), "cpu")


def causal_oracle(ckpt, context, word):
    """Sub-token nats from one forward pass, indexed by hand."""
    from transformers import AutoModelForCausalLM, AutoTokenizer

    tok = AutoTokenizer.from_pretrained(ckpt)
    model = AutoModelForCausalLM.from_pretrained(ckpt)
    model.eval()
    ctx = tok(context, add_special_tokens=False)["input_ids"]
    tgt = tok(" " + word, add_special_tokens=False)["input_ids"]
    with torch.no_grad():
        logits = model(input_ids=torch.tensor([ctx + tgt])).logits[0]
    nats = []
    for j, piece in enumerate(tgt):
        lp = torch.log_softmax(logits[len(ctx) - 1 + j], dim=-1)[piece]
        nats.append(-float(lp.item()))
    return tok.convert_ids_to_tokens(tgt), nats


def masked_oracle(ckpt, context, word):
    """Progressive reveal, one single-row forward pass per sub-token."""
    from transformers import AutoModelForMaskedLM, AutoTokenizer

    tok = AutoTokenizer.from_pretrained(ckpt)
    model = AutoModelForMaskedLM.from_pretrained(ckpt)
    model.eval()
    ctx = tok(context, add_special_tokens=False)["input_ids"]
    tgt = tok(word, add_special_tokens=False)["input_ids"]
    k = len(tgt)
    nats = []
    for j in range(k):
        ids = (
            [tok.cls_token_id]
            + ctx
            + tgt[:j]
            + [tok.mask_token_id] * (k - j)
            + [tok.sep_token_id]
        )
        with torch.no_grad():
            logits = model(input_ids=torch.tensor([ids])).logits[0]
        lp = torch.log_softmax(logits[1 + len(ctx) + j], dim=-1)[tgt[j]]
        nats.append(-float(lp.item()))
    return tok.convert_ids_to_tokens(tgt), nats


class TestRuleDetection:
    def test_byte_level_vocabulary(self, causal_lm):
        assert causal_lm.rule == "strip_space_markers"
        assert detokenize_rule(causal_lm.tokenizer) == "strip_space_markers"

    def test_wordpiece_vocabulary(self, masked_lm):
        assert masked_lm.rule == "wordpiece"

    def test_casefolding_flag(self, causal_lm, masked_lm):
        assert masked_lm.lowercases is True
        assert causal_lm.lowercases is False


class TestCausalScoring:
    def test_matches_oracle(self, causal_lm, causal_checkpoint):
        texts, nats = causal_oracle(causal_checkpoint, CONTEXT, "helmet")
        pieces = causal_lm.score_word(CONTEXT, "helmet")
        assert [t for t, _ in pieces] == texts
        for (_, bits), n in zip(pieces, nats):
            assert bits == pytest.approx(n / LN2, abs=1e-9)

    def test_bits_are_nats_over_ln2(self, causal_lm, causal_checkpoint):
        _, nats = causal_oracle(causal_checkpoint, CONTEXT, "race")
        pieces = causal_lm.score_word(CONTEXT, "race")
        assert sum(b for _, b in pieces) * LN2 == pytest.approx(sum(nats), abs=1e-9)

    def test_first_piece_carries_space_marker(self, causal_lm):
        pieces = causal_lm.score_word(CONTEXT, "helmet")
        assert pieces[0][0].startswith("Ġ")

    def test_scores_are_finite_and_positive(self, causal_lm):
        for word in ("helmet", "race", "line", "zyzzyva"):
            for text, bits in causal_lm.score_word(CONTEXT, word):
                assert text
                assert math.isfinite(bits)
                assert bits >= 0.0

    def test_empty_context_falls_back_to_bos(self, causal_lm):
        pieces = causal_lm.score_word("", "helmet")
        assert all(math.isfinite(bits) for _, bits in pieces)

    def test_deterministic(self, causal_lm):
        a = causal_lm.score_word(CONTEXT, "helmet")
        b = causal_lm.score_word(CONTEXT, "helmet")
        assert a == b


class TestMaskedScoring:
    def test_single_subtoken_word_yields_one_pair(self, masked_lm):
        pieces = masked_lm.score_word(CONTEXT, "line")
        assert len(pieces) == 1
        assert pieces[0][0] == "line"
        assert math.isfinite(pieces[0][1])

    def test_multi_subtoken_matches_progressive_oracle(
        self, masked_lm, masked_checkpoint
    ):
        texts, nats = masked_oracle(masked_checkpoint, CONTEXT, "helmet")
        assert texts == ["hel", "##met"]
        pieces = masked_lm.score_word(CONTEXT, "helmet")
        assert [t for t, _ in pieces] == texts
        for (_, bits), n in zip(pieces, nats):
            assert bits == pytest.approx(n / LN2, abs=1e-9)

    def test_single_subtoken_matches_oracle(self, masked_lm, masked_checkpoint):
        _, nats = masked_oracle(masked_checkpoint, CONTEXT, "race")
        pieces = masked_lm.score_word(CONTEXT, "race")
        assert pieces[0][1] == pytest.approx(nats[0] / LN2, abs=1e-9)

    def test_casefolds_input(self, masked_lm):
        lower = masked_lm.score_word(CONTEXT, "helmet")
        upper = masked_lm.score_word(CONTEXT, "Helmet")
        assert [t for t, _ in lower] == [t for t, _ in upper]

    def test_deterministic(self, masked_lm):
        assert masked_lm.score_word(CONTEXT, "helmet") == masked_lm.score_word(
            CONTEXT, "helmet"
        )


class TestLoadErrors:
    def test_unresolvable_checkpoint_names_model(self, tmp_path):
        decl = ModelDecl("ghost", str(tmp_path / "absent"), "causal")
        with pytest.raises(CheckpointError, match="ghost"):
            load_model(decl, "cpu")

    def test_wrong_head_for_mode(self, causal_checkpoint):
        # a causal-only checkpoint cannot serve masked scoring
        decl = ModelDecl("confused", causal_checkpoint, "masked")
        with pytest.raises(CheckpointError, match="confused"):
            load_model(decl, "cpu")
