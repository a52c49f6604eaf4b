"""Score critical words with pretrained transformer checkpoints.

Two scoring modes, declared per model in the config:

* causal: one forward pass over context + word; each sub-token's surprisal
  is read off the next-token distribution at the preceding position.
* masked: the word's sub-token slots are appended to the context, all
  masked; slots are revealed left to right, one forward pass per slot, and
  each slot is scored while it is the leftmost remaining mask.

Both produce base-2 surprisals per sub-token, so a record's sub-token sum
is the whole-word surprisal in bits.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Tuple

import torch

from .config import ModelDecl
from .errors import CheckpointError

log = logging.getLogger(__name__)

_LN2 = math.log(2.0)

# leading sub-word markers used by byte-level and sentencepiece vocabularies
_SPACE_MARKERS = ("Ġ", "▁", " ")


def detokenize_rule(tokenizer) -> str:
    """Classify the tokenizer's vocabulary convention.

    WordPiece vocabularies mark word-internal continuations (##); byte-level
    and sentencepiece vocabularies mark word starts with a space glyph.
    """
    if getattr(tokenizer, "wordpiece_tokenizer", None) is not None:
        return "wordpiece"
    backend = getattr(tokenizer, "backend_tokenizer", None)
    if backend is not None and type(backend.model).__name__ == "WordPiece":
        return "wordpiece"
    pieces = tokenizer.tokenize("a b")
    if any(p[:1] in _SPACE_MARKERS for p in pieces):
        return "strip_space_markers"
    return "concat"


@dataclass
class LoadedModel:
    """A checkpoint ready to score, with its wire-format metadata."""

    decl: ModelDecl
    tokenizer: object
    model: object
    device: torch.device
    rule: str
    lowercases: bool

    def score_word(self, context: str, word: str) -> List[Tuple[str, float]]:
        if self.decl.mode == "causal":
            return _causal_bits(self, context, word)
        return _masked_bits(self, context, word)


def load_model(decl: ModelDecl, device: str) -> LoadedModel:
    from transformers import AutoModelForCausalLM, AutoModelForMaskedLM, AutoTokenizer

    kwargs = {}
    if decl.revision is not None:
        kwargs["revision"] = decl.revision
    auto = AutoModelForCausalLM if decl.mode == "causal" else AutoModelForMaskedLM
    try:
        tokenizer = AutoTokenizer.from_pretrained(decl.checkpoint, **kwargs)
        model = auto.from_pretrained(decl.checkpoint, **kwargs)
    except (OSError, ValueError) as exc:
        raise CheckpointError(decl.model_id, decl.checkpoint, str(exc))
    dev = torch.device(device)
    model.to(dev)
    model.eval()
    lm = LoadedModel(
        decl=decl,
        tokenizer=tokenizer,
        model=model,
        device=dev,
        rule=detokenize_rule(tokenizer),
        lowercases=bool(getattr(tokenizer, "do_lower_case", False)),
    )
    if decl.mode == "masked":
        _require_special_tokens(lm)
    return lm


def _require_special_tokens(lm: LoadedModel) -> None:
    tok = lm.tokenizer
    missing = [
        name
        for name in ("cls_token_id", "sep_token_id", "mask_token_id")
        if getattr(tok, name, None) is None
    ]
    if missing:
        raise CheckpointError(
            lm.decl.model_id,
            lm.decl.checkpoint,
            f"masked scoring needs {', '.join(missing)}",
        )


def _encode(tokenizer, text: str) -> List[int]:
    if not text:
        return []
    return tokenizer(text, add_special_tokens=False)["input_ids"]


def _causal_bits(lm: LoadedModel, context: str, word: str) -> List[Tuple[str, float]]:
    tok = lm.tokenizer
    ctx_ids = _encode(tok, context)
    if not ctx_ids:
        # a causal model needs at least one position to condition on
        if tok.bos_token_id is None:
            raise CheckpointError(
                lm.decl.model_id,
                lm.decl.checkpoint,
                "empty context and no bos token to stand in for it",
            )
        ctx_ids = [tok.bos_token_id]
    # the space before the word belongs to its first sub-token in
    # space-marker vocabularies
    target_text = " " + word if lm.rule == "strip_space_markers" else word
    tgt_ids = _encode(tok, target_text)
    if not tgt_ids:
        raise CheckpointError(
            lm.decl.model_id, lm.decl.checkpoint, f"word {word!r} encodes to no tokens"
        )

    ids = torch.tensor([ctx_ids + tgt_ids], device=lm.device)
    with torch.no_grad():
        logits = lm.model(input_ids=ids).logits
    logprobs = torch.log_softmax(logits[0], dim=-1)

    start = len(ctx_ids)
    texts = tok.convert_ids_to_tokens(tgt_ids)
    out = []
    for j, piece_id in enumerate(tgt_ids):
        nats = -float(logprobs[start - 1 + j, piece_id].item())
        out.append((texts[j], nats / _LN2))
    return out


def _masked_bits(lm: LoadedModel, context: str, word: str) -> List[Tuple[str, float]]:
    tok = lm.tokenizer
    ctx_ids = _encode(tok, context)
    tgt_ids = _encode(tok, word)
    if not tgt_ids:
        raise CheckpointError(
            lm.decl.model_id, lm.decl.checkpoint, f"word {word!r} encodes to no tokens"
        )
    k = len(tgt_ids)
    cls, sep, mask = tok.cls_token_id, tok.sep_token_id, tok.mask_token_id

    # all k reveal steps share one sequence length, so they run as one batch
    rows = []
    for j in range(k):
        rows.append([cls] + ctx_ids + tgt_ids[:j] + [mask] * (k - j) + [sep])
    ids = torch.tensor(rows, device=lm.device)
    with torch.no_grad():
        logits = lm.model(input_ids=ids).logits

    start = 1 + len(ctx_ids)
    texts = tok.convert_ids_to_tokens(tgt_ids)
    out = []
    for j, piece_id in enumerate(tgt_ids):
        logprobs = torch.log_softmax(logits[j, start + j], dim=-1)
        nats = -float(logprobs[piece_id].item())
        out.append((texts[j], nats / _LN2))
    return out
