"""Shared fixtures: tiny local checkpoints and a three-item stimulus file.

The hub is not reachable from the test environment, so both checkpoints
are built on the fly (seeded random weights, hand-sized vocabularies) and
saved to session-scoped directories.  Random weights still define proper
probability distributions, which is all the scoring math needs.
"""

import json
import os

os.environ.setdefault("HF_HUB_OFFLINE", "1")

import pytest
import torch

# (label, passed) pairs registered by the acceptance test as it runs
ACCEPTANCE_CHECKLIST = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_CHECKLIST:
        return
    terminalreporter.section("acceptance checklist")
    for label, passed in ACCEPTANCE_CHECKLIST:
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] {label}")


CAUSAL_TRAIN = (
    "the rider was wearing his helmet for the race . "
    "she waited in the line all afternoon . "
    "dirt table painting helmet race line gallery museum .\n"
)

# WordPiece vocabulary: "helmet" splits as hel + ##met, the rest are whole
BERT_VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "the", "rider", "was", "wearing", "his", "for", "race", ".",
    "hel", "##met", "line", "dirt", "waited", "she", "in", "all", "afternoon",
]


@pytest.fixture(scope="session")
def causal_checkpoint(tmp_path_factory):
    """Tiny byte-level BPE tokenizer + 2-layer causal LM, saved locally."""
    from tokenizers import ByteLevelBPETokenizer
    from transformers import GPT2Config, GPT2LMHeadModel, PreTrainedTokenizerFast

    root = tmp_path_factory.mktemp("causal")
    train = root / "train.txt"
    train.write_text(CAUSAL_TRAIN * 50, encoding="utf-8")
    bpe = ByteLevelBPETokenizer()
    bpe.train(
        [str(train)], vocab_size=400, min_frequency=1,
        special_tokens=["<|endoftext|>"],
    )
    tok_json = root / "tokenizer.json"
    bpe.save(str(tok_json))
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_file=str(tok_json),
        bos_token="<|endoftext|>",
        eos_token="<|endoftext|>",
    )

    ckpt = root / "ckpt"
    torch.manual_seed(2024)
    model = GPT2LMHeadModel(
        GPT2Config(
            vocab_size=len(tokenizer),
            n_embd=32,
            n_layer=2,
            n_head=2,
            n_positions=64,
            bos_token_id=tokenizer.bos_token_id,
            eos_token_id=tokenizer.eos_token_id,
        )
    )
    model.save_pretrained(ckpt)
    tokenizer.save_pretrained(ckpt)
    return str(ckpt)


@pytest.fixture(scope="session")
def masked_checkpoint(tmp_path_factory):
    """Tiny WordPiece tokenizer + 2-layer masked LM, saved locally."""
    from tokenizers import Tokenizer
    from tokenizers.models import WordPiece
    from tokenizers.normalizers import BertNormalizer
    from tokenizers.pre_tokenizers import BertPreTokenizer
    from tokenizers.processors import TemplateProcessing
    from transformers import BertConfig, BertForMaskedLM, BertTokenizerFast

    vocab = {w: i for i, w in enumerate(BERT_VOCAB)}
    backend = Tokenizer(WordPiece(vocab, unk_token="[UNK]"))
    backend.normalizer = BertNormalizer(lowercase=True)
    backend.pre_tokenizer = BertPreTokenizer()
    backend.post_processor = TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])],
    )
    tokenizer = BertTokenizerFast(
        tokenizer_object=backend,
        do_lower_case=True,
        unk_token="[UNK]",
        pad_token="[PAD]",
        cls_token="[CLS]",
        sep_token="[SEP]",
        mask_token="[MASK]",
    )

    ckpt = tmp_path_factory.mktemp("masked") / "ckpt"
    torch.manual_seed(2025)
    model = BertForMaskedLM(
        BertConfig(
            vocab_size=len(BERT_VOCAB),
            hidden_size=32,
            num_hidden_layers=2,
            num_attention_heads=2,
            intermediate_size=64,
            max_position_embeddings=64,
        )
    )
    model.save_pretrained(ckpt)
    tokenizer.save_pretrained(ckpt)
    return str(ckpt)


STIMULUS_ROWS = [
    ("exp1", "f01", "Predictable", "the rider was wearing his", "for the race .", "helmet", "0.9"),
    ("exp1", "f01", "Related", "the rider was wearing his", "for the race .", "race", ""),
    ("exp1", "f01", "Unrelated", "the rider was wearing his", "for the race .", "line", ""),
]

_COLUMNS = (
    "experiment_id", "frame_id", "condition",
    "pre_context", "post_context", "critical_word", "cloze",
)


def write_stimuli(path, rows=None):
    lines = ["\t".join(_COLUMNS)]
    for row in rows if rows is not None else STIMULUS_ROWS:
        lines.append("\t".join(row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture()
def corpus_file(tmp_path):
    return write_stimuli(tmp_path / "stimuli.tsv")


def write_config(path, corpus, output, models, device="cpu"):
    payload = {
        "corpus": str(corpus),
        "output": str(output),
        "device": device,
        "models": models,
    }
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")
    return path
