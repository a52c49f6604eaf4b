"""Seeded synthetic data: stimulus corpora and LMM test datasets.

Everything here is driven by an explicit integer seed so test fixtures and
smoke runs are reproducible.  The smoke corpus is built so that, under a
bigram model trained on the companion text, every frame's Related word is
strictly more probable than its Unrelated word after the frame's cue token
(the training text simply contains more cue-Related than cue-Unrelated
bigrams), and the Predictable word is more probable still.
"""

from __future__ import annotations

import math
import random
from typing import Dict, List, Sequence, Tuple

from .corpus import Condition, StimulusItem

_FILLERS = ("we", "all", "watched", "as", "they", "mentioned", "the")


def smoke_corpus(
    seed: int,
    n_frames: int = 20,
    word_pool: int = 8,
    experiment_id: str = "synthetic",
) -> Tuple[List[StimulusItem], str]:
    """A (corpus, training text) pair with a built-in condition effect.

    Critical words are drawn from shared pools so the same word recurs in
    several frames and word-level grouping has repeated levels.
    """
    rng = random.Random(seed)
    pred_pool = [f"pword{j:02d}" for j in range(word_pool)]
    rel_pool = [f"rword{j:02d}" for j in range(word_pool)]
    unr_pool = [f"uword{j:02d}" for j in range(word_pool)]

    items: List[StimulusItem] = []
    bigrams: List[str] = []
    for i in range(n_frames):
        frame_id = f"frame{i:02d}"
        cue = f"cue{i:02d}"
        pred = rng.choice(pred_pool)
        related = rng.choice(rel_pool)
        unrelated = rng.choice(unr_pool)

        pre = " ".join(list(_FILLERS[: 3 + rng.randrange(4)]) + [cue])
        post = "yesterday ."
        for condition, word, cloze in (
            (Condition.PREDICTABLE, pred, round(rng.uniform(0.7, 0.95), 2)),
            (Condition.RELATED, related, round(rng.uniform(0.02, 0.2), 2)),
            (Condition.UNRELATED, unrelated, 0.0),
        ):
            items.append(
                StimulusItem(
                    experiment_id=experiment_id,
                    frame_id=frame_id,
                    condition=condition,
                    pre_context=pre,
                    post_context=post,
                    critical_word=word,
                    cloze=cloze,
                )
            )

        # per-frame counts vary so frames differ in overall surprisal level
        n_pred = rng.randint(14, 20)
        n_rel = rng.randint(6, 10)
        n_unr = rng.randint(1, 2)
        bigrams.extend([f"{cue} {pred}"] * n_pred)
        bigrams.extend([f"{cue} {related}"] * n_rel)
        bigrams.extend([f"{cue} {unrelated}"] * n_unr)

    rng.shuffle(bigrams)
    filler_sentence = " ".join(_FILLERS) + " yesterday"
    text = " . ".join([filler_sentence] + bigrams) + " ."
    return items, text


def smoke_config(
    corpus_path: str,
    train_text_path: str,
    out_dir: str,
    order: int = 2,
    discount: float = 0.75,
    model_id: str = "bigram",
) -> dict:
    """A ready-to-serialize run config for the smoke corpus."""
    return {
        "corpora": [{"path": corpus_path, "format": "delimited"}],
        "backends": [
            {
                "type": "ngram",
                "model_id": model_id,
                "train_text": train_text_path,
                "order": order,
                "discount": discount,
            }
        ],
        "out_dir": out_dir,
    }


def balanced_one_way(
    g: int,
    n: int,
    sigma2_group: float,
    sigma2_resid: float,
    seed: int,
    mu: float = 10.0,
) -> Dict[str, list]:
    """g groups of n observations: y = mu + b_group + e."""
    rng = random.Random(seed)
    y, group = [], []
    for j in range(g):
        b = rng.gauss(0.0, math.sqrt(sigma2_group))
        for _ in range(n):
            y.append(mu + b + rng.gauss(0.0, math.sqrt(sigma2_resid)))
            group.append(f"g{j:03d}")
    return {"y": y, "group": group}


def two_group_fixed(
    n_per_group: int,
    delta: float,
    sigma: float,
    seed: int,
    mu: float = 10.0,
) -> Dict[str, list]:
    """Balanced two-condition data with no grouping structure."""
    rng = random.Random(seed)
    y, cond = [], []
    for label, shift in (("Related", -delta / 2.0), ("Unrelated", delta / 2.0)):
        for _ in range(n_per_group):
            y.append(mu + shift + rng.gauss(0.0, sigma))
            cond.append(label)
    return {"surprisal_bits": y, "condition": cond}


def lmm_dataset(
    n_frames: int,
    seed: int,
    effect: float = 2.0,
    sigma_frame: float = 1.5,
    sigma_word: float = 1.0,
    sigma_resid: float = 0.8,
    word_pool: int = 6,
    mu: float = 12.0,
) -> Dict[str, list]:
    """Related/Unrelated rows with frame and word random intercepts.

    Words are sampled from a shared pool, so the word grouping has fewer
    levels than rows and its variance is identifiable.
    """
    rng = random.Random(seed)
    words = [f"w{j:02d}" for j in range(word_pool)]
    word_effect = {w: rng.gauss(0.0, sigma_word) for w in words}
    cols: Dict[str, list] = {
        "surprisal_bits": [],
        "condition": [],
        "frame_id": [],
        "critical_word": [],
    }
    for i in range(n_frames):
        frame = f"f{i:03d}"
        b_frame = rng.gauss(0.0, sigma_frame)
        for label, shift in (("Related", -effect / 2.0), ("Unrelated", effect / 2.0)):
            word = rng.choice(words)
            y = mu + shift + b_frame + word_effect[word] + rng.gauss(0.0, sigma_resid)
            cols["surprisal_bits"].append(y)
            cols["condition"].append(label)
            cols["frame_id"].append(frame)
            cols["critical_word"].append(word)
    return cols
