"""Shared fixtures: a small rigged world where attacks provably succeed.

The scorer below keys almost entirely on one decisive keyword per toxic
text because the clean half of the training data repeats the exact same
filler words.  Every keyword has exactly one indexed variant with a
distinct surface form, so index retrieval always offers a working swap.
"""

import random
from types import SimpleNamespace

import pytest

import perturbmine as pm

FILLERS = ["the", "movie", "plot", "acting", "was", "felt", "really", "quite", "today", "story"]

KEYWORD_VARIANTS = {
    "idiot": "idi0t",
    "stupid": "stup!d",
    "moron": "m0ron",
    "trash": "tra$h",
    "nasty": "na5ty",
    "loser": "l0ser",
    "creep": "cre3p",
    "clown": "cl0wn",
}


def make_paired_texts(n: int, seed: int) -> tuple[list[str], list[str]]:
    """n toxic texts and n clean twins sharing the same filler words."""
    rng = random.Random(seed)
    toxic, clean = [], []
    for _ in range(n):
        fillers = rng.choices(FILLERS, k=8)
        keyword = rng.choice(list(KEYWORD_VARIANTS))
        pos = rng.randrange(len(fillers) + 1)
        toxic.append(" ".join(fillers[:pos] + [keyword] + fillers[pos:]))
        clean.append(" ".join(fillers))
    return toxic, clean


def keyword_mining_lines() -> list[str]:
    lines = []
    for keyword, variant in KEYWORD_VARIANTS.items():
        lines.append(f"that {keyword} over there")
        lines.append(f"that {variant} over there")
    return lines


@pytest.fixture(scope="session")
def rigged():
    toxic, clean = make_paired_texts(300, seed=7)
    texts = toxic + clean
    labels = ["toxic"] * 300 + ["clean"] * 300
    scorer = pm.NaiveBayesTextScorer().fit(texts, labels)
    index = pm.PerturbationIndex(max_level=2).fit(pm.ingest(keyword_mining_lines()))
    held_toxic, _ = make_paired_texts(200, seed=99)
    return SimpleNamespace(
        texts=texts,
        labels=labels,
        train=pm.LabeledDataset(examples=list(zip(texts, labels))),
        scorer=scorer,
        index=index,
        held=[(t, "toxic") for t in held_toxic],
        held_texts=held_toxic,
    )


CAPTION_SENTENCES = [
    "the democrats arre not dirty",
    "the demokRATs are dirrrty",
]


@pytest.fixture(scope="session")
def caption_index():
    """Index over the two example sentences used throughout the docs."""
    return pm.PerturbationIndex(max_level=2).fit(pm.ingest(CAPTION_SENTENCES))
