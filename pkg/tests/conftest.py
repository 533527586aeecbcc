"""Shared fixtures: small hand-made corpora and a synthetic first-order
HMM corpus generator with a known structure.

The synthetic language has six chain tags T1..T6 (each prefers its two
successors), a rare trigger tag T7 that always precedes T1, and a
sentence-end tag.  Vocabulary: 16 unambiguous words per tag plus 14
words per adjacent chain-tag pair ambiguous between the two, which makes
roughly 40% of the vocabulary ambiguous.
"""

from __future__ import annotations

import random

import pytest

from relaxtag.corpus import (
    Lexicon,
    TagSet,
    Token,
    WordSequence,
    build_lexicon,
    candidate_tags,
)
from relaxtag.model import estimate_model

CHAIN = tuple(f"T{i}" for i in range(1, 7))
TRIGGER = "T7"
CONTENT = CHAIN + (TRIGGER,)
END = "."
SYNTH_TAGS = CONTENT + (END,)

SYNTH_TAGSET = TagSet(
    tags=SYNTH_TAGS,
    open_class_tags=frozenset(CONTENT),
    sentence_end_tags=frozenset({END}),
)


def synth_words() -> dict[str, list[str]]:
    words = {t: [f"u{t}_{k}" for k in range(16)] for t in CONTENT}
    for i, t in enumerate(CHAIN):
        nxt = CHAIN[(i + 1) % 6]
        for k in range(14):
            w = f"a{t}{nxt}_{k}"
            words[t].append(w)
            words[nxt].append(w)
    return words


def _transition_row(t: str) -> dict[str, float]:
    if t == TRIGGER:
        return {"T1": 1.0}
    i = CHAIN.index(t)
    row = {CHAIN[(i + 1) % 6]: 0.50, CHAIN[(i + 2) % 6]: 0.18,
           TRIGGER: 0.05, END: 0.12}
    rest = 1.0 - sum(row.values())
    for u in CHAIN:
        row[u] = row.get(u, 0.0) + rest / 6
    return row


SYNTH_TRANSITIONS = {t: _transition_row(t) for t in CONTENT}


def generate_corpus(seed: int, n_tokens: int,
                    quirk: bool = False) -> list[WordSequence]:
    """Sample tagged sentences from the synthetic HMM.

    With quirk=True the tag pair (T7 at k, T3 at k+2) is forbidden: any
    generated T3 two positions after a T7 is replaced by T4.  The
    dependency spans two positions, so bigram statistics barely see it.
    """
    rng = random.Random(seed)
    words = synth_words()

    def emit(t: str) -> str:
        lst = words[t]
        if len(lst) == 16 or rng.random() < 0.6:
            return lst[rng.randrange(16)]
        return lst[16 + rng.randrange(len(lst) - 16)]

    seqs: list[WordSequence] = []
    total = 0
    while total < n_tokens:
        tags = [rng.choice(CHAIN)]
        while len(tags) < 25:
            row = SYNTH_TRANSITIONS[tags[-1]]
            r = rng.random()
            acc = 0.0
            nxt = END
            for t, p in row.items():
                acc += p
                if r <= acc:
                    nxt = t
                    break
            if nxt == END:
                break
            tags.append(nxt)
        if quirk:
            for k in range(len(tags) - 2):
                if tags[k] == TRIGGER and tags[k + 2] == "T3":
                    tags[k + 2] = "T4"
        toks = [Token(emit(t), t) for t in tags] + [Token(".", END)]
        seqs.append(WordSequence(tuple(toks)))
        total += len(toks)
    return seqs


def split_corpus(seqs, frac=0.9):
    k = int(len(seqs) * frac)
    return seqs[:k], seqs[k:]


def candidates_for(seq: WordSequence, lexicon: Lexicon, tagset: TagSet):
    return [candidate_tags(t.surface, lexicon, tagset) for t in seq]


@pytest.fixture(scope="session")
def synth_tagset():
    return SYNTH_TAGSET


@pytest.fixture(scope="session")
def synth_corpus():
    """(train, test, lexicon, model) for the plain synthetic language."""
    train, test = split_corpus(generate_corpus(7, 20000))
    lexicon = build_lexicon(train)
    return train, test, lexicon, estimate_model(train, lexicon)


@pytest.fixture(scope="session")
def quirk_corpus():
    """(train, test, lexicon, model) for the forbidden-pair variant."""
    train, test = split_corpus(generate_corpus(11, 20000, quirk=True))
    lexicon = build_lexicon(train)
    return train, test, lexicon, estimate_model(train, lexicon)


# -- tiny hand-made corpus --------------------------------------------------

TOY_TAGSET = TagSet(
    tags=("D", "N", "V", "."),
    open_class_tags=frozenset({"N", "V"}),
    sentence_end_tags=frozenset({"."}),
)


def toy_corpus(seed: int = 0, n: int = 200) -> list[WordSequence]:
    rng = random.Random(seed)
    words = {"D": ["the", "a"], "N": ["dog", "cat", "saw", "run"],
             "V": ["saw", "run", "bites"], ".": ["."]}
    seqs = []
    for _ in range(n):
        tags = ["D", "N", "V", "D", "N", "."]
        seqs.append(WordSequence(tuple(
            Token(rng.choice(words[t]), t) for t in tags)))
    return seqs


@pytest.fixture(scope="session")
def toy():
    """(corpus, lexicon, model) over a 4-tag toy language."""
    corpus = toy_corpus()
    lexicon = build_lexicon(corpus)
    return corpus, lexicon, estimate_model(corpus, lexicon)
