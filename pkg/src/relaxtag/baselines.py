"""Reference taggers: blind most-likely-tag lookup and first-order HMM
Viterbi decoding, plus a brute-force enumerator used as a test oracle."""

from __future__ import annotations

from typing import Sequence

from .corpus import Lexicon, TagSet, WordSequence
from .model import ModelError, StatModel
from .relax import sequence_log_prob

MAX_ENUMERATION = 10 ** 6


def most_frequent_open_tag(lexicon: Lexicon, tagset: TagSet) -> str:
    """The open-class tag with the highest corpus count; TagSet order
    breaks ties.  Fallback assignment for unknown words."""
    totals: dict[str, int] = {}
    for tags in lexicon.entries.values():
        for tag, count in tags.items():
            if tag in tagset.open_class_tags:
                totals[tag] = totals.get(tag, 0) + count
    open_tags = tagset.open_in_order()
    if not open_tags:
        raise ModelError("tag set declares no open classes")
    return max(open_tags, key=lambda t: (totals.get(t, 0), -tagset.order(t)))


def most_likely_tag(surface: str, lexicon: Lexicon, tagset: TagSet) -> str:
    """Most frequent lexicon tag for the word, ignoring all context."""
    if surface in lexicon:
        counts = lexicon.tags_of(surface)
        return max(counts, key=lambda t: (counts[t], -tagset.order(t)))
    return most_frequent_open_tag(lexicon, tagset)


def viterbi(seq: WordSequence, candidates: Sequence[Sequence[str]],
            model: StatModel) -> list[str]:
    """Tag assignment maximizing start x lexical x transition probability,
    by dynamic programming in log space.  Candidate order (tag-set order)
    breaks score ties at every backpointer choice."""
    import math

    n = len(seq)
    scores: list[dict[str, float]] = []
    back: list[dict[str, str | None]] = []

    first = {}
    for t in candidates[0]:
        first[t] = math.log(model.start(t)) + math.log(
            model.lexical(seq.tokens[0].surface, t))
    scores.append(first)
    back.append({t: None for t in candidates[0]})

    for i in range(1, n):
        surface = seq.tokens[i].surface
        row: dict[str, float] = {}
        ptr: dict[str, str | None] = {}
        for t in candidates[i]:
            lex = math.log(model.lexical(surface, t))
            best_prev, best_score = None, -math.inf
            for p in candidates[i - 1]:
                s = scores[i - 1][p] + math.log(model.transition(p, t))
                if s > best_score:
                    best_prev, best_score = p, s
            row[t] = best_score + lex
            ptr[t] = best_prev
        scores.append(row)
        back.append(ptr)

    best = None
    for t in candidates[n - 1]:
        if best is None or scores[n - 1][t] > scores[n - 1][best]:
            best = t
    tags = [best]
    for i in range(n - 1, 0, -1):
        tags.append(back[i][tags[-1]])
    tags.reverse()
    return tags


def exhaustive_decode(seq: WordSequence, candidates: Sequence[Sequence[str]],
                      model: StatModel) -> list[str]:
    """Score every candidate combination and return the best; intended as
    a test oracle, so the search space is capped."""
    import itertools

    if len(seq) == 0:
        raise ModelError("empty sequence")
    space = 1
    for cands in candidates:
        space *= len(cands)
        if space > MAX_ENUMERATION:
            raise ModelError(f"candidate space exceeds {MAX_ENUMERATION}")
    best_tags = None
    best_score = None
    for combo in itertools.product(*candidates):
        score = sequence_log_prob(seq, combo, model)
        if best_score is None or score > best_score:
            best_tags, best_score = list(combo), score
    return best_tags
