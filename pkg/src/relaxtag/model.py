"""Statistical model estimation and the compatibility / confining families.

Everything here is estimated by maximum-likelihood relative frequencies
from a gold-tagged corpus.  Unseen combinations are smoothed to a single
configurable floor probability ("tiny") so that multiplicative support
functions never hit a hard zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

from .corpus import Lexicon, WordSequence

DEFAULT_TINY = 1e-6

MEASURES = ("probability", "mutual_information", "association_ratio", "relative_entropy")


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class PairCounts:
    """Event counts for a joint event A∩B and its marginals."""

    n_ab: int
    n_a: int
    n_b: int
    n_total: int

    def __post_init__(self):
        if min(self.n_ab, self.n_a, self.n_b, self.n_total) < 0:
            raise ModelError("negative event count")
        if self.n_ab > min(self.n_a, self.n_b):
            raise ModelError("joint count exceeds a marginal")
        if max(self.n_a, self.n_b) > self.n_total:
            raise ModelError("marginal count exceeds total")


@dataclass(frozen=True)
class ConfiningSpec:
    """Choice of map squeezing compatibility values into the interval an
    update rule requires.

    kind        one of linear01, linear11, logistic, arctan, tanh, none
    beta        for the linear maps, the half-range of the input values;
                for the sigmoid maps, the steepness
    """

    kind: str
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear01", "linear11", "logistic", "arctan", "tanh", "none"):
            raise ModelError(f"unknown confining kind {self.kind!r}")
        if not self.beta > 0:
            raise ModelError("beta must be positive")


def confine(x: float, spec: ConfiningSpec) -> float:
    """Apply the selected confining map to x.  Total function: the linear
    maps clamp inputs outside [-beta, beta]."""
    b = spec.beta
    if spec.kind == "linear01":
        return min(1.0, max(0.0, 0.5 * (1.0 + x / b)))
    if spec.kind == "linear11":
        return min(1.0, max(-1.0, x / b))
    if spec.kind == "logistic":
        z = -2.0 * b * x
        if z > 700.0:
            return 0.0
        return 1.0 / (1.0 + math.exp(z))
    if spec.kind == "arctan":
        return (2.0 / math.pi) * math.atan(b * x)
    if spec.kind == "tanh":
        return math.tanh(b * x)
    return x


def compatibility_value(counts: PairCounts, measure: str,
                        tiny: float = DEFAULT_TINY) -> float:
    """Turn joint/marginal counts into a compatibility value.

    probability         P(A∩B)
    mutual_information  log2 P(A∩B) / (P(A) P(B))
    association_ratio   P(A∩B) * log2 P(A∩B) / (P(A) P(B))
    relative_entropy    sum over the four cells {A,¬A}x{B,¬B} of
                        P(X∩Y) log2 P(X∩Y) / (P(X) P(Y))

    Probabilities are count/n_total with the tiny floor substituted for
    zero cells where a zero would otherwise blow up the logarithm;
    0*log(0) terms contribute 0.
    """
    if counts.n_total == 0:
        raise ModelError("n_total is zero")
    n = counts.n_total
    p_ab = counts.n_ab / n
    p_a = counts.n_a / n
    p_b = counts.n_b / n

    if measure == "probability":
        return p_ab if p_ab > 0.0 else tiny

    if measure == "mutual_information":
        fab = max(p_ab, tiny)
        fa = max(p_a, tiny)
        fb = max(p_b, tiny)
        return math.log2(fab / (fa * fb))

    if measure == "association_ratio":
        if counts.n_ab == 0:
            return 0.0
        return p_ab * math.log2(p_ab / (max(p_a, tiny) * max(p_b, tiny)))

    if measure == "relative_entropy":
        total = 0.0
        cells = (
            (p_ab, p_a, p_b),
            (p_a - p_ab, p_a, 1.0 - p_b),
            (p_b - p_ab, 1.0 - p_a, p_b),
            (1.0 - p_a - p_b + p_ab, 1.0 - p_a, 1.0 - p_b),
        )
        for p_xy, p_x, p_y in cells:
            if p_xy <= 0.0:
                continue
            total += p_xy * math.log2(p_xy / (max(p_x, tiny) * max(p_y, tiny)))
        return total

    raise ModelError(f"unknown compatibility measure {measure!r}")


@dataclass
class StatModel:
    """Relative-frequency model: lexical P(t|w), bigram T(t2|t1), trigram
    P(t3|t1,t2) and sequence-start probabilities, all floored at tiny.

    Raw counts are kept alongside the probabilities; the trigram back-off
    needs to distinguish observed events from floored ones, and the
    compatibility estimates work on counts, not probabilities.
    """

    tiny: float = DEFAULT_TINY
    n_tokens: int = 0
    n_sequences: int = 0
    n_bigrams: int = 0
    n_trigrams: int = 0

    lexical_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    surface_counts: dict[str, int] = field(default_factory=dict)
    bigram_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    trigram_counts: dict[tuple[str, str, str], int] = field(default_factory=dict)
    start_counts: dict[str, int] = field(default_factory=dict)
    tag_counts: dict[str, int] = field(default_factory=dict)

    _bigram_left: dict[str, int] = field(default_factory=dict)
    _bigram_right: dict[str, int] = field(default_factory=dict)
    _trigram_prefix: dict[tuple[str, str], int] = field(default_factory=dict)

    def _floor(self, p: float) -> float:
        return max(p, self.tiny)

    def lexical(self, surface: str, tag: str) -> float:
        c = self.lexical_counts.get((surface, tag), 0)
        total = self.surface_counts.get(surface, 0)
        if c == 0 or total == 0:
            return self.tiny
        return self._floor(c / total)

    def transition(self, t1: str, t2: str) -> float:
        c = self.bigram_counts.get((t1, t2), 0)
        total = self._bigram_left.get(t1, 0)
        if c == 0 or total == 0:
            return self.tiny
        return self._floor(c / total)

    def trigram(self, t1: str, t2: str, t3: str) -> float:
        c = self.trigram_counts.get((t1, t2, t3), 0)
        total = self._trigram_prefix.get((t1, t2), 0)
        if c == 0 or total == 0:
            return self.tiny
        return self._floor(c / total)

    def start(self, tag: str) -> float:
        c = self.start_counts.get(tag, 0)
        if c == 0 or self.n_sequences == 0:
            return self.tiny
        return self._floor(c / self.n_sequences)

    # -- count-based views used by the constraint machinery --------------

    def bigram_pair_counts(self, t1: str, t2: str) -> PairCounts:
        """A = t1 occurs as the left tag of a bigram event, B = t2 as the
        right tag; counted over all adjacent positions."""
        return PairCounts(
            n_ab=self.bigram_counts.get((t1, t2), 0),
            n_a=self._bigram_left.get(t1, 0),
            n_b=self._bigram_right.get(t2, 0),
            n_total=self.n_bigrams,
        )

    def _trigram_marginals(self, heart_slot: int):
        cache = getattr(self, "_tri_marg_cache", None)
        if cache is None:
            cache = {}
            object.__setattr__(self, "_tri_marg_cache", cache)
        if heart_slot not in cache:
            slot_m: dict[str, int] = {}
            ctx_m: dict[tuple, int] = {}
            for triple, n in self.trigram_counts.items():
                slot_m[triple[heart_slot]] = slot_m.get(triple[heart_slot], 0) + n
                ctx = tuple(triple[s] for s in range(3) if s != heart_slot)
                ctx_m[ctx] = ctx_m.get(ctx, 0) + n
            cache[heart_slot] = (slot_m, ctx_m)
        return cache[heart_slot]

    def trigram_pair_counts(self, triple: tuple[str, str, str],
                            heart_slot: int) -> PairCounts:
        """For a ternary constraint targeting one slot of a tag triple:
        B = the heart tag at its slot, A = the two context tags at theirs,
        counted over all trigram windows."""
        slot_m, ctx_m = self._trigram_marginals(heart_slot)
        ctx = tuple(triple[s] for s in range(3) if s != heart_slot)
        return PairCounts(
            n_ab=self.trigram_counts.get(triple, 0),
            n_a=ctx_m.get(ctx, 0),
            n_b=slot_m.get(triple[heart_slot], 0),
            n_total=self.n_trigrams,
        )

    def max_abs_compatibility(self, source: str, measure: str) -> float:
        """Largest |compatibility| over the observed bigram or trigram
        table; used as the default beta for the linear confiners."""
        best = 0.0
        if source == "bigram":
            for (t1, t2) in self.bigram_counts:
                v = compatibility_value(self.bigram_pair_counts(t1, t2), measure, self.tiny)
                best = max(best, abs(v))
        elif source == "trigram":
            for triple in self.trigram_counts:
                for slot in range(3):
                    v = compatibility_value(
                        self.trigram_pair_counts(triple, slot), measure, self.tiny)
                    best = max(best, abs(v))
        else:
            raise ModelError(f"unknown compatibility table {source!r}")
        return best


def estimate_model(corpus: list[WordSequence], lexicon: Lexicon,
                   tiny: float = DEFAULT_TINY) -> StatModel:
    """Count lexical, bigram, trigram and start events over a gold corpus."""
    if not corpus:
        raise ModelError("cannot estimate a model from an empty corpus")
    if not (0.0 < tiny <= 1e-3):
        raise ModelError("tiny must be in (0, 1e-3]")
    m = StatModel(tiny=tiny)
    for seq in corpus:
        tags = seq.gold_tags()
        m.n_sequences += 1
        m.start_counts[tags[0]] = m.start_counts.get(tags[0], 0) + 1
        for tok, tag in zip(seq, tags):
            m.n_tokens += 1
            key = (tok.surface, tag)
            m.lexical_counts[key] = m.lexical_counts.get(key, 0) + 1
            m.surface_counts[tok.surface] = m.surface_counts.get(tok.surface, 0) + 1
            m.tag_counts[tag] = m.tag_counts.get(tag, 0) + 1
        for t1, t2 in zip(tags, tags[1:]):
            m.n_bigrams += 1
            m.bigram_counts[(t1, t2)] = m.bigram_counts.get((t1, t2), 0) + 1
            m._bigram_left[t1] = m._bigram_left.get(t1, 0) + 1
            m._bigram_right[t2] = m._bigram_right.get(t2, 0) + 1
        for t1, t2, t3 in zip(tags, tags[1:], tags[2:]):
            m.n_trigrams += 1
            tri = (t1, t2, t3)
            m.trigram_counts[tri] = m.trigram_counts.get(tri, 0) + 1
            m._trigram_prefix[(t1, t2)] = m._trigram_prefix.get((t1, t2), 0) + 1
    return m


# ---------------------------------------------------------------------------
# Model directory serialization: one text file per table, tab separated,
# deterministic key order.  Header line records tiny and the corpus size.
# ---------------------------------------------------------------------------

def _table_lines(header: tuple[str, ...], rows: Iterable[tuple]) -> str:
    lines = ["#\t" + "\t".join(str(h) for h in header)]
    for row in rows:
        lines.append("\t".join(str(x) for x in row))
    return "\n".join(lines) + "\n"


def serialize_model(m: StatModel) -> dict[str, str]:
    """Render the model as {filename: content}."""
    files = {}
    files["lexical.tsv"] = _table_lines(
        ("tiny", m.tiny, "tokens", m.n_tokens),
        ((s, t, c, repr(m.lexical(s, t)))
         for (s, t), c in sorted(m.lexical_counts.items())),
    )
    files["bigram.tsv"] = _table_lines(
        ("tiny", m.tiny, "events", m.n_bigrams),
        ((t1, t2, c, repr(m.transition(t1, t2)))
         for (t1, t2), c in sorted(m.bigram_counts.items())),
    )
    files["trigram.tsv"] = _table_lines(
        ("tiny", m.tiny, "events", m.n_trigrams),
        ((t1, t2, t3, c, repr(m.trigram(t1, t2, t3)))
         for (t1, t2, t3), c in sorted(m.trigram_counts.items())),
    )
    files["start.tsv"] = _table_lines(
        ("tiny", m.tiny, "sequences", m.n_sequences),
        ((t, c, repr(m.start(t))) for t, c in sorted(m.start_counts.items())),
    )
    return files


def deserialize_model(files: dict[str, str]) -> StatModel:
    """Rebuild a StatModel from serialize_model output (counts only; the
    probabilities in the files are derived and re-derived on load)."""
    m = StatModel()

    def rows(name):
        out = []
        for line in files[name].splitlines():
            if not line or line.startswith("#\t"):
                if line.startswith("#\t"):
                    out.append(("#", line.split("\t")[1:]))
                continue
            out.append((None, line.split("\t")))
        return out

    for kind, parts in rows("lexical.tsv"):
        if kind == "#":
            m.tiny = float(parts[1])
            m.n_tokens = int(parts[3])
        else:
            s, t, c, _p = parts
            m.lexical_counts[(s, t)] = int(c)
            m.surface_counts[s] = m.surface_counts.get(s, 0) + int(c)
            m.tag_counts[t] = m.tag_counts.get(t, 0) + int(c)
    for kind, parts in rows("bigram.tsv"):
        if kind == "#":
            m.n_bigrams = int(parts[3])
        else:
            t1, t2, c, _p = parts
            m.bigram_counts[(t1, t2)] = int(c)
            m._bigram_left[t1] = m._bigram_left.get(t1, 0) + int(c)
            m._bigram_right[t2] = m._bigram_right.get(t2, 0) + int(c)
    for kind, parts in rows("trigram.tsv"):
        if kind == "#":
            m.n_trigrams = int(parts[3])
        else:
            t1, t2, t3, c, _p = parts
            m.trigram_counts[(t1, t2, t3)] = int(c)
            m._trigram_prefix[(t1, t2)] = m._trigram_prefix.get((t1, t2), 0) + int(c)
    for kind, parts in rows("start.tsv"):
        if kind == "#":
            m.n_sequences = int(parts[3])
        else:
            t, c, _p = parts
            m.start_counts[t] = int(c)
    return m
