"""Hand-written constraint language: parsing, matching, estimation,
and instantiation of the per-(word, tag) applicable-constraint sets.

A constraint statement has a heart in angle brackets and a body around it:

    "tal" * <\\Cq\\> ;
    <"out",\\II\\> "of" ;
    \\MD\\ *0..3 <\\VBN\\> @ 0.82 ;

Body items are word literals in double quotes, tags between backslashes,
tag sets in square brackets, and bounded gaps (* is shorthand for *1..1).
The optional "@ value" annotation carries a pre-estimated compatibility.
Lines starting with '#' are comments.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import TagSet, WordSequence
from .model import (
    ConfiningSpec,
    DEFAULT_TINY,
    PairCounts,
    compatibility_value,
    confine,
)

MAX_GAP = 99


class ConstraintError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


# -- pattern AST ------------------------------------------------------------

@dataclass(frozen=True)
class WordLit:
    surface: str


@dataclass(frozen=True)
class TagLit:
    tag: str


@dataclass(frozen=True)
class TagSetLit:
    tags: tuple[str, ...]

    def __post_init__(self):
        if not self.tags:
            raise ConstraintError("empty tag set in constraint body")


@dataclass(frozen=True)
class Gap:
    min: int
    max: int

    def __post_init__(self):
        if self.min < 0 or self.max < self.min or self.max > MAX_GAP:
            raise ConstraintError(f"bad gap bounds *{self.min}..{self.max}")


BodyItem = WordLit | TagLit | TagSetLit | Gap


@dataclass(frozen=True)
class Heart:
    """The word/tag (or word,tag pair) whose support the rule affects."""

    surface: str | None = None
    tag: str | None = None

    def __post_init__(self):
        if self.surface is None and self.tag is None:
            raise ConstraintError("empty heart")


@dataclass(frozen=True)
class ConstraintPattern:
    left: tuple[BodyItem, ...]
    heart: Heart
    right: tuple[BodyItem, ...]
    compatibility: float | None = None
    source_line: str = ""


# -- tokenizer --------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
      "(?P<word>[^"\n]*)"
    | \\(?P<tag>[^\\\n]+)\\
    | \*(?P<gap>\d+\.\.\d+)
    | (?P<star>\*)
    | (?P<punct>[\[\]<>,;@])
    | (?P<number>-?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)
    | (?P<comment>\#[^\n]*)
    | (?P<nl>\n)
    | (?P<ws>[ \t\r]+)
    | (?P<bad>.)
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    line = 1
    for m in _TOKEN_RE.finditer(text):
        kind = m.lastgroup
        if kind == "nl":
            line += 1
        elif kind in ("ws", "comment"):
            pass
        elif kind == "bad":
            raise ConstraintError(f"unexpected character {m.group()!r}", line)
        elif kind == "gap":
            tokens.append(("gap", m.group("gap"), line))
        elif kind == "star":
            tokens.append(("gap", "1..1", line))
        elif kind == "punct":
            tokens.append((m.group(), m.group(), line))
        else:
            tokens.append((kind, m.group(kind), line))
    return tokens


class _Cursor:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def eof(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self):
        if self.eof():
            return (None, None, None)
        return self.tokens[self.pos]

    def next(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, kind: str):
        k, v, line = self.next()
        if k != kind:
            raise ConstraintError(f"expected {kind!r}, got {v!r}", line)
        return v, line


def parse_constraints(text: str, tagset: TagSet) -> list[ConstraintPattern]:
    """Parse a constraint file; every statement ends in ';'."""
    cur = _Cursor(_tokenize(text))
    patterns = []
    while not cur.eof():
        patterns.append(_parse_statement(cur, tagset))
    return patterns


def _check_tag(tag: str, tagset: TagSet, line: int) -> str:
    if tag not in tagset:
        raise ConstraintError(f"unknown tag {tag!r}", line)
    return tag


def _parse_statement(cur: _Cursor, tagset: TagSet) -> ConstraintPattern:
    stmt_line = cur.peek()[2]
    left: list[BodyItem] = []
    right: list[BodyItem] = []
    heart: Heart | None = None
    compat: float | None = None
    side = left
    while True:
        kind, value, line = cur.next()
        if kind is None:
            raise ConstraintError("unterminated statement (missing ';')", stmt_line)
        if kind == ";":
            break
        if kind == "@":
            num, _ = cur.expect("number")
            compat = float(num)
        elif kind == "<":
            if heart is not None:
                raise ConstraintError("two hearts in one constraint", line)
            heart = _parse_heart(cur, tagset)
            side = right
        elif kind == "word":
            side.append(WordLit(value))
        elif kind == "tag":
            side.append(TagLit(_check_tag(value, tagset, line)))
        elif kind == "gap":
            lo, hi = value.split("..")
            side.append(Gap(int(lo), int(hi)))
        elif kind == "[":
            side.append(_parse_tagset_lit(cur, tagset))
        else:
            raise ConstraintError(f"unexpected token {value!r}", line)
    if heart is None:
        raise ConstraintError("constraint has no heart", stmt_line)
    return ConstraintPattern(
        left=tuple(left), heart=heart, right=tuple(right),
        compatibility=compat, source_line=f"line {stmt_line}",
    )


def _parse_tagset_lit(cur: _Cursor, tagset: TagSet) -> TagSetLit:
    tags = []
    while True:
        kind, value, line = cur.next()
        if kind == "]":
            break
        if kind == "tag":
            tags.append(_check_tag(value, tagset, line))
        elif kind == "word":
            raise ConstraintError("word literals are not allowed inside [ ]", line)
        else:
            raise ConstraintError(f"unexpected token {value!r} inside [ ]", line)
    return TagSetLit(tuple(tags))


def _parse_heart(cur: _Cursor, tagset: TagSet) -> Heart:
    surface = None
    tag = None
    while True:
        kind, value, line = cur.next()
        if kind == ">":
            break
        if kind == ",":
            continue
        if kind == "word":
            if surface is not None:
                raise ConstraintError("two word literals in heart", line)
            surface = value
        elif kind == "tag":
            if tag is not None:
                raise ConstraintError("two tags in heart", line)
            tag = _check_tag(value, tagset, line)
        else:
            raise ConstraintError(f"unexpected token {value!r} in heart", line)
    if surface is None and tag is None:
        raise ConstraintError("empty heart")
    return Heart(surface=surface, tag=tag)


# -- pretty printer ---------------------------------------------------------

def _format_item(item: BodyItem) -> str:
    if isinstance(item, WordLit):
        return f'"{item.surface}"'
    if isinstance(item, TagLit):
        return f"\\{item.tag}\\"
    if isinstance(item, TagSetLit):
        return "[" + " ".join(f"\\{t}\\" for t in item.tags) + "]"
    if item.min == 1 and item.max == 1:
        return "*"
    return f"*{item.min}..{item.max}"


def format_constraint(pattern: ConstraintPattern) -> str:
    parts = [_format_item(it) for it in pattern.left]
    h = pattern.heart
    if h.surface is not None and h.tag is not None:
        parts.append(f'<"{h.surface}",\\{h.tag}\\>')
    elif h.surface is not None:
        parts.append(f'<"{h.surface}">')
    else:
        parts.append(f"<\\{h.tag}\\>")
    parts.extend(_format_item(it) for it in pattern.right)
    text = " ".join(parts)
    if pattern.compatibility is not None:
        text += f" @ {pattern.compatibility!r}"
    return text + ";"


def format_constraints(patterns: Iterable[ConstraintPattern]) -> str:
    return "\n".join(format_constraint(p) for p in patterns) + "\n"


# -- matching ---------------------------------------------------------------

@dataclass(frozen=True)
class InstantiatedConstraint:
    """One concrete application of a constraint at a target (position, tag).

    factors are the context (position, tag) weight references; the target's
    own weight is not stored here, the support computation appends it when
    so configured.  cell identifies the degree-class x window grouping the
    product-style support functions need.
    """

    compatibility: float
    factors: tuple[tuple[int, str], ...]
    target: tuple[int, str]
    cell: tuple[str, int]


def heart_applies(pattern: ConstraintPattern, seq: WordSequence,
                  i: int, j: str) -> bool:
    h = pattern.heart
    if h.tag is not None and h.tag != j:
        return False
    if h.surface is not None and seq.tokens[i].surface != h.surface:
        return False
    return True


def _match_side(items: Sequence[BodyItem], start: int, step: int,
                seq: WordSequence, candidates: Sequence[Sequence[str]],
                ) -> list[tuple[tuple[int, str], ...]]:
    """Match body items outward from the heart.

    items are ordered nearest-heart first; start is the first position
    outward and step is -1 (left side) or +1 (right side).  Each gap
    commits to the smallest skip that lets the rest of the side match
    (shortest match, with backtracking); tag sets branch into one result
    per member present among the position's candidates.
    """
    n = len(seq)

    def rec(k: int, pos: int) -> list[tuple[tuple[int, str], ...]]:
        if k == len(items):
            return [()]
        item = items[k]
        if isinstance(item, Gap):
            for g in range(item.min, item.max + 1):
                # the skipped tokens must exist inside the sequence
                last_skipped = pos + step * (g - 1)
                if g > 0 and not (0 <= pos < n and 0 <= last_skipped < n):
                    break
                sub = rec(k + 1, pos + step * g)
                if sub:
                    return sub
            return []
        if not (0 <= pos < n):
            return []
        if isinstance(item, WordLit):
            if seq.tokens[pos].surface != item.surface:
                return []
            return [m for m in rec(k + 1, pos + step)]
        if isinstance(item, TagLit):
            if item.tag not in candidates[pos]:
                return []
            return [((pos, item.tag),) + m for m in rec(k + 1, pos + step)]
        # TagSetLit: branch over the members present at this position
        out = []
        rest = None
        for tag in item.tags:
            if tag in candidates[pos]:
                if rest is None:
                    rest = rec(k + 1, pos + step)
                out.extend(((pos, tag),) + m for m in rest)
        return out

    return rec(0, start)


def match_constraint(pattern: ConstraintPattern, seq: WordSequence,
                     candidates: Sequence[Sequence[str]], i: int, j: str,
                     compatibility: float | None = None,
                     ) -> list[InstantiatedConstraint]:
    """All instantiations of pattern anchored at target (i, j).

    Returns an empty list when the heart does not apply or the body fails
    to match inside the sequence.
    """
    if not heart_applies(pattern, seq, i, j):
        return []
    left = _match_side(tuple(reversed(pattern.left)), i - 1, -1, seq, candidates)
    if not left:
        return []
    right = _match_side(pattern.right, i + 1, +1, seq, candidates)
    if not right:
        return []
    if compatibility is None:
        compatibility = pattern.compatibility if pattern.compatibility is not None else 0.0
    out = []
    for lm in left:
        for rm in right:
            factors = tuple(sorted((*lm, *rm)))
            out.append(InstantiatedConstraint(
                compatibility=compatibility, factors=factors,
                target=(i, j), cell=("H", 0),
            ))
    return out


def body_matches(pattern: ConstraintPattern, seq: WordSequence,
                 candidates: Sequence[Sequence[str]], i: int) -> bool:
    """Does the body (context around position i) match, heart ignored?"""
    left = _match_side(tuple(reversed(pattern.left)), i - 1, -1, seq, candidates)
    if not left:
        return False
    return bool(_match_side(pattern.right, i + 1, +1, seq, candidates))


# -- compatibility estimation for hand-written constraints ------------------

@dataclass
class HandEstimate:
    value: float
    counts: PairCounts
    warning: str | None = None


def estimate_hand_compatibility(pattern: ConstraintPattern,
                                corpus: Iterable[WordSequence],
                                measure: str,
                                confiner: ConfiningSpec,
                                tiny: float = DEFAULT_TINY) -> HandEstimate:
    """Estimate a constraint's compatibility from pattern occurrences.

    Over all corpus positions (gold tags as the only candidates):
    n_AB counts full matches (body and heart), n_B heart matches alone,
    n_A body matches with the heart condition ignored.
    """
    n_total = 0
    n_a = 0
    n_b = 0
    n_ab = 0
    for seq in corpus:
        cands = [[t.gold_tag] for t in seq.tokens]
        for i, tok in enumerate(seq.tokens):
            n_total += 1
            h = heart_applies(pattern, seq, i, tok.gold_tag)
            b = body_matches(pattern, seq, cands, i)
            if h:
                n_b += 1
            if b:
                n_a += 1
            if h and b:
                n_ab += 1
    counts = PairCounts(n_ab=n_ab, n_a=n_a, n_b=n_b, n_total=n_total)
    warning = None
    if n_a == 0:
        warning = f"constraint body never matches in the corpus ({pattern.source_line})"
    value = confine(compatibility_value(counts, measure, tiny), confiner)
    return HandEstimate(value=value, counts=counts, warning=warning)


# -- bundle instantiation ---------------------------------------------------

@dataclass
class ConstraintBundle:
    """Per (position, tag) applicable constraints, split by degree class:
    binary (bigram windows), ternary (trigram windows), and the pooled
    hand-written set."""

    binary: dict[tuple[int, str], list[InstantiatedConstraint]]
    ternary: dict[tuple[int, str], list[InstantiatedConstraint]]
    hand: dict[tuple[int, str], list[InstantiatedConstraint]]
    selection: frozenset[str]

    def classes_for(self, key: tuple[int, str]) -> list[list[InstantiatedConstraint]]:
        return [self.binary.get(key, []), self.ternary.get(key, []),
                self.hand.get(key, [])]


VALID_SELECTION = frozenset("BTCK")


def instantiate_bundle(seq: WordSequence,
                       candidates: Sequence[Sequence[str]],
                       model,
                       hand: Sequence[tuple[ConstraintPattern, float]] = (),
                       selection: frozenset[str] = frozenset("B"),
                       measure: str = "mutual_information",
                       bigram_confiner: ConfiningSpec = ConfiningSpec("none"),
                       trigram_confiner: ConfiningSpec = ConfiningSpec("none"),
                       ) -> ConstraintBundle:
    """Build the applicable-constraint sets for every (position, tag).

    selection: B bigram windows, T trigram windows, C hand-written
    constraints, K per-target back-off (trigram windows where observed,
    bigram windows elsewhere).  hand carries (pattern, compatibility)
    pairs with compatibilities already estimated and confined.
    """
    selection = frozenset(selection)
    if not selection:
        raise ConstraintError("empty constraint selection")
    if not selection <= VALID_SELECTION:
        raise ConstraintError(f"unknown constraint selection {sorted(selection)}")
    if "K" in selection and selection & {"B", "T"}:
        raise ConstraintError("back-off (K) already subsumes bigrams and trigrams")

    n = len(seq)
    tiny = model.tiny
    binary: dict[tuple[int, str], list[InstantiatedConstraint]] = {}
    ternary: dict[tuple[int, str], list[InstantiatedConstraint]] = {}
    hand_map: dict[tuple[int, str], list[InstantiatedConstraint]] = {}
    pair_cache: dict[tuple, float] = {}

    def pair_value(t1: str, t2: str) -> float:
        key = ("2", t1, t2)
        if key not in pair_cache:
            v = compatibility_value(model.bigram_pair_counts(t1, t2), measure, tiny)
            pair_cache[key] = confine(v, bigram_confiner)
        return pair_cache[key]

    def triple_value(triple: tuple[str, str, str], slot: int) -> float:
        key = ("3", triple, slot)
        if key not in pair_cache:
            v = compatibility_value(model.trigram_pair_counts(triple, slot), measure, tiny)
            pair_cache[key] = confine(v, trigram_confiner)
        return pair_cache[key]

    want_binary = selection & {"B", "K"}
    want_ternary = selection & {"T", "K"}

    for i in range(n):
        for j in candidates[i]:
            key = (i, j)
            if want_binary:
                lst = []
                if i - 1 >= 0:
                    for k in candidates[i - 1]:
                        lst.append(InstantiatedConstraint(
                            compatibility=pair_value(k, j),
                            factors=((i - 1, k),), target=key, cell=("B", -1)))
                if i + 1 < n:
                    for k in candidates[i + 1]:
                        lst.append(InstantiatedConstraint(
                            compatibility=pair_value(j, k),
                            factors=((i + 1, k),), target=key, cell=("B", +1)))
                binary[key] = lst
            if want_ternary:
                lst = []
                # windows by offset of the target inside the tag triple
                for window, slot in (((i - 2, i - 1, i), 2),
                                     ((i - 1, i, i + 1), 1),
                                     ((i, i + 1, i + 2), 0)):
                    if window[0] < 0 or window[2] >= n:
                        continue
                    others = [p for p in window if p != i]
                    for ka in candidates[others[0]]:
                        for kb in candidates[others[1]]:
                            tags = {others[0]: ka, others[1]: kb, i: j}
                            triple = tuple(tags[p] for p in window)
                            lst.append(InstantiatedConstraint(
                                compatibility=triple_value(triple, slot),
                                factors=((others[0], ka), (others[1], kb)),
                                target=key, cell=("T", slot)))
                ternary[key] = lst

    if "K" in selection:
        # back-off: a target keeps its ternary set only when at least one
        # of its trigram windows was actually observed in training
        for key, lst in ternary.items():
            observed = False
            for ic in lst:
                i, j = ic.target
                tags = dict(ic.factors)
                tags[i] = j
                triple = tuple(tags[p] for p in sorted(tags))
                if model.trigram_counts.get(triple, 0) > 0:
                    observed = True
                    break
            if observed:
                binary.pop(key, None)
            else:
                ternary[key] = []
        ternary = {k: v for k, v in ternary.items() if v}
    else:
        if "B" not in selection:
            binary = {}
        if "T" not in selection:
            ternary = {}

    if "C" in selection:
        for pattern, compat in hand:
            for i in range(n):
                for j in candidates[i]:
                    matches = match_constraint(pattern, seq, candidates, i, j,
                                               compatibility=compat)
                    if matches:
                        hand_map.setdefault((i, j), []).extend(matches)

    return ConstraintBundle(binary=binary, ternary=ternary, hand=hand_map,
                            selection=selection)
