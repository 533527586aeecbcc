"""Corpus reading and writing, lexicon building, candidate tag resolution.

File formats are deliberately plain text:

* tagged corpus: one ``surface<TAB>tag`` pair per line,
* raw corpus: one surface per line,
* a blank line forces a word-sequence break in either format.

A word sequence additionally closes after a token whose tag belongs to the
tag set's sentence-end tags, so running text splits at full stops without
any tokenization on our side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator


class CorpusError(ValueError):
    """Raised for malformed corpus or tag-set files; carries a line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class TagSet:
    """The label alphabet: an ordered list of tags plus two marked subsets.

    Tag order is total and stable; every deterministic tie-break in the
    tagger (decoding, most-likely lookup) follows it.
    """

    tags: tuple[str, ...]
    open_class_tags: frozenset[str]
    sentence_end_tags: frozenset[str]

    def __post_init__(self):
        if len(set(self.tags)) != len(self.tags):
            raise CorpusError("duplicate tags in tag set")
        for t in self.open_class_tags:
            if t not in self.tags:
                raise CorpusError(f"open-class tag {t!r} not in tag set")
        for t in self.sentence_end_tags:
            if t not in self.tags:
                raise CorpusError(f"sentence-end tag {t!r} not in tag set")
        object.__setattr__(self, "_order", {t: i for i, t in enumerate(self.tags)})

    def __contains__(self, tag: str) -> bool:
        return tag in self._order

    def order(self, tag: str) -> int:
        return self._order[tag]

    def sort_tags(self, tags: Iterable[str]) -> list[str]:
        """Return the given tags sorted into tag-set order."""
        return sorted(tags, key=self._order.__getitem__)

    def open_in_order(self) -> list[str]:
        return [t for t in self.tags if t in self.open_class_tags]


@dataclass(frozen=True)
class Token:
    surface: str
    gold_tag: str | None = None

    def __post_init__(self):
        if not self.surface:
            raise CorpusError("empty token surface")


@dataclass(frozen=True)
class WordSequence:
    """One taggable unit: the words between two sentence-end tokens."""

    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise CorpusError("empty word sequence")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[Token]:
        return iter(self.tokens)

    def surfaces(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def gold_tags(self) -> list[str]:
        tags = []
        for t in self.tokens:
            if t.gold_tag is None:
                raise CorpusError(f"token {t.surface!r} carries no gold tag")
            tags.append(t.gold_tag)
        return tags


@dataclass
class Lexicon:
    """Per-surface candidate tags with their gold-corpus occurrence counts."""

    entries: dict[str, dict[str, int]] = field(default_factory=dict)
    total: int = 0

    def __contains__(self, surface: str) -> bool:
        return surface in self.entries

    def tags_of(self, surface: str) -> dict[str, int]:
        return self.entries[surface]

    def is_ambiguous(self, surface: str) -> bool:
        """A word is ambiguous if it has >= 2 lexicon tags; unknown words count too."""
        if surface not in self.entries:
            return True
        return len(self.entries[surface]) >= 2


def parse_tagset(text: str) -> TagSet:
    """Parse a tag-set config: sections ``tags:``, ``open:``, ``end:``,
    one tag per line.  Full-line '#' comments are allowed; a line that is
    exactly "#" still counts as a tag (punctuation tag sets need it), and
    so does ":" (only the known section names act as headers)."""
    sections: dict[str, list[str]] = {"tags": [], "open": [], "end": []}
    current: list[str] | None = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or (line.startswith("#") and line != "#"):
            continue
        if line.endswith(":") and line[:-1].strip() in sections:
            current = sections[line[:-1].strip()]
            continue
        if current is None:
            raise CorpusError("identifier outside any section", lineno)
        current.append(line)
    return TagSet(
        tags=tuple(sections["tags"]),
        open_class_tags=frozenset(sections["open"]),
        sentence_end_tags=frozenset(sections["end"]),
    )


def format_tagset(tagset: TagSet) -> str:
    lines = ["tags:"]
    lines.extend(tagset.tags)
    lines.append("open:")
    lines.extend(t for t in tagset.tags if t in tagset.open_class_tags)
    lines.append("end:")
    lines.extend(t for t in tagset.tags if t in tagset.sentence_end_tags)
    return "\n".join(lines) + "\n"


def parse_tagged_corpus(text: str, tagset: TagSet) -> list[WordSequence]:
    """Read ``surface<TAB>tag`` lines into word sequences.

    A sequence closes after a token whose tag is a sentence-end tag, at a
    blank line, or at end of input.
    """
    sequences: list[WordSequence] = []
    pending: list[Token] = []

    def close():
        if pending:
            sequences.append(WordSequence(tuple(pending)))
            pending.clear()

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip():
            close()
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise CorpusError(f"expected 'surface<TAB>tag', got {line!r}", lineno)
        surface, tag = parts
        if tag not in tagset:
            raise CorpusError(f"unknown tag {tag!r}", lineno)
        pending.append(Token(surface, tag))
        if tag in tagset.sentence_end_tags:
            close()
    close()
    return sequences


def serialize_tagged_corpus(corpus: Iterable[WordSequence]) -> str:
    """Inverse of parse_tagged_corpus; parse(serialize(c)) == c."""
    blocks = []
    for seq in corpus:
        blocks.append("\n".join(f"{t.surface}\t{t.gold_tag}" for t in seq))
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def parse_raw_corpus(text: str, lexicon: Lexicon | None = None,
                     tagset: TagSet | None = None) -> list[WordSequence]:
    """Read one surface per line into word sequences.

    Breaks at blank lines always; additionally, when a lexicon and tag set
    are given, after any token whose known tags are all sentence-end tags
    (the tag-based analogue of "ends at the full stop").
    """
    sequences: list[WordSequence] = []
    pending: list[Token] = []

    def close():
        if pending:
            sequences.append(WordSequence(tuple(pending)))
            pending.clear()

    for lineno, raw in enumerate(text.splitlines(), 1):
        surface = raw.strip()
        if not surface:
            close()
            continue
        pending.append(Token(surface))
        if lexicon is not None and tagset is not None and surface in lexicon:
            tags = lexicon.tags_of(surface)
            if tags and all(t in tagset.sentence_end_tags for t in tags):
                close()
    close()
    return sequences


def build_lexicon(corpus: Iterable[WordSequence]) -> Lexicon:
    """Count (surface, tag) occurrences over a gold-tagged corpus."""
    lex = Lexicon()
    for seq in corpus:
        for tok in seq:
            if tok.gold_tag is None:
                raise CorpusError(f"untagged token {tok.surface!r} in training corpus")
            lex.entries.setdefault(tok.surface, {})
            lex.entries[tok.surface][tok.gold_tag] = (
                lex.entries[tok.surface].get(tok.gold_tag, 0) + 1
            )
            lex.total += 1
    return lex


def serialize_lexicon(lexicon: Lexicon) -> str:
    lines = [f"# total\t{lexicon.total}"]
    for surface in sorted(lexicon.entries):
        for tag in sorted(lexicon.entries[surface]):
            lines.append(f"{surface}\t{tag}\t{lexicon.entries[surface][tag]}")
    return "\n".join(lines) + "\n"


def parse_lexicon(text: str) -> Lexicon:
    lex = Lexicon()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line.split("\t")
            if len(parts) == 2 and parts[0] == "# total":
                lex.total = int(parts[1])
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise CorpusError(f"expected 'surface<TAB>tag<TAB>count', got {line!r}", lineno)
        surface, tag, count = parts
        lex.entries.setdefault(surface, {})[tag] = int(count)
    return lex


def candidate_tags(surface: str, lexicon: Lexicon, tagset: TagSet) -> list[str]:
    """Candidate tags for a word, in tag-set order.

    Known words get their lexicon tags; unknown words get all open-class
    tags.
    """
    if surface in lexicon:
        return tagset.sort_tags(lexicon.tags_of(surface).keys())
    open_tags = tagset.open_in_order()
    if not open_tags:
        raise CorpusError(
            f"unknown word {surface!r} and the tag set declares no open classes"
        )
    return open_tags
