"""Accuracy scoring over ambiguous words, iteration-window reports, and
convergence-behaviour classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import Lexicon

# iteration windows reported per algorithm: very early, around ten,
# around twenty, and at convergence
WINDOWS = ((1, 3), (9, 11), (18, 20))
WINDOW_LABELS = ("it.1-3", "it.9-11", "it.18-20", "conv.")


class EvalError(ValueError):
    pass


def accuracy(pred: Sequence[Sequence[str]], gold: Sequence[Sequence[str]],
             surfaces: Sequence[Sequence[str]], lexicon: Lexicon,
             ambiguous_only: bool = True) -> float | None:
    """Percentage of correctly tagged words, optionally restricted to
    ambiguous ones (>= 2 lexicon tags; unknown words count as ambiguous).

    Returns None when the selected population is empty.
    """
    correct = 0
    total = 0
    if not (len(pred) == len(gold) == len(surfaces)):
        raise EvalError("prediction, gold, and surface sequence counts differ")
    for p_seq, g_seq, s_seq in zip(pred, gold, surfaces):
        if not (len(p_seq) == len(g_seq) == len(s_seq)):
            raise EvalError("sequence length mismatch between prediction and gold")
        for p, g, s in zip(p_seq, g_seq, s_seq):
            if ambiguous_only and not lexicon.is_ambiguous(s):
                continue
            total += 1
            if p == g:
                correct += 1
    if total == 0:
        return None
    return 100.0 * correct / total


@dataclass
class IterationReport:
    """One algorithm's accuracy per iteration window plus its behaviour
    pattern (which window attains the best accuracy)."""

    name: str
    window_accuracy: dict[str, float | None] = field(default_factory=dict)
    pattern: int | None = None


def classify_behaviour(per_iteration: Sequence[float],
                       convergence: float) -> int:
    """Which window holds the global accuracy maximum: 1 = very first
    iterations, 2 = around ten, 3 = around twenty, 4 = convergence.
    Earliest window wins ties."""
    if not per_iteration:
        raise EvalError("need at least one per-iteration accuracy")
    window_best = []
    for lo, hi in WINDOWS:
        vals = [per_iteration[i - 1] for i in range(lo, hi + 1)
                if i - 1 < len(per_iteration)]
        window_best.append(max(vals) if vals else None)
    window_best.append(convergence)
    overall = max(v for v in window_best if v is not None)
    for k, v in enumerate(window_best, 1):
        if v is not None and v == overall:
            return k
    raise AssertionError("unreachable")


def build_report(name: str, per_iteration: Sequence[float],
                 convergence: float) -> IterationReport:
    report = IterationReport(name=name)
    for label, (lo, hi) in zip(WINDOW_LABELS, WINDOWS):
        vals = [per_iteration[i - 1] for i in range(lo, hi + 1)
                if i - 1 < len(per_iteration)]
        report.window_accuracy[label] = max(vals) if vals else None
    report.window_accuracy["conv."] = convergence
    report.pattern = classify_behaviour(per_iteration, convergence)
    return report


def _cell(value: float | None) -> str:
    return "—" if value is None else f"{value:.2f}"


def render_table(reports: Iterable[IterationReport]) -> str:
    """Fixed-width text table, one row per algorithm, input order kept."""
    reports = list(reports)
    if not reports:
        raise EvalError("no reports to render")
    headers = ("algorithm", *WINDOW_LABELS, "pattern")
    rows = []
    for r in reports:
        rows.append((
            r.name,
            *(_cell(r.window_accuracy.get(label)) for label in WINDOW_LABELS),
            "—" if r.pattern is None else str(r.pattern),
        ))
    widths = [max(len(headers[c]), *(len(row[c]) for row in rows))
              for c in range(len(headers))]
    lines = []

    def fmt(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    lines.append(fmt(headers))
    lines.append(fmt(tuple("-" * w for w in widths)))
    lines.extend(fmt(row) for row in rows)
    return "\n".join(lines) + "\n"


def render_tsv(reports: Iterable[IterationReport]) -> str:
    """Machine-readable sibling of render_table."""
    lines = ["\t".join(("algorithm", *WINDOW_LABELS, "pattern"))]
    for r in reports:
        lines.append("\t".join((
            r.name,
            *(_cell(r.window_accuracy.get(label)) for label in WINDOW_LABELS),
            "—" if r.pattern is None else str(r.pattern),
        )))
    return "\n".join(lines) + "\n"
