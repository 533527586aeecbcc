"""The relaxation labelling engine.

Each word carries a weight per candidate tag.  Every iteration computes,
per (word, tag), the support the tag receives from the current weights of
its context under the active constraint set, then updates all weights
synchronously from that support until the weights stop moving or an
iteration cap is hit.

Algorithm variants are named compactly, e.g. "SsApViFsB": support family,
update rule, compatibility measure, confining map, constraint selection.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import WordSequence
from .model import ConfiningSpec, StatModel
from .constraints import ConstraintBundle, ConstraintPattern, instantiate_bundle

DEFAULT_EPSILON = 1e-3
DEFAULT_MAX_ITERS = 500
DEFAULT_WINNER_EPSILON = 0.1
DEFAULT_TEMPERATURE = 1.0
DEFAULT_TEMPERATURE_DECAY = 0.9

SUPPORT_KINDS = ("additive", "prodsum", "prodmax", "seqprob")
UPDATE_KINDS = ("scaled", "multiplicative", "softmax")

_MEASURE_BY_LETTER = {
    "p": "probability",
    "i": "mutual_information",
    "k": "association_ratio",
    "h": "relative_entropy",
}
_SUPPORT_BY_LETTER = {"s": "additive", "p": "prodsum", "m": "prodmax", "q": "seqprob"}
_UPDATE_BY_LETTER = {"c": "scaled", "p": "multiplicative"}
_CONFINER_BY_LETTER = {"l": "linear", "s": "logistic", "t": "arctan", "h": "tanh", "n": "none"}


class AlgorithmError(ValueError):
    pass


@dataclass(frozen=True)
class AlgorithmSpec:
    """Decoded algorithm name plus the knobs the name does not carry."""

    support: str
    update: str
    measure: str
    confiner: str          # linear / logistic / arctan / tanh / none
    selection: frozenset[str]
    include_target_weight: bool = True
    temperature: float = DEFAULT_TEMPERATURE
    temperature_decay: float = DEFAULT_TEMPERATURE_DECAY
    name: str = ""

    def __post_init__(self):
        if self.support not in SUPPORT_KINDS:
            raise AlgorithmError(f"unknown support kind {self.support!r}")
        if self.update not in UPDATE_KINDS:
            raise AlgorithmError(f"unknown update kind {self.update!r}")

    def confiner_kind(self) -> str:
        """Resolve the confiner letter against the update rule: the linear
        map lands in [0,1] for the multiplicative update and in [-1,1] for
        the scaled one."""
        if self.confiner == "linear":
            return "linear01" if self.update == "multiplicative" else "linear11"
        return self.confiner


_NAME_RE = re.compile(r"^S([spmq])A([cp])V([pikh])(?:F([lsthn]))?([BTCK]+)$")


def parse_algorithm_name(name: str) -> AlgorithmSpec:
    """Decode a name like SsApViFsB and reject nonsense combinations."""
    m = _NAME_RE.match(name)
    if m is None:
        raise AlgorithmError(f"malformed algorithm name {name!r}")
    s, a, v, f, sel = m.groups()
    support = _SUPPORT_BY_LETTER[s]
    update = _UPDATE_BY_LETTER[a]
    measure = _MEASURE_BY_LETTER[v]

    if v == "p":
        if f is not None:
            raise AlgorithmError(
                f"{name}: probabilities are already in [0,1], no confiner applies")
        confiner = "none"
    else:
        if f is None:
            raise AlgorithmError(
                f"{name}: measure {measure} is unbounded, a confiner is required")
        confiner = _CONFINER_BY_LETTER[f]

    if len(set(sel)) != len(sel):
        raise AlgorithmError(f"{name}: repeated constraint letter")
    selection = frozenset(sel)
    if "K" in selection and selection & {"B", "T"}:
        raise AlgorithmError(f"{name}: back-off K already subsumes B and T")

    if update == "multiplicative" and v != "p":
        # the multiplicative rule needs nonnegative supports
        if confiner in ("arctan", "tanh"):
            raise AlgorithmError(
                f"{name}: update rule needs nonnegative support, "
                f"{confiner} produces signed values")
        if confiner == "none" and support != "seqprob":
            raise AlgorithmError(
                f"{name}: update rule needs nonnegative support, "
                f"unconfined {measure} can be negative")

    if support == "seqprob" and not selection & {"B", "K"}:
        raise AlgorithmError(
            f"{name}: the sequence-probability support needs bigrams (B or K)")

    return AlgorithmSpec(support=support, update=update, measure=measure,
                         confiner=confiner, selection=selection, name=name)


# -- state ------------------------------------------------------------------

@dataclass
class LabellingState:
    """Per position, an ordered tag -> weight map; rows sum to 1."""

    weights: list[dict[str, float]]
    iteration: int = 0

    def copy_weights(self) -> list[dict[str, float]]:
        return [dict(row) for row in self.weights]

    def argmax(self) -> list[str]:
        """Current best tag per position, first-listed tag on ties."""
        out = []
        for row in self.weights:
            best_tag, best_w = None, -1.0
            for tag, w in row.items():
                if w > best_w:
                    best_tag, best_w = tag, w
            out.append(best_tag)
        return out


def init_state(seq: WordSequence, candidates: Sequence[Sequence[str]],
               model: StatModel, mode: str = "lexical",
               winner_epsilon: float = DEFAULT_WINNER_EPSILON) -> LabellingState:
    """Starting weights: the renormalized lexical distribution, a near-
    one-hot on the lexically most probable tag, or uniform."""
    rows = []
    for tok, cands in zip(seq, candidates):
        if not cands:
            raise AlgorithmError(f"no candidate tags for {tok.surface!r}")
        m = len(cands)
        if mode == "uniform":
            row = {t: 1.0 / m for t in cands}
        elif mode in ("lexical", "winner"):
            probs = [model.lexical(tok.surface, t) for t in cands]
            total = sum(probs)
            row = {t: p / total for t, p in zip(cands, probs)}
            if mode == "winner" and m > 1:
                best = max(row, key=lambda t: (row[t], -cands.index(t)))
                row = {t: (1.0 - winner_epsilon) if t == best
                       else winner_epsilon / (m - 1) for t in cands}
        else:
            raise AlgorithmError(f"unknown init mode {mode!r}")
        rows.append(row)
    return LabellingState(weights=rows)


# -- support ----------------------------------------------------------------

@dataclass
class SupportMatrix:
    values: list[dict[str, float]]
    kind: str


def _constraint_term(ic, weights, include_target: bool) -> float:
    prod = ic.compatibility
    for pos, tag in ic.factors:
        prod *= weights[pos][tag]
    if include_target:
        i, j = ic.target
        prod *= weights[i][j]
    return prod


def _additive(constraint_lists, weights, include_target: bool) -> float:
    total = 0.0
    for lst in constraint_lists:
        for ic in lst:
            total += _constraint_term(ic, weights, include_target)
    return total


def sequence_log_prob(seq: WordSequence, tags: Sequence[str],
                      model: StatModel) -> float:
    """Log of: start prob of the first tag, times each word's lexical
    probability, times each adjacent tag transition."""
    lp = math.log(model.start(tags[0]))
    for tok, tag in zip(seq, tags):
        lp += math.log(model.lexical(tok.surface, tag))
    for t1, t2 in zip(tags, tags[1:]):
        lp += math.log(model.transition(t1, t2))
    return lp


def compute_support(state: LabellingState, bundle: ConstraintBundle,
                    kind: str, model: StatModel, seq: WordSequence,
                    candidates: Sequence[Sequence[str]],
                    include_target_weight: bool = True) -> SupportMatrix:
    weights = state.weights
    values: list[dict[str, float]] = []

    if kind == "seqprob":
        if not bundle.selection & {"B", "K"}:
            raise AlgorithmError(
                "sequence-probability support needs a bigram-bearing selection")
        current = state.argmax()
        for i, cands in enumerate(candidates):
            logb = {}
            for j in cands:
                tags = list(current)
                tags[i] = j
                logb[j] = sequence_log_prob(seq, tags, model)
            # exponentiation only survives moderately long sequences; on
            # extreme ones shift by the row max, which rescales the whole
            # row and leaves both update rules unaffected
            shift = 0.0
            row_max = max(logb.values())
            if row_max < -600.0:
                shift = row_max
            row = {}
            for j in cands:
                b = math.exp(logb[j] - shift)
                t = _additive([bundle.ternary.get((i, j), [])], weights,
                              include_target_weight)
                c = _additive([bundle.hand.get((i, j), [])], weights,
                              include_target_weight)
                row[j] = b * (1.0 + t) * (1.0 + c)
            values.append(row)
        return SupportMatrix(values=values, kind=kind)

    for i, cands in enumerate(candidates):
        row = {}
        for j in cands:
            classes = bundle.classes_for((i, j))
            if kind == "additive":
                row[j] = _additive(classes, weights, include_target_weight)
            elif kind in ("prodsum", "prodmax"):
                cells: dict[tuple, list] = {}
                for lst in classes:
                    for ic in lst:
                        cells.setdefault(ic.cell, []).append(ic)
                s = 1.0
                for cell_ics in cells.values():
                    terms = [_constraint_term(ic, weights, include_target_weight)
                             for ic in cell_ics]
                    s *= sum(terms) if kind == "prodsum" else max(terms)
                row[j] = s
            else:
                raise AlgorithmError(f"unknown support kind {kind!r}")
        values.append(row)
    return SupportMatrix(values=values, kind=kind)


def normalize_support_row(row: dict[str, float], update: str,
                          position: int | None = None) -> dict[str, float]:
    """Bring a support row into the range its update rule needs.

    The scaled update divides by the row's largest absolute support so the
    image is [-1, 1]; an all-zero row is left alone.  The other rules take
    supports as they are, but the multiplicative rule refuses negatives.
    """
    if update == "scaled":
        m = max(abs(v) for v in row.values())
        if m == 0.0:
            return dict(row)
        return {t: v / m for t, v in row.items()}
    if update == "multiplicative":
        for t, v in row.items():
            if v < 0.0:
                where = f"position {position}, tag {t}" if position is not None \
                    else f"tag {t}"
                raise AlgorithmError(
                    f"negative support {v} at {where}: the multiplicative "
                    f"update requires nonnegative supports")
    return dict(row)


def normalize_support(s: SupportMatrix, update: str) -> SupportMatrix:
    return SupportMatrix(
        values=[normalize_support_row(row, update, i)
                for i, row in enumerate(s.values)],
        kind=s.kind,
    )


def update_weights(state: LabellingState, s: SupportMatrix,
                   spec: AlgorithmSpec, temperature: float | None = None,
                   rng: random.Random | None = None,
                   ) -> tuple[LabellingState, list[int]]:
    """One synchronous update step.  Returns the new state and the list of
    positions whose update denominator degenerated to zero (those rows
    keep their previous weights)."""
    new_rows = []
    degenerate = []
    for i, (row, srow) in enumerate(zip(state.weights, s.values)):
        if spec.update == "scaled":
            raw = {t: row[t] * (1.0 + srow[t]) for t in row}
        elif spec.update == "multiplicative":
            raw = {t: row[t] * srow[t] for t in row}
        else:
            temp = temperature if temperature is not None else spec.temperature
            m = max(srow.values())
            raw = {t: math.exp((srow[t] - m) / temp) for t in row}
        total = sum(raw.values())
        if total <= 0.0 or not math.isfinite(total):
            degenerate.append(i)
            new_rows.append(dict(row))
            continue
        new = {t: v / total for t, v in raw.items()}
        if spec.update == "softmax" and rng is not None:
            pick = rng.choices(list(new), weights=list(new.values()))[0]
            new = {t: 1.0 if t == pick else 0.0 for t in new}
        new_rows.append(new)
    return LabellingState(weights=new_rows, iteration=state.iteration + 1), degenerate


# -- driver -----------------------------------------------------------------

@dataclass
class RunResult:
    state: LabellingState
    snapshots: list[list[dict[str, float]]]
    iterations: int
    converged: bool
    degeneracies: int = 0


def run(seq: WordSequence, candidates: Sequence[Sequence[str]],
        spec: AlgorithmSpec, model: StatModel, bundle: ConstraintBundle,
        init_mode: str = "lexical", epsilon: float = DEFAULT_EPSILON,
        max_iters: int = DEFAULT_MAX_ITERS, retain_snapshots: bool = False,
        rng: random.Random | None = None,
        winner_epsilon: float = DEFAULT_WINNER_EPSILON) -> RunResult:
    """Iterate support -> normalize -> update until the largest weight
    change drops below epsilon or the iteration cap is reached."""
    state = init_state(seq, candidates, model, init_mode, winner_epsilon)
    snapshots: list[list[dict[str, float]]] = []
    temperature = spec.temperature
    degeneracies = 0
    converged = False
    iterations = 0
    for _ in range(max_iters):
        s = compute_support(state, bundle, spec.support, model, seq,
                            candidates, spec.include_target_weight)
        s = normalize_support(s, spec.update)
        new_state, degenerate = update_weights(state, s, spec, temperature, rng)
        degeneracies += len(degenerate)
        if spec.update == "softmax":
            temperature *= spec.temperature_decay
        delta = max(
            (abs(new_state.weights[i][t] - state.weights[i][t])
             for i in range(len(state.weights)) for t in state.weights[i]),
            default=0.0,
        )
        state = new_state
        iterations += 1
        if retain_snapshots:
            snapshots.append(state.copy_weights())
        if delta < epsilon:
            converged = True
            break
    return RunResult(state=state, snapshots=snapshots, iterations=iterations,
                     converged=converged, degeneracies=degeneracies)


def decode(state: LabellingState) -> list[str]:
    """Best tag per position; candidate order (tag-set order) breaks ties."""
    return state.argmax()


def format_snapshot(weights: list[dict[str, float]]) -> str:
    lines = []
    for i, row in enumerate(weights):
        for tag, w in row.items():
            lines.append(f"{i}\t{tag}\t{w!r}")
    return "\n".join(lines) + "\n"


# -- convenience front end --------------------------------------------------

@dataclass
class Tagger:
    """Bundles a trained model with an algorithm choice and tags sequences.

    Resolves the confining maps once: the linear maps default their range
    parameter to the largest absolute compatibility observed in the
    corresponding n-gram table, the sigmoid ones to steepness beta.
    """

    model: StatModel
    spec: AlgorithmSpec
    hand: list[tuple[ConstraintPattern, float]] = field(default_factory=list)
    beta: float | None = None
    init_mode: str = "lexical"
    epsilon: float = DEFAULT_EPSILON
    max_iters: int = DEFAULT_MAX_ITERS
    winner_epsilon: float = DEFAULT_WINNER_EPSILON
    _confiners: dict[str, ConfiningSpec] = field(default_factory=dict, repr=False)

    def confiner_for(self, source: str) -> ConfiningSpec:
        if source not in self._confiners:
            kind = self.spec.confiner_kind()
            if kind == "none":
                spec = ConfiningSpec("none")
            elif kind in ("linear01", "linear11"):
                b = self.beta
                if b is None:
                    b = self.model.max_abs_compatibility(source, self.spec.measure)
                if b == 0.0:
                    b = 1.0
                spec = ConfiningSpec(kind, b)
            else:
                spec = ConfiningSpec(kind, self.beta if self.beta is not None else 1.0)
            self._confiners[source] = spec
        return self._confiners[source]

    def bundle_for(self, seq: WordSequence,
                   candidates: Sequence[Sequence[str]]) -> ConstraintBundle:
        return instantiate_bundle(
            seq, candidates, self.model, hand=self.hand,
            selection=self.spec.selection, measure=self.spec.measure,
            bigram_confiner=self.confiner_for("bigram"),
            trigram_confiner=self.confiner_for("trigram"),
        )

    def run_sequence(self, seq: WordSequence,
                     candidates: Sequence[Sequence[str]],
                     retain_snapshots: bool = False,
                     rng: random.Random | None = None) -> RunResult:
        bundle = self.bundle_for(seq, candidates)
        return run(seq, candidates, self.spec, self.model, bundle,
                   init_mode=self.init_mode, epsilon=self.epsilon,
                   max_iters=self.max_iters, retain_snapshots=retain_snapshots,
                   rng=rng, winner_epsilon=self.winner_epsilon)

    def tag_sequence(self, seq: WordSequence,
                     candidates: Sequence[Sequence[str]],
                     rng: random.Random | None = None) -> list[str]:
        return decode(self.run_sequence(seq, candidates, rng=rng).state)
