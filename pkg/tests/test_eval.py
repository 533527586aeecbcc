import random

import pytest

from relaxtag.corpus import Lexicon
from relaxtag.evaluate import (
    EvalError,
    WINDOW_LABELS,
    accuracy,
    build_report,
    classify_behaviour,
    render_table,
    render_tsv,
)

LEX = Lexicon(entries={
    "the": {"D": 10},
    "saw": {"N": 4, "V": 6},
    "dog": {"N": 9},
    "run": {"N": 2, "V": 8},
}, total=39)


def test_accuracy_ambiguous_only():
    pred = [["D", "V", "N"]]
    gold = [["D", "N", "N"]]
    surf = [["the", "saw", "dog"]]
    # only "saw" is ambiguous and it is wrong
    assert accuracy(pred, gold, surf, LEX) == 0.0
    assert accuracy(pred, gold, surf, LEX, ambiguous_only=False) == \
        pytest.approx(100.0 * 2 / 3)


def test_accuracy_unknown_words_count_as_ambiguous():
    assert accuracy([["N"]], [["N"]], [["blorp"]], LEX) == 100.0


def test_accuracy_empty_population_is_none():
    assert accuracy([["D"]], [["D"]], [["the"]], LEX) is None


def test_accuracy_mismatched_shapes():
    with pytest.raises(EvalError):
        accuracy([["D"]], [["D"], ["N"]], [["the"]], LEX)
    with pytest.raises(EvalError):
        accuracy([["D", "N"]], [["D"]], [["the"]], LEX)


def test_accuracy_sequence_permutation_invariant():
    rng = random.Random(2)
    pred, gold, surf = [], [], []
    words = list(LEX.entries)
    for _ in range(20):
        n = rng.randint(1, 6)
        surf.append([rng.choice(words) for _ in range(n)])
        gold.append([rng.choice("DNV") for _ in range(n)])
        pred.append([rng.choice("DNV") for _ in range(n)])
    base = accuracy(pred, gold, surf, LEX)
    order = list(range(20))
    rng.shuffle(order)
    shuffled = accuracy([pred[i] for i in order], [gold[i] for i in order],
                        [surf[i] for i in order], LEX)
    assert shuffled == pytest.approx(base)


def test_overall_accuracy_at_least_ambiguous_with_perfect_unambiguous():
    # unambiguous words tagged straight from the lexicon are always right,
    # so overall accuracy can only improve on the ambiguous-only figure
    pred = [["D", "V", "N", "V"]]
    gold = [["D", "N", "N", "V"]]
    surf = [["the", "saw", "dog", "run"]]
    amb = accuracy(pred, gold, surf, LEX)
    overall = accuracy(pred, gold, surf, LEX, ambiguous_only=False)
    assert overall >= amb


# -- behaviour patterns -----------------------------------------------------

def test_classify_pattern_1_early_peak():
    per_it = [90.0, 88.0, 85.0] + [80.0] * 30
    assert classify_behaviour(per_it, convergence=80.0) == 1


def test_classify_pattern_2_peak_near_ten():
    per_it = [70.0] * 8 + [92.0, 91.0, 90.0] + [85.0] * 20
    assert classify_behaviour(per_it, convergence=85.0) == 2


def test_classify_pattern_3_peak_near_twenty():
    per_it = [70.0] * 17 + [95.0, 94.0, 93.0] + [90.0] * 10
    assert classify_behaviour(per_it, convergence=90.0) == 3


def test_classify_pattern_4_best_at_convergence():
    per_it = [70.0 + i for i in range(25)]
    assert classify_behaviour(per_it, convergence=99.0) == 4


def test_classify_ties_prefer_earliest_window():
    assert classify_behaviour([90.0] * 25, convergence=90.0) == 1


def test_classify_short_run():
    # converged before iteration 9: only the first window and the
    # convergence value exist
    assert classify_behaviour([80.0, 85.0], convergence=85.0) == 1
    assert classify_behaviour([80.0, 85.0], convergence=86.0) == 4


def test_classify_empty_rejected():
    with pytest.raises(EvalError):
        classify_behaviour([], convergence=50.0)


def test_classify_affine_invariance():
    rng = random.Random(8)
    for _ in range(50):
        per_it = [rng.uniform(50, 100) for _ in range(25)]
        conv = rng.uniform(50, 100)
        base = classify_behaviour(per_it, conv)
        scaled = classify_behaviour([0.3 * v + 7 for v in per_it],
                                    0.3 * conv + 7)
        assert scaled == base


# -- reports ----------------------------------------------------------------

def test_build_report_window_maxima():
    per_it = [60.0, 61.0, 62.0, 50.0, 50.0, 50.0, 50.0, 50.0,
              70.0, 71.0, 72.0] + [50.0] * 20
    r = build_report("SsApViFsB", per_it, convergence=55.0)
    assert r.window_accuracy["it.1-3"] == 62.0
    assert r.window_accuracy["it.9-11"] == 72.0
    assert r.window_accuracy["it.18-20"] == 50.0
    assert r.window_accuracy["conv."] == 55.0
    assert r.pattern == 2


def test_build_report_short_run_missing_windows():
    r = build_report("x", [60.0, 61.0], convergence=61.0)
    assert r.window_accuracy["it.9-11"] is None
    assert r.window_accuracy["it.18-20"] is None


def test_render_table_shape():
    r1 = build_report("SsApViFsB", [60.0] * 25, 61.0)
    r2 = build_report("SmAcViFsK", [60.0, 61.0], 61.0)
    out = render_table([r1, r2])
    lines = out.splitlines()
    assert len(lines) == 4
    assert lines[0].split() == ["algorithm", *WINDOW_LABELS, "pattern"]
    assert set(lines[1]) <= {"-", " "}
    assert "61.00" in lines[2]
    assert "—" in lines[3]
    assert all(len(l) <= len(lines[1]) for l in lines)


def test_render_table_empty_rejected():
    with pytest.raises(EvalError):
        render_table([])


def test_render_tsv_parallel_to_table():
    r = build_report("SsApViFsB", [60.0, 62.5], 62.5)
    out = render_tsv([r])
    lines = out.splitlines()
    assert lines[0] == "\t".join(("algorithm", *WINDOW_LABELS, "pattern"))
    cells = lines[1].split("\t")
    assert cells[0] == "SsApViFsB"
    assert cells[1] == "62.50"
    assert cells[2] == "—"
    assert cells[-1] == "1"  # peak reached within the first window too
