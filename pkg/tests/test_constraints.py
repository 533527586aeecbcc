import itertools
import math
import random

import pytest

from relaxtag.corpus import TagSet, Token, WordSequence
from relaxtag.model import ConfiningSpec, compatibility_value
from relaxtag.constraints import (
    ConstraintError,
    ConstraintPattern,
    Gap,
    Heart,
    TagLit,
    TagSetLit,
    WordLit,
    body_matches,
    estimate_hand_compatibility,
    format_constraints,
    heart_applies,
    instantiate_bundle,
    match_constraint,
    parse_constraints,
)

TS = TagSet(tags=("Cq", "MD", "VB", "II", "D", "N", "V", "."),
            open_class_tags=frozenset({"N", "V"}),
            sentence_end_tags=frozenset({"."}))


# -- parsing ----------------------------------------------------------------

def test_parse_word_gap_heart():
    (p,) = parse_constraints(r'"tal" * <\Cq\>;', TS)
    assert p.left == (WordLit("tal"), Gap(1, 1))
    assert p.heart == Heart(tag="Cq")
    assert p.right == ()


def test_parse_bounded_gap():
    (p,) = parse_constraints(r"\MD\ *0..1 <\VB\> ;", TS)
    assert p.left == (TagLit("MD"), Gap(0, 1))
    assert p.heart == Heart(tag="VB")


def test_parse_pair_heart():
    (p,) = parse_constraints(r'<"out",\II\> "of";', TS)
    assert p.heart == Heart(surface="out", tag="II")
    assert p.right == (WordLit("of"),)


def test_parse_tagset_literal_and_annotation():
    (p,) = parse_constraints(r"[\D\ \N\] <\V\> @ 0.25;", TS)
    assert p.left == (TagSetLit(("D", "N")),)
    assert p.compatibility == 0.25


def test_parse_multiple_statements_and_comments():
    ps = parse_constraints("# header\n\\D\\ <\\N\\>;\n<\\V\\> \\N\\;\n", TS)
    assert len(ps) == 2


def test_parse_missing_heart():
    with pytest.raises(ConstraintError):
        parse_constraints(r"\D\ \N\;", TS)


def test_parse_two_hearts():
    with pytest.raises(ConstraintError):
        parse_constraints(r"<\D\> <\N\>;", TS)


def test_parse_unknown_tag_with_line_number():
    with pytest.raises(ConstraintError, match="line 2"):
        parse_constraints("\\D\\ <\\N\\>;\n<\\XX\\>;", TS)


def test_parse_unterminated_statement():
    with pytest.raises(ConstraintError):
        parse_constraints(r"\D\ <\N\>", TS)


def test_parse_word_inside_tagset_rejected():
    with pytest.raises(ConstraintError):
        parse_constraints(r'["w" \N\] <\V\>;', TS)


def test_parse_gap_bounds():
    with pytest.raises(ConstraintError):
        parse_constraints(r"*3..2 <\N\>;", TS)
    with pytest.raises(ConstraintError):
        parse_constraints(r"*0..100 <\N\>;", TS)


def test_pretty_print_fixed_point():
    text = ('"tal" * <\\Cq\\>;\n\\MD\\ *0..1 <\\VB\\>;\n'
            '<"out",\\II\\> "of";\n[\\D\\ \\N\\] *2..5 <\\V\\> @ 0.5;\n')
    ps = parse_constraints(text, TS)
    printed = format_constraints(ps)
    again = parse_constraints(printed, TS)
    assert [(p.left, p.heart, p.right, p.compatibility) for p in ps] == \
        [(p.left, p.heart, p.right, p.compatibility) for p in again]
    assert format_constraints(again) == printed


FIXTURES = (("spanish_novel", 53), ("susanne", 66),
            ("wsj", 32), ("spanish_press", 31))


@pytest.mark.parametrize("name,count", FIXTURES)
def test_bundled_fixture_files(name, count):
    import importlib.resources as ir

    from relaxtag.corpus import parse_tagset

    root = ir.files("relaxtag")
    ts = parse_tagset((root / f"data/tagsets/{name}.tags").read_text("utf-8"))
    text = (root / f"data/constraints/{name}.cst").read_text("utf-8")
    ps = parse_constraints(text, ts)
    assert len(ps) == count
    again = parse_constraints(format_constraints(ps), ts)
    assert [(p.left, p.heart, p.right) for p in ps] == \
        [(p.left, p.heart, p.right) for p in again]


# -- matching ---------------------------------------------------------------

def seq_of(*pairs):
    return WordSequence(tuple(Token(s, t) for s, t in pairs))


def test_match_word_gap_example():
    (p,) = parse_constraints(r'"tal" * <\Cq\>;', TS)
    seq = seq_of(("tal", "D"), ("foo", "N"), ("que", "Cq"))
    cands = [["D"], ["N"], ["Cq", "N"]]
    out = match_constraint(p, seq, cands, 2, "Cq")
    assert len(out) == 1
    assert out[0].factors == ()  # word literal and gap carry no weights
    assert out[0].target == (2, "Cq")


def test_match_shortest_gap_taken():
    # both gap=1 and gap=2 alignments exist; only gap=1 is returned
    (p,) = parse_constraints(r'"x" *0..3 <\N\>;', TS)
    seq = seq_of(("x", "D"), ("x", "D"), ("w", "N"))
    cands = [["D"], ["D"], ["N"]]
    out = match_constraint(p, seq, cands, 2, "N")
    assert len(out) == 1


def test_match_heart_mismatch_empty():
    (p,) = parse_constraints(r'"tal" * <\Cq\>;', TS)
    seq = seq_of(("tal", "D"), ("foo", "N"), ("que", "Cq"))
    assert match_constraint(p, seq, [["D"], ["N"], ["N"]], 2, "N") == []


def test_match_past_boundary_fails():
    (p,) = parse_constraints(r"\D\ * <\N\>;", TS)
    seq = seq_of(("a", "D"), ("b", "N"))
    assert match_constraint(p, seq, [["D"], ["N"]], 1, "N") == []


def test_match_trailing_gap_needs_tokens():
    (p,) = parse_constraints(r"<\N\> *2..2;", TS)
    seq = seq_of(("a", "N"), ("b", "D"))
    assert match_constraint(p, seq, [["N"], ["D"]], 0, "N") == []
    seq3 = seq_of(("a", "N"), ("b", "D"), ("c", "D"))
    assert len(match_constraint(p, seq3, [["N"], ["D"], ["D"]], 0, "N")) == 1


def test_match_tagset_branches_per_candidate_member():
    (p,) = parse_constraints(r"[\D\ \N\ \V\] <\Cq\>;", TS)
    seq = seq_of(("w", "N"), ("que", "Cq"))
    out = match_constraint(p, seq, [["D", "N"], ["Cq"]], 1, "Cq")
    assert sorted(ic.factors for ic in out) == [((0, "D"),), ((0, "N"),)]


def test_match_tag_requires_candidate():
    (p,) = parse_constraints(r"\V\ <\Cq\>;", TS)
    seq = seq_of(("w", "N"), ("que", "Cq"))
    assert match_constraint(p, seq, [["D", "N"], ["Cq"]], 1, "Cq") == []


def test_match_pair_heart_needs_both():
    (p,) = parse_constraints(r'<"out",\II\> "of";', TS)
    seq = seq_of(("out", "II"), ("of", "II"))
    cands = [["II", "N"], ["II"]]
    assert len(match_constraint(p, seq, cands, 0, "II")) == 1
    assert match_constraint(p, seq, cands, 0, "N") == []
    seq2 = seq_of(("shout", "II"), ("of", "II"))
    assert match_constraint(p, seq2, cands, 0, "II") == []


# -- brute-force matcher oracle ---------------------------------------------

def oracle_side(items, start, step, seq, candidates):
    """All factor tuples for the lexicographically smallest feasible gap
    vector, by full enumeration."""
    n = len(seq)
    gaps = [it for it in items if isinstance(it, Gap)]
    for vector in itertools.product(*[range(g.min, g.max + 1) for g in gaps]):
        pos = start
        gi = 0
        options = []
        ok = True
        for it in items:
            if isinstance(it, Gap):
                g = vector[gi]
                gi += 1
                for d in range(g):
                    if not 0 <= pos + step * d < n:
                        ok = False
                        break
                pos += step * g
                if not ok:
                    break
                continue
            if not 0 <= pos < n:
                ok = False
                break
            if isinstance(it, WordLit):
                if seq.tokens[pos].surface != it.surface:
                    ok = False
                    break
            elif isinstance(it, TagLit):
                if it.tag not in candidates[pos]:
                    ok = False
                    break
                options.append([(pos, it.tag)])
            else:
                members = [(pos, t) for t in it.tags if t in candidates[pos]]
                if not members:
                    ok = False
                    break
                options.append(members)
            pos += step
        if ok:
            return [tuple(combo) for combo in itertools.product(*options)]
    return None


def oracle_match(pattern, seq, candidates, i, j):
    if not heart_applies(pattern, seq, i, j):
        return set()
    left = oracle_side(tuple(reversed(pattern.left)), i - 1, -1, seq, candidates)
    if left is None:
        return set()
    right = oracle_side(pattern.right, i + 1, +1, seq, candidates)
    if right is None:
        return set()
    return {tuple(sorted((*l, *r))) for l in left for r in right}


def random_pattern(rng, tags, vocab):
    def item():
        k = rng.randrange(4)
        if k == 0:
            return WordLit(rng.choice(vocab))
        if k == 1:
            return TagLit(rng.choice(tags))
        if k == 2:
            return TagSetLit(tuple(rng.sample(tags, rng.randint(1, 3))))
        lo = rng.randint(0, 2)
        return Gap(lo, lo + rng.randint(0, 2))

    heart = rng.choice([
        Heart(tag=rng.choice(tags)),
        Heart(surface=rng.choice(vocab)),
        Heart(surface=rng.choice(vocab), tag=rng.choice(tags)),
    ])
    return ConstraintPattern(
        left=tuple(item() for _ in range(rng.randint(0, 3))),
        heart=heart,
        right=tuple(item() for _ in range(rng.randint(0, 3))),
    )


def random_instance(rng, tags, vocab):
    n = rng.randint(1, 8)
    toks = []
    cands = []
    for _ in range(n):
        toks.append(Token(rng.choice(vocab), rng.choice(tags)))
        cands.append(sorted(rng.sample(tags, rng.randint(1, 3))))
    return WordSequence(tuple(toks)), cands


def test_match_equals_brute_force():
    rng = random.Random(42)
    tags = ["D", "N", "V", "Cq"]
    vocab = ["a", "b", "c"]
    checked = 0
    for _ in range(500):
        pattern = random_pattern(rng, tags, vocab)
        seq, cands = random_instance(rng, tags, vocab)
        for i in range(len(seq)):
            for j in cands[i]:
                got = {ic.factors for ic in
                       match_constraint(pattern, seq, cands, i, j)}
                assert got == oracle_match(pattern, seq, cands, i, j), \
                    (pattern, seq, cands, i, j)
                checked += 1
    assert checked > 1000


# -- compatibility estimation ------------------------------------------------

def gold_corpus(*sentences):
    return [WordSequence(tuple(Token(s, t) for s, t in sent))
            for sent in sentences]


def test_estimate_hand_compatibility_counts():
    # 100 positions; the body ("x" before) and the heart (tag N) co-occur
    # in exactly 10, and each occurs in exactly 10
    sents = []
    for k in range(10):
        sent = [("x", "D"), (f"w{k}", "N")] + [("f", "V")] * 8
        sents.append(sent)
    corpus = gold_corpus(*sents)
    (p,) = parse_constraints(r'"x" <\N\>;', TS)
    est = estimate_hand_compatibility(p, corpus, "mutual_information",
                                      ConfiningSpec("none"))
    c = est.counts
    assert (c.n_ab, c.n_a, c.n_b, c.n_total) == (10, 10, 10, 100)
    assert est.value == pytest.approx(math.log2(0.1 / 0.01))


def test_estimate_hand_compatibility_probability():
    corpus = gold_corpus([("x", "D"), ("y", "N")] * 5)
    (p,) = parse_constraints(r'"x" <\N\>;', TS)
    est = estimate_hand_compatibility(p, corpus, "probability",
                                      ConfiningSpec("none"))
    assert est.value == pytest.approx(est.counts.n_ab / est.counts.n_total)


def test_estimate_hand_compatibility_never_matching_body_warns():
    corpus = gold_corpus([("y", "N")] * 4)
    (p,) = parse_constraints(r'"zz" <\N\>;', TS)
    est = estimate_hand_compatibility(p, corpus, "mutual_information",
                                      ConfiningSpec("none"))
    assert est.warning is not None


def test_estimate_hand_compatibility_absent_joint_strongly_negative():
    # body and heart each occur, but never together: floored joint
    corpus = gold_corpus([("x", "D"), ("y", "V")] * 4 + [("z", "N")] * 8)
    (p,) = parse_constraints(r'"x" <\N\>;', TS)
    est = estimate_hand_compatibility(p, corpus, "mutual_information",
                                      ConfiningSpec("none"))
    assert est.counts.n_ab == 0
    assert est.counts.n_a > 0 and est.counts.n_b > 0
    assert est.value < -10


def test_estimate_matches_brute_body_counts(toy):
    corpus, _, _ = toy
    toy_ts = TagSet(tags=("D", "N", "V", "."),
                    open_class_tags=frozenset({"N", "V"}),
                    sentence_end_tags=frozenset({"."}))
    (p,) = parse_constraints(r"\D\ <\N\>;", toy_ts)
    est = estimate_hand_compatibility(p, corpus, "probability",
                                      ConfiningSpec("none"))
    n_ab = n_a = n_b = n = 0
    for seq in corpus:
        cands = [[t.gold_tag] for t in seq.tokens]
        for i, tok in enumerate(seq.tokens):
            n += 1
            b = body_matches(p, seq, cands, i)
            h = tok.gold_tag == "N"
            n_a += b
            n_b += h
            n_ab += b and h
    assert (est.counts.n_ab, est.counts.n_a, est.counts.n_b,
            est.counts.n_total) == (n_ab, n_a, n_b, n)


# -- bundle instantiation ----------------------------------------------------

@pytest.fixture
def three_tokens(toy):
    _, _, model = toy
    seq = seq_of(("saw", "N"), ("run", "V"), ("saw", "N"))
    cands = [["N", "V"], ["N", "V"], ["N", "V"]]
    return seq, cands, model


def test_bundle_binary_counts(three_tokens):
    seq, cands, model = three_tokens
    bundle = instantiate_bundle(seq, cands, model, selection=frozenset("B"))
    assert len(bundle.binary[(1, "N")]) == 4  # two windows x two neighbours
    assert len(bundle.binary[(0, "N")]) == 2  # boundary: right window only
    assert len(bundle.binary[(2, "V")]) == 2
    assert not bundle.ternary and not bundle.hand


def test_bundle_binary_compatibilities(three_tokens):
    seq, cands, model = three_tokens
    bundle = instantiate_bundle(seq, cands, model, selection=frozenset("B"),
                                measure="probability")
    for ic in bundle.binary[(1, "N")]:
        ((pos, tag),) = ic.factors
        pair = (tag, "N") if pos == 0 else ("N", tag)
        expect = compatibility_value(
            model.bigram_pair_counts(*pair), "probability", model.tiny)
        assert ic.compatibility == pytest.approx(expect)


def test_bundle_ternary_boundary_clipping(three_tokens):
    seq, cands, model = three_tokens
    bundle = instantiate_bundle(seq, cands, model, selection=frozenset("T"))
    # position 0 of a 3-token sequence: only the window (0..2) fits
    cells = {ic.cell for ic in bundle.ternary[(0, "N")]}
    assert cells == {("T", 0)}
    assert len(bundle.ternary[(0, "N")]) == 4  # 2 x 2 neighbour combinations
    # interior position: all three windows
    assert {ic.cell for ic in bundle.ternary[(1, "N")]} == {("T", 1)}


def test_bundle_backoff(three_tokens):
    seq, cands, model = three_tokens
    bundle = instantiate_bundle(seq, cands, model, selection=frozenset("K"))
    for key in [(i, j) for i in range(3) for j in cands[i]]:
        has_t = bool(bundle.ternary.get(key))
        has_b = bool(bundle.binary.get(key))
        assert has_t != has_b  # exactly one class per target
        if has_t:
            observed = any(
                model.trigram_counts.get(
                    tuple(dict([*ic.factors, ic.target]).__getitem__(p)
                          for p in sorted({*dict(ic.factors), ic.target[0]})), 0) > 0
                for ic in bundle.ternary[key])
            assert observed


def test_bundle_backoff_unobserved_targets_get_binary(toy):
    _, _, model = toy
    # an unknown-word sequence: trigrams over open tags are unobserved in
    # positions where the combination never occurred
    seq = seq_of(("bites", "V"),)
    bundle = instantiate_bundle(seq, [["N", "V"]], model, selection=frozenset("K"))
    # single token: no trigram windows at all, so binary fallback (also empty
    # windows) applies
    assert not bundle.ternary


def test_bundle_selection_validation(three_tokens):
    seq, cands, model = three_tokens
    with pytest.raises(ConstraintError):
        instantiate_bundle(seq, cands, model, selection=frozenset())
    with pytest.raises(ConstraintError):
        instantiate_bundle(seq, cands, model, selection=frozenset("KB"))
    with pytest.raises(ConstraintError):
        instantiate_bundle(seq, cands, model, selection=frozenset("BX"))


def test_bundle_hand_selection(three_tokens):
    seq, cands, model = three_tokens
    toy_ts = TagSet(tags=("D", "N", "V", "."),
                    open_class_tags=frozenset({"N", "V"}),
                    sentence_end_tags=frozenset({"."}))
    (p,) = parse_constraints(r"\N\ <\V\>;", toy_ts)
    bundle = instantiate_bundle(seq, cands, model, hand=[(p, 0.7)],
                                selection=frozenset("BC"))
    ics = bundle.hand[(1, "V")]
    assert len(ics) == 1
    assert ics[0].compatibility == 0.7
    assert ics[0].cell == ("H", 0)


def test_bundle_deterministic(three_tokens):
    seq, cands, model = three_tokens
    a = instantiate_bundle(seq, cands, model, selection=frozenset("BT"))
    b = instantiate_bundle(seq, cands, model, selection=frozenset("BT"))
    assert a.binary == b.binary and a.ternary == b.ternary


def test_bundle_gold_candidates_interior_count(toy):
    corpus, _, model = toy
    seq = corpus[0]
    cands = [[t.gold_tag] for t in seq.tokens]
    bundle = instantiate_bundle(seq, cands, model, selection=frozenset("B"))
    for i in range(1, len(seq) - 1):
        assert len(bundle.binary[(i, cands[i][0])]) == 2
