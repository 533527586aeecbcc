"""Command-line driver: train, tag, eval, sweep, check-constraints.

Configuration precedence is flags > config file > defaults; the config
file is plain "key = value" lines.  Exit codes: 0 success, 1 usage or
configuration error, 2 data error.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import os
import random
import sys

import click

from . import baselines, corpus as corpus_mod, evaluate, relax, report
from .constraints import (
    ConstraintError,
    ConstraintPattern,
    estimate_hand_compatibility,
    format_constraints,
    parse_constraints,
)
from .corpus import CorpusError, Lexicon, TagSet, candidate_tags
from .model import (
    ConfiningSpec,
    DEFAULT_TINY,
    MEASURES,
    ModelError,
    StatModel,
    deserialize_model,
    estimate_model,
    serialize_model,
)
from .relax import AlgorithmError, AlgorithmSpec, Tagger, parse_algorithm_name

MODEL_FILES = ("lexical.tsv", "bigram.tsv", "trigram.tsv", "start.tsv")

DATA_ERRORS = (CorpusError, ModelError, ConstraintError, evaluate.EvalError,
               FileNotFoundError, IsADirectoryError, PermissionError)
USAGE_ERRORS = (AlgorithmError,)


def _digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _write(path: str, content: str):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(content)


def load_config_file(path: str) -> dict[str, str]:
    """Parse a "key = value" config file; '#' comments and blanks ignored."""
    out = {}
    for lineno, raw in enumerate(_read(path).splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = value.strip()
    return out


class ModelDir:
    """Trained-model directory: statistics tables, lexicon, tag set,
    optional annotated constraints, and a manifest of input digests."""

    def __init__(self, path: str):
        self.path = path
        self.tagset: TagSet = corpus_mod.parse_tagset(_read(self._p("tagset.tags")))
        self.lexicon: Lexicon = corpus_mod.parse_lexicon(_read(self._p("lexicon.tsv")))
        self.model: StatModel = deserialize_model(
            {name: _read(self._p(name)) for name in MODEL_FILES})
        self.hand: list[tuple[ConstraintPattern, float]] = []
        cst = self._p("constraints.cst")
        if os.path.exists(cst):
            for pattern in parse_constraints(_read(cst), self.tagset):
                if pattern.compatibility is None:
                    raise ConstraintError(
                        f"stored constraint lacks a compatibility annotation "
                        f"({pattern.source_line})")
                self.hand.append((pattern, pattern.compatibility))

    def _p(self, name: str) -> str:
        return os.path.join(self.path, name)


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="Config file with 'key = value' defaults.")
@click.pass_context
def cli(ctx, config_path):
    """Relaxation-labelling part-of-speech tagger."""
    if config_path:
        cfg = load_config_file(config_path)
        # config keys use option spellings; map them to parameter names
        ctx.default_map = {}
        for name, command in ctx.command.commands.items():
            defaults = {}
            for param in command.params:
                keys = {o.lstrip("-").replace("-", "_")
                        for o in param.opts} | {param.name}
                for key in keys:
                    if key in cfg:
                        defaults[param.name] = cfg[key]
            ctx.default_map[name] = defaults


@cli.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--tagset", "tagset_path", required=True, type=click.Path(exists=True))
@click.option("--model-dir", required=True, type=click.Path())
@click.option("--constraints", "constraints_path", type=click.Path(exists=True),
              default=None, help="Hand-written constraint file to annotate.")
@click.option("--measure", type=click.Choice(MEASURES), default="mutual_information",
              show_default=True, help="Measure for constraint annotation.")
@click.option("--confiner", type=click.Choice(
    ("linear01", "linear11", "logistic", "arctan", "tanh", "none")),
    default="logistic", show_default=True)
@click.option("--beta", type=float, default=1.0, show_default=True)
@click.option("--tiny", type=float, default=DEFAULT_TINY, show_default=True)
def train(corpus_path, tagset_path, model_dir, constraints_path, measure,
          confiner, beta, tiny):
    """Estimate all statistics tables from a gold-tagged corpus."""
    tagset = corpus_mod.parse_tagset(_read(tagset_path))
    gold = corpus_mod.parse_tagged_corpus(_read(corpus_path), tagset)
    lexicon = corpus_mod.build_lexicon(gold)
    model = estimate_model(gold, lexicon, tiny)

    os.makedirs(model_dir, exist_ok=True)
    for name, content in serialize_model(model).items():
        _write(os.path.join(model_dir, name), content)
    _write(os.path.join(model_dir, "lexicon.tsv"),
           corpus_mod.serialize_lexicon(lexicon))
    _write(os.path.join(model_dir, "tagset.tags"),
           corpus_mod.format_tagset(tagset))

    manifest = [
        ("corpus_digest", _digest(corpus_path)),
        ("tagset_digest", _digest(tagset_path)),
        ("tiny", repr(tiny)),
        ("tokens", str(model.n_tokens)),
        ("sequences", str(model.n_sequences)),
    ]

    if constraints_path:
        patterns = parse_constraints(_read(constraints_path), tagset)
        spec = ConfiningSpec(confiner, beta)
        annotated = []
        for p in patterns:
            if p.compatibility is not None:
                annotated.append(p)
                continue
            est = estimate_hand_compatibility(p, gold, measure, spec, tiny)
            if est.warning:
                click.echo(f"warning: {est.warning}", err=True)
            annotated.append(ConstraintPattern(
                left=p.left, heart=p.heart, right=p.right,
                compatibility=est.value, source_line=p.source_line))
        header = (f"# compatibility annotations: measure={measure} "
                  f"confiner={confiner} beta={beta!r}\n")
        _write(os.path.join(model_dir, "constraints.cst"),
               header + format_constraints(annotated))
        manifest.append(("constraints_digest", _digest(constraints_path)))

    _write(os.path.join(model_dir, "manifest.tsv"),
           "".join(f"{k}\t{v}\n" for k, v in manifest))
    click.echo(f"trained model written to {model_dir}")


def _read_input_sequences(path: str, lexicon: Lexicon, tagset: TagSet):
    """Accept either a tagged corpus (surface<TAB>tag) or a raw one-word-
    per-line file; returns (sequences, had_gold_tags)."""
    text = _read(path)
    tabbed = any("\t" in line for line in text.splitlines())
    if tabbed:
        return corpus_mod.parse_tagged_corpus(text, tagset), True
    return corpus_mod.parse_raw_corpus(text, lexicon, tagset), False


_WORKER_TAGGER = None
_WORKER_SEQS = None


def _worker_init(tagger, seqs):
    global _WORKER_TAGGER, _WORKER_SEQS
    _WORKER_TAGGER = tagger
    _WORKER_SEQS = seqs


def _worker_tag(index: int):
    seq, cands = _WORKER_SEQS[index]
    return index, _WORKER_TAGGER.tag_sequence(seq, cands)


def _tag_all(tagger: Tagger, jobs, workers: int, rng=None):
    """Tag every (sequence, candidates) pair, preserving input order."""
    if workers <= 1 or rng is not None:
        return [tagger.tag_sequence(seq, cands, rng=rng) for seq, cands in jobs]
    results: list[list[str] | None] = [None] * len(jobs)
    with concurrent.futures.ProcessPoolExecutor(
            max_workers=workers, initializer=_worker_init,
            initargs=(tagger, jobs)) as pool:
        for index, tags in pool.map(_worker_tag, range(len(jobs))):
            results[index] = tags
    return results


def _algorithm_options(fn):
    fn = click.option("--include-target-weight/--no-include-target-weight",
                      default=True, show_default=True)(fn)
    fn = click.option("--init", "init_mode",
                      type=click.Choice(("lexical", "winner", "uniform")),
                      default="lexical", show_default=True)(fn)
    fn = click.option("--beta", type=float, default=None,
                      help="Confiner parameter; linear maps default to the "
                           "observed compatibility range.")(fn)
    fn = click.option("--epsilon", type=float, default=relax.DEFAULT_EPSILON,
                      show_default=True)(fn)
    fn = click.option("--max-iters", type=int, default=relax.DEFAULT_MAX_ITERS,
                      show_default=True)(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="Seed for the sampling update mode.")(fn)
    return fn


def _build_tagger(mdir: ModelDir, algorithm: str, include_target_weight,
                  init_mode, beta, epsilon, max_iters) -> Tagger:
    spec = parse_algorithm_name(algorithm)
    spec = AlgorithmSpec(
        support=spec.support, update=spec.update, measure=spec.measure,
        confiner=spec.confiner, selection=spec.selection,
        include_target_weight=include_target_weight, name=spec.name)
    hand = mdir.hand if "C" in spec.selection else []
    if "C" in spec.selection and not hand:
        raise ConstraintError(
            "algorithm selects hand-written constraints but the model "
            "directory has no constraints.cst")
    return Tagger(model=mdir.model, spec=spec, hand=hand, beta=beta,
                  init_mode=init_mode, epsilon=epsilon, max_iters=max_iters)


@cli.command()
@click.option("--model-dir", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--algorithm", default=None, help="Algorithm name, e.g. SsApViFsB.")
@click.option("--most-likely", "baseline", flag_value="most-likely",
              help="Run the blind most-likely-tag baseline instead.")
@click.option("--viterbi", "baseline", flag_value="viterbi",
              help="Run the Viterbi baseline instead.")
@click.option("--snapshots", "snapshot_dir", type=click.Path(), default=None,
              help="Directory for per-iteration weight dumps.")
@click.option("--workers", type=int, default=1, show_default=True)
@_algorithm_options
def tag(model_dir, corpus_path, output_path, algorithm, baseline,
        snapshot_dir, workers, include_target_weight, init_mode, beta,
        epsilon, max_iters, seed):
    """Tag a corpus and write surface<TAB>tag lines."""
    mdir = ModelDir(model_dir)
    seqs, _ = _read_input_sequences(corpus_path, mdir.lexicon, mdir.tagset)
    jobs = [(seq, [candidate_tags(t.surface, mdir.lexicon, mdir.tagset)
                   for t in seq]) for seq in seqs]

    if baseline == "most-likely":
        results = [[baselines.most_likely_tag(t.surface, mdir.lexicon, mdir.tagset)
                    for t in seq] for seq, _ in jobs]
    elif baseline == "viterbi":
        results = [baselines.viterbi(seq, cands, mdir.model)
                   for seq, cands in jobs]
    else:
        if not algorithm:
            raise click.UsageError("--algorithm is required unless a baseline "
                                   "flag is given")
        tagger = _build_tagger(mdir, algorithm, include_target_weight,
                               init_mode, beta, epsilon, max_iters)
        rng = random.Random(seed) if seed is not None else None
        if snapshot_dir:
            os.makedirs(snapshot_dir, exist_ok=True)
            results = []
            for n, (seq, cands) in enumerate(jobs):
                res = tagger.run_sequence(seq, cands, retain_snapshots=True,
                                          rng=rng)
                results.append(relax.decode(res.state))
                for it, snap in enumerate(res.snapshots, 1):
                    _write(os.path.join(snapshot_dir, f"seq{n:05d}_it{it:03d}.tsv"),
                           relax.format_snapshot(snap))
                click.echo(f"sequence {n}: {res.iterations} iterations, "
                           f"converged={res.converged}", err=True)
        else:
            results = _tag_all(tagger, jobs, workers, rng)

    blocks = []
    for (seq, _), tags in zip(jobs, results):
        blocks.append("\n".join(f"{t.surface}\t{tag_}"
                                for t, tag_ in zip(seq, tags)))
    _write(output_path, "\n\n".join(blocks) + "\n")
    click.echo(f"tagged {sum(len(s) for s in seqs)} tokens "
               f"in {len(seqs)} sequences")


@cli.command("eval")
@click.option("--pred", "pred_path", required=True, type=click.Path(exists=True))
@click.option("--gold", "gold_path", required=True, type=click.Path(exists=True))
@click.option("--model-dir", required=True, type=click.Path(exists=True))
@click.option("--ambiguous-only", is_flag=True, default=False,
              help="Print only the ambiguous-word accuracy.")
def eval_cmd(pred_path, gold_path, model_dir, ambiguous_only):
    """Score a tagged file against a gold corpus."""
    mdir = ModelDir(model_dir)
    pred = corpus_mod.parse_tagged_corpus(_read(pred_path), mdir.tagset)
    gold = corpus_mod.parse_tagged_corpus(_read(gold_path), mdir.tagset)
    p_tokens = [t for s in pred for t in s]
    g_tokens = [t for s in gold for t in s]
    if len(p_tokens) != len(g_tokens):
        raise evaluate.EvalError(
            f"token count mismatch: {len(p_tokens)} predicted vs "
            f"{len(g_tokens)} gold")
    for n, (p, g) in enumerate(zip(p_tokens, g_tokens), 1):
        if p.surface != g.surface:
            raise evaluate.EvalError(
                f"token {n}: surface mismatch {p.surface!r} vs {g.surface!r}")

    p_tags = [[p.gold_tag for p in s] for s in pred]
    g_seqs = [[g.gold_tag for g in s] for s in gold]
    # realign prediction tags to the gold sequence boundaries
    flat = [t for s in p_tags for t in s]
    p_seqs, k = [], 0
    for s in g_seqs:
        p_seqs.append(flat[k:k + len(s)])
        k += len(s)
    surfaces = [[g.surface for g in s] for s in gold]

    amb = evaluate.accuracy(p_seqs, g_seqs, surfaces, mdir.lexicon, True)
    amb_text = "n/a" if amb is None else f"{amb:.2f}"
    if not ambiguous_only:
        overall = evaluate.accuracy(p_seqs, g_seqs, surfaces, mdir.lexicon, False)
        overall_text = "n/a" if overall is None else f"{overall:.2f}"
        click.echo(f"overall\t{overall_text}")
    click.echo(f"ambiguous\t{amb_text}")


@cli.command()
@click.option("--model-dir", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", required=True, type=click.Path(exists=True),
              help="Gold-tagged test corpus.")
@click.option("--algorithms", required=True,
              help="Comma-separated algorithm names.")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--train-corpus", "train_corpus_path", type=click.Path(exists=True),
              default=None,
              help="Re-estimate hand-constraint compatibilities per "
                   "algorithm from this corpus.")
@click.option("--workers", type=int, default=1, show_default=True)
@_algorithm_options
def sweep(model_dir, corpus_path, algorithms, out_dir, train_corpus_path,
          workers, include_target_weight, init_mode, beta, epsilon,
          max_iters, seed):
    """Run several algorithms with snapshots and report accuracy per
    iteration window, plus a curve figure."""
    mdir = ModelDir(model_dir)
    gold = corpus_mod.parse_tagged_corpus(_read(corpus_path), mdir.tagset)
    jobs = [(seq, [candidate_tags(t.surface, mdir.lexicon, mdir.tagset)
                   for t in seq]) for seq in gold]
    g_seqs = [s.gold_tags() for s in gold]
    surfaces = [s.surfaces() for s in gold]

    train_gold = None
    if train_corpus_path:
        train_gold = corpus_mod.parse_tagged_corpus(
            _read(train_corpus_path), mdir.tagset)
    hand_cache: dict[tuple, list] = {}

    def hand_for(tagger: Tagger) -> list[tuple[ConstraintPattern, float]]:
        if train_gold is None:
            return mdir.hand
        confiner = tagger.confiner_for("bigram")
        key = (tagger.spec.measure, confiner.kind, confiner.beta)
        if key not in hand_cache:
            hand_cache[key] = [
                (p, estimate_hand_compatibility(
                    p, train_gold, tagger.spec.measure, confiner,
                    mdir.model.tiny).value)
                for p, _ in mdir.hand]
        return hand_cache[key]

    names = [n.strip() for n in algorithms.split(",") if n.strip()]
    reports, series = [], {}
    rng = random.Random(seed) if seed is not None else None
    for name in names:
        tagger = _build_tagger(mdir, name, include_target_weight, init_mode,
                               beta, epsilon, max_iters)
        tagger.hand = hand_for(tagger)
        per_iter: list[list[list[str]]] = []
        finals = []
        for seq, cands in jobs:
            res = tagger.run_sequence(seq, cands, retain_snapshots=True, rng=rng)
            decoded = [relax.LabellingState(weights=snap).argmax()
                       for snap in res.snapshots]
            per_iter.append(decoded)
            finals.append(relax.decode(res.state))
        depth = max(len(d) for d in per_iter)
        accuracies = []
        for it in range(depth):
            # a converged sequence keeps its final tags in later iterations
            preds = [d[min(it, len(d) - 1)] for d in per_iter]
            accuracies.append(evaluate.accuracy(
                preds, g_seqs, surfaces, mdir.lexicon, True) or 0.0)
        conv = evaluate.accuracy(finals, g_seqs, surfaces, mdir.lexicon, True) or 0.0
        reports.append(evaluate.build_report(name, accuracies, conv))
        series[name] = accuracies
        click.echo(f"{name}: conv {conv:.2f} "
                   f"(pattern {reports[-1].pattern})", err=True)

    paths = report.write_sweep_report(reports, series, out_dir)
    click.echo(evaluate.render_table(reports), nl=False)
    click.echo(f"report written to {paths['tsv']} and {paths['figure']}")


@cli.command("check-constraints")
@click.option("--constraints", "constraints_path", required=True,
              type=click.Path(exists=True))
@click.option("--tagset", "tagset_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), default=None,
              help="Gold corpus for per-rule occurrence counts.")
def check_constraints(constraints_path, tagset_path, corpus_path):
    """Validate a constraint file; optionally count matches in a corpus."""
    tagset = corpus_mod.parse_tagset(_read(tagset_path))
    patterns = parse_constraints(_read(constraints_path), tagset)
    click.echo(f"{len(patterns)} constraints parsed, 0 errors")
    if corpus_path:
        gold = corpus_mod.parse_tagged_corpus(_read(corpus_path), tagset)
        click.echo("rule\tfull_matches\tbody_matches\theart_matches")
        for n, p in enumerate(patterns, 1):
            est = estimate_hand_compatibility(
                p, gold, "probability", ConfiningSpec("none"))
            c = est.counts
            click.echo(f"{n}\t{c.n_ab}\t{c.n_a}\t{c.n_b}")


def main():
    try:
        cli.main(standalone_mode=False)
    except click.Abort:
        sys.exit(1)
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        sys.exit(1)
    except USAGE_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except DATA_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    sys.exit(0)


if __name__ == "__main__":
    main()
