"""Trainable part-of-speech tagger based on relaxation labelling, with
bigram, trigram, and hand-written constraints."""

from .corpus import (
    CorpusError,
    Lexicon,
    TagSet,
    Token,
    WordSequence,
    build_lexicon,
    candidate_tags,
    parse_raw_corpus,
    parse_tagged_corpus,
    parse_tagset,
)
from .model import (
    ConfiningSpec,
    ModelError,
    PairCounts,
    StatModel,
    compatibility_value,
    confine,
    estimate_model,
)
from .constraints import (
    ConstraintBundle,
    ConstraintError,
    ConstraintPattern,
    estimate_hand_compatibility,
    format_constraints,
    instantiate_bundle,
    match_constraint,
    parse_constraints,
)
from .relax import (
    AlgorithmError,
    AlgorithmSpec,
    LabellingState,
    RunResult,
    SupportMatrix,
    Tagger,
    compute_support,
    decode,
    init_state,
    normalize_support_row,
    parse_algorithm_name,
    run,
    update_weights,
)
from .baselines import exhaustive_decode, most_likely_tag, viterbi
from .evaluate import IterationReport, accuracy, classify_behaviour, render_table

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
