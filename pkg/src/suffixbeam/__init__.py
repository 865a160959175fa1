"""Suffix prediction for event logs, with background-knowledge modulation.

The package predicts how a running process case will continue: a beam
search over a next-activity model (n-gram or a small numpy transformer)
whose scores can be modulated by token-replay fitness against a Petri net
that encodes background knowledge the model may not have seen often enough
to trust.
"""

from .attention import AttentionConfig, AttentionModel, finite_difference_check, train_attention
from .beam import (
    BeamConfig,
    BeamResult,
    baseline_beam,
    checked_beam,
    modulated_beam,
    perfect_fitness_checker,
    score_extend_baseline,
    score_extend_modulated,
)
from .encoding import EncodedPrefix, Vocabulary, build_vocabulary, decode_prefix, encode_prefix, one_hot
from .eventlog import (
    END,
    Event,
    EventLog,
    PrefixLog,
    Trace,
    build_prefix_log,
    log_from_variants,
    parse_csv,
    parse_xes,
    prefix,
    suffix,
    variant_of,
    write_xes,
)
from .harness import (
    SweepCell,
    SweepResult,
    evaluate_dataset,
    run_reallife_experiment,
    run_synthetic_experiment,
    split_by_prefix,
    write_comparison_csv,
    write_sweep_csv,
)
from .metrics import MetricsReport, dl_distance, dl_similarity, evaluate, micro_average
from .petri import (
    Arc,
    PetriNet,
    ReplayResult,
    ReplayState,
    Transition,
    chain_net,
    compliance,
    enabled_transitions,
    fire,
    fitness,
    flower_net,
    parse_pnml,
    token_replay,
    write_pnml,
)
from .predictor import NGramModel, next_activity, predict, train_ngram
from .synthgen import SynthConfig, SynthResult, exceptional_process_net, generate

__version__ = "0.1.0"

__all__ = [
    "AttentionConfig",
    "AttentionModel",
    "Arc",
    "BeamConfig",
    "BeamResult",
    "END",
    "EncodedPrefix",
    "Event",
    "EventLog",
    "MetricsReport",
    "NGramModel",
    "PetriNet",
    "PrefixLog",
    "ReplayResult",
    "ReplayState",
    "SweepCell",
    "SweepResult",
    "SynthConfig",
    "SynthResult",
    "Trace",
    "Transition",
    "Vocabulary",
    "baseline_beam",
    "build_prefix_log",
    "build_vocabulary",
    "chain_net",
    "checked_beam",
    "compliance",
    "decode_prefix",
    "dl_distance",
    "dl_similarity",
    "enabled_transitions",
    "encode_prefix",
    "evaluate",
    "evaluate_dataset",
    "finite_difference_check",
    "fire",
    "fitness",
    "flower_net",
    "generate",
    "log_from_variants",
    "micro_average",
    "modulated_beam",
    "next_activity",
    "one_hot",
    "parse_csv",
    "parse_pnml",
    "parse_xes",
    "perfect_fitness_checker",
    "predict",
    "prefix",
    "run_reallife_experiment",
    "run_synthetic_experiment",
    "score_extend_baseline",
    "score_extend_modulated",
    "split_by_prefix",
    "suffix",
    "token_replay",
    "train_attention",
    "train_ngram",
    "variant_of",
    "write_comparison_csv",
    "write_pnml",
    "write_sweep_csv",
    "write_xes",
    "exceptional_process_net",
]
