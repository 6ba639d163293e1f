"""Maximum-likelihood decoders: exhaustive oracle and priority-first tree search."""

from .exhaustive import (ExhaustiveResult, decode_exhaustive, exhaustive_metrics, ml_metric,
                         outer_product_metric, trace_metric)
from .search import (DEFAULT_STACK_CAP, DecodeResult, PathState, SearchStack, StackOverflow,
                     decode_priority, decode_priority_fast, g_extend, heuristic_h2,
                     origin_state, write_trace)
from .weights import DecoderWeights, batch_g, compute_weights

__all__ = [
    "DEFAULT_STACK_CAP",
    "DecodeResult",
    "DecoderWeights",
    "ExhaustiveResult",
    "PathState",
    "SearchStack",
    "StackOverflow",
    "batch_g",
    "compute_weights",
    "decode_exhaustive",
    "decode_priority",
    "decode_priority_fast",
    "exhaustive_metrics",
    "g_extend",
    "heuristic_h2",
    "ml_metric",
    "origin_state",
    "outer_product_metric",
    "trace_metric",
    "write_trace",
]
