"""Self-orthogonal nonlinear block codes for joint channel estimation and decoding.

The package builds rule-based codes whose convolution matrices have a
prescribed Gram matrix, decodes them with a maximum-likelihood priority-first
tree search, and runs Monte-Carlo experiments over block-fading channels.
"""

from .channel import ChannelBlock, average_snr, conv_matrix, ls_estimate, sigma_for_snr, transmit
from .codebook import (CodeError, CodeSpec, Codeword, GramTarget, NotACodewordError,
                       codeword_index, count_suffixes_blocks, count_suffixes_p2,
                       count_table_general, encode, enumerate_codebook, make_spec, verify_gram)
from .decoder import compute_weights, decode_exhaustive, decode_priority, decode_priority_fast
from .harness import ExperimentConfig, emit_csv, run_experiment

__version__ = "0.1.0"

__all__ = [
    "ChannelBlock",
    "CodeError",
    "CodeSpec",
    "Codeword",
    "ExperimentConfig",
    "GramTarget",
    "NotACodewordError",
    "average_snr",
    "codeword_index",
    "compute_weights",
    "conv_matrix",
    "count_suffixes_blocks",
    "count_suffixes_p2",
    "count_table_general",
    "decode_exhaustive",
    "decode_priority",
    "decode_priority_fast",
    "emit_csv",
    "encode",
    "enumerate_codebook",
    "ls_estimate",
    "make_spec",
    "run_experiment",
    "sigma_for_snr",
    "transmit",
    "verify_gram",
]
