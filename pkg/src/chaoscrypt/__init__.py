"""Chaos-based stream ciphers on dyadic fixed point, their interval-refinement attack, and a parallel-orbit OWF."""

from .attack import (
    AttackReport,
    AttackTrace,
    backward_iterate,
    brute_force_finalize,
    initial_candidates,
    refine_step,
    run_attack,
)
from .cipher import KeystreamSegment, StreamKey, encrypt_bits, decrypt_bits, keystream, known_plaintext_extract, xor_crypt
from .dyadic import CandidateSet, Dyadic, DyadicInterval, Rounding, fixed_point_arith, interval_algebra
from .encoder import StepEncoder, threshold_encoder
from .errors import (
    BackwardFrontierError,
    ChaosCryptError,
    InconsistentModelError,
    PrecisionMismatch,
    RangeError,
    RefusalError,
    UsageError,
)
from .maps import IterationRule, MapDescriptor, eval_point, image_interval, iterate, preimage, tent
from .owf import OwfInput, OwfInstance, OwfOutput, owf_invert_bruteforce, owf_step, owf_stream, randomness_sanity

__version__ = "0.1.0"
