"""Temperature-scaled edge weighting, maximum-arborescence decoding and calibration
for graph-based dependency parsing."""

from importlib.resources import files

from .calibration import (
    CalibrationReport,
    attachment_nll,
    calibration_report,
    decoded_uas,
    expected_calibration_error,
    fit_temperature,
)
from .core import (
    DEPS_ROWS,
    HEADS_ROWS,
    MASK,
    NO_PARENT,
    ROOT,
    Arborescence,
    EdgeWeights,
    GoldTree,
    InvalidTreeError,
    ScoreMatrix,
    Temperature,
    TreeProblem,
    canonicalize_scores,
    validate_arborescence,
)
from .decode import (
    DecodeError,
    DecodeOptions,
    brute_force_decode,
    cle_decode,
    decode,
    enumerate_arborescences,
    root_constrained_decode,
    verify_invariance,
)
from .io import read_scores, read_tree_conllu, write_scores, write_tree_conllu
from .synth import GenSpec, generate
from .weighting import (
    arborescence_weight,
    log_softmax_weights,
    softmax_probabilities,
    weight_difference_identity,
)

FIGURE2_SCORES = files(__name__) / "data" / "figure2.scores.json"

__version__ = "0.1.0"

__all__ = [
    "Arborescence",
    "CalibrationReport",
    "DEPS_ROWS",
    "DecodeError",
    "DecodeOptions",
    "EdgeWeights",
    "FIGURE2_SCORES",
    "GenSpec",
    "GoldTree",
    "HEADS_ROWS",
    "InvalidTreeError",
    "MASK",
    "NO_PARENT",
    "ROOT",
    "ScoreMatrix",
    "Temperature",
    "TreeProblem",
    "arborescence_weight",
    "attachment_nll",
    "brute_force_decode",
    "calibration_report",
    "canonicalize_scores",
    "cle_decode",
    "decode",
    "decoded_uas",
    "enumerate_arborescences",
    "expected_calibration_error",
    "fit_temperature",
    "generate",
    "log_softmax_weights",
    "read_scores",
    "read_tree_conllu",
    "root_constrained_decode",
    "softmax_probabilities",
    "validate_arborescence",
    "verify_invariance",
    "weight_difference_identity",
    "write_scores",
    "write_tree_conllu",
]
