"""Pseudoinverse learning (PIL) for feedforward networks.

Non-iterative trainers (PIL, PIL0, ePIL, PIL1) that compute every weight
matrix with a Moore-Penrose pseudoinverse, plus experiments probing when
the hidden output matrix loses rank.
"""

__version__ = "0.1.0"

from .activation import Activation, apply, apply_inverse
from .dataset import Dataset, TargetEncoding, augment_bias, encode_targets, load_csv, save_csv
from .errors import (
    ConfigError,
    DataIOError,
    DomainError,
    EmptyDataset,
    FormatError,
    InvalidMatrix,
    NumericalError,
    ParseError,
    PilError,
    ShapeMismatch,
    UnknownClass,
)
from .linalg import RankInfo, frobenius_error, numerical_rank, projector_residual, pseudoinverse
from .network import PilNetwork, deserialize, forward, serialize, sse
from .trainers import TrainConfig, TrainReport, train, train_epil, train_pil, train_pil0, train_pil1

__all__ = [
    "Activation",
    "ConfigError",
    "DataIOError",
    "Dataset",
    "DomainError",
    "EmptyDataset",
    "FormatError",
    "InvalidMatrix",
    "NumericalError",
    "ParseError",
    "PilError",
    "PilNetwork",
    "RankInfo",
    "ShapeMismatch",
    "TargetEncoding",
    "TrainConfig",
    "TrainReport",
    "UnknownClass",
    "apply",
    "apply_inverse",
    "augment_bias",
    "deserialize",
    "encode_targets",
    "forward",
    "frobenius_error",
    "load_csv",
    "numerical_rank",
    "projector_residual",
    "pseudoinverse",
    "save_csv",
    "serialize",
    "sse",
    "train",
    "train_epil",
    "train_pil",
    "train_pil0",
    "train_pil1",
]
