"""Weighted Tsetlin Machine: interpretable clause-based classification with real-valued clause weights."""
from .automata import Clause, Mode, clause_output, render_clause
from .data import BinaryDataset, load_dataset, read_connect4, read_idx_pair, save_dataset, split_dataset
from .machine import BinaryWTM, MulticlassWTM, WTMParams, train_epochs, weight_statistics
from .persistence import load_model, save_model
from .sampling import Rng

__version__ = "0.1.0"

__all__ = [
    "BinaryDataset", "BinaryWTM", "Clause", "Mode", "MulticlassWTM", "Rng", "WTMParams", "clause_output",
    "load_dataset", "load_model", "read_connect4", "read_idx_pair", "render_clause", "save_dataset", "save_model",
    "split_dataset", "train_epochs", "weight_statistics",
]
