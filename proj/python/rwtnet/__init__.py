"""Regional wall thickness estimation on synthetic cine phantoms."""

from ._rwtnet import (
    VARIANTS,
    FormatError,
    Model,
    NumericalError,
    generate_dataset,
    grad_check,
    learning_rate,
    read_dataset,
    run_cli,
)

__version__ = "0.1.0"

__all__ = [
    "VARIANTS",
    "FormatError",
    "Model",
    "NumericalError",
    "generate_dataset",
    "grad_check",
    "learning_rate",
    "read_dataset",
    "run_cli",
]
