"""Dense tensor math, reverse-mode autodiff and Adam, shared by every trainable module."""

from .tensor import (
    Tensor,
    apply,
    as_tensor,
    concat,
    default_dtype,
    grad,
    op_names,
    precision,
    set_default_dtype,
)
from .adam import Adam
from .checkpoint import load_arrays, save_arrays

__all__ = [
    "Tensor",
    "Adam",
    "apply",
    "as_tensor",
    "concat",
    "default_dtype",
    "grad",
    "load_arrays",
    "op_names",
    "precision",
    "save_arrays",
    "set_default_dtype",
]
