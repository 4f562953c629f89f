"""Fiber-wise tensor-train completion.

Arrays are numpy float64 tensors; cores have shape (R_{n-1}, I_n, R_n).
A pattern is a boolean array over the first N-1 modes marking observed
mode-N fibers.
"""

from ._fwtt import (
    Error,
    FormatError,
    IdentifiabilityError,
    InvalidArgument,
    ValidationError,
    add_noise,
    complete,
    load,
    mask_apply,
    parallel_tt_svd,
    random_pattern,
    random_tt,
    reconstruct_fibers,
    relative_error,
    save_dense,
    save_pattern,
    save_tt,
    tt_svd,
    tt_to_dense,
    unfold,
    validate,
)

__all__ = [
    "Error",
    "FormatError",
    "IdentifiabilityError",
    "InvalidArgument",
    "ValidationError",
    "add_noise",
    "complete",
    "load",
    "mask_apply",
    "parallel_tt_svd",
    "random_pattern",
    "random_tt",
    "reconstruct_fibers",
    "relative_error",
    "save_dense",
    "save_pattern",
    "save_tt",
    "tt_svd",
    "tt_to_dense",
    "unfold",
    "validate",
]
