"""Vectorized hide-and-seek engine; outputs are numpy views over one engine-written buffer."""

from ._core import (
    ABI_VERSION,
    CapacityError,
    ContractError,
    FormatError,
    Pool,
    ResourceError,
    ValidationError,
    close,
    create_pool,
    descriptors,
    reset,
    step,
)

__all__ = [
    "ABI_VERSION",
    "CapacityError",
    "ContractError",
    "FormatError",
    "Pool",
    "ResourceError",
    "ValidationError",
    "close",
    "create_pool",
    "descriptors",
    "reset",
    "step",
]
