"""Dense N-dimensional tensor: a shape plus flat row-major float64 storage."""

from __future__ import annotations

import numpy as np


class NonFiniteError(ValueError):
    """Raised when a tensor would hold NaN or infinity."""


class Tensor:
    """Immutable-shape container; `data` is the flat row-major buffer."""

    __slots__ = ("shape", "data")

    def __init__(self, shape, data, validate: bool = True):
        shape = tuple(int(d) for d in shape)
        if any(d <= 0 for d in shape):
            raise ValueError(f"shape entries must be positive, got {shape}")
        data = np.ascontiguousarray(data, dtype=np.float64).reshape(-1)
        if data.size != int(np.prod(shape)):
            raise ValueError(f"data length {data.size} does not match shape {shape}")
        if validate and not np.all(np.isfinite(data)):
            raise NonFiniteError(f"tensor of shape {shape} contains non-finite values")
        self.shape = shape
        self.data = data

    @classmethod
    def from_array(cls, arr, validate: bool = True) -> "Tensor":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(arr.shape, arr.reshape(-1), validate=validate)

    @classmethod
    def zeros(cls, shape) -> "Tensor":
        shape = tuple(int(d) for d in shape)
        return cls(shape, np.zeros(int(np.prod(shape))), validate=False)

    def array(self) -> np.ndarray:
        """Row-major view of the data in the declared shape."""
        return self.data.reshape(self.shape)

    @property
    def size(self) -> int:
        return self.data.size

    def __repr__(self):
        return f"Tensor(shape={self.shape})"
