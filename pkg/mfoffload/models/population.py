from dataclasses import dataclass

import numpy as np

from mfoffload.errors import ValidationError


@dataclass(frozen=True)
class SampledPopulation:
    """One draw of the finite N-user system: each user's type and offload decision."""

    type_indices: np.ndarray
    decisions: np.ndarray

    def __post_init__(self):
        types = np.asarray(self.type_indices, dtype=np.int64)
        decisions = np.asarray(self.decisions, dtype=np.int64)
        if types.ndim != 1 or types.shape != decisions.shape:
            raise ValidationError("type_indices and decisions must be 1-D arrays of equal length")
        if len(types) == 0:
            raise ValidationError("population must contain at least one user")
        if np.any(types < 0):
            raise ValidationError("type indices must be >= 0")
        if not np.all((decisions == 0) | (decisions == 1)):
            raise ValidationError("decisions must be 0 or 1")
        types.setflags(write=False)
        decisions.setflags(write=False)
        object.__setattr__(self, "type_indices", types)
        object.__setattr__(self, "decisions", decisions)

    @property
    def N(self) -> int:
        return len(self.type_indices)

    @property
    def offload_count(self) -> int:
        return int(self.decisions.sum())

    def check_support(self, k: int) -> None:
        if np.any(self.type_indices >= k):
            raise ValidationError(f"type index out of range for a support of size {k}")
