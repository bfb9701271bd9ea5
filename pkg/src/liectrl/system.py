"""Linear control systems: algebra, derivation, control fields and range."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import LieAlgebra, validate_derivation
from .errors import InvalidInput, ValidationFailed


@dataclass(frozen=True, eq=False)
class ControlRange:
    """Per-channel box ``[lo_j, hi_j]`` with ``lo_j < 0 < hi_j``, or unrestricted (``bounds is None``)."""

    bounds: np.ndarray | None = None

    def __post_init__(self):
        if self.bounds is None:
            return
        b = np.array(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2:
            raise InvalidInput(f"range bounds must have shape (m, 2), got {b.shape}")
        bad = [j for j, (lo, hi) in enumerate(b) if not lo < 0.0 < hi]
        if bad:
            raise InvalidInput(f"channels {bad}: 0 must lie in the interior of the control range")
        b.setflags(write=False)
        object.__setattr__(self, "bounds", b)

    @classmethod
    def box(cls, m: int, radius: float = 1.0) -> "ControlRange":
        return cls(np.tile([-radius, radius], (m, 1)))

    @property
    def restricted(self) -> bool:
        return self.bounds is not None

    def to_json(self):
        return "unrestricted" if self.bounds is None else {"restricted": self.bounds.tolist()}


@dataclass(frozen=True)
class FiniteCenterDeclaration:
    factor: str
    finite_center: bool


@dataclass(frozen=True)
class GroupMeta:
    connected: bool = True
    simply_connected_hint: bool | None = None
    finite_center_declarations: tuple[FiniteCenterDeclaration, ...] = ()

    def __post_init__(self):
        if not self.connected:
            raise InvalidInput("only connected groups are supported")


@dataclass(frozen=True, eq=False)
class ControlSystem:
    """``g' = X(g) + sum_j u_j X^j(g)`` with drift derivation ``derivation`` and ``X^j(e) = b_j``.

    ``control_fields`` has shape ``(m, dim)``; row ``j`` is ``b_j``.
    """

    algebra: LieAlgebra
    derivation: np.ndarray
    control_fields: np.ndarray
    control_range: ControlRange = field(default_factory=ControlRange)
    group_meta: GroupMeta = field(default_factory=GroupMeta)
    name: str = ""

    def __post_init__(self):
        d = self.algebra.dim
        der = np.array(self.derivation, dtype=float)
        if der.shape != (d, d):
            raise InvalidInput(f"derivation must be {d}x{d}, got {der.shape}")
        ok, res = validate_derivation(self.algebra, der)
        if not ok:
            raise ValidationFailed("drift matrix is not a derivation (Leibniz rule fails)", {"leibniz": res})
        b = np.array(self.control_fields, dtype=float)
        if b.ndim == 1:
            b = b[None, :]
        if b.ndim != 2 or b.shape[0] == 0 or b.shape[1] != d:
            raise InvalidInput(f"control_fields must be a nonempty (m, {d}) array, got {b.shape}")
        rng = self.control_range
        if rng.bounds is not None and rng.bounds.shape[0] != b.shape[0]:
            raise InvalidInput(f"range has {rng.bounds.shape[0]} channels but there are {b.shape[0]} control fields")
        der.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "derivation", der)
        object.__setattr__(self, "control_fields", b)

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def n_controls(self) -> int:
        return self.control_fields.shape[0]

    def box(self, default_radius: float = 1.0) -> np.ndarray:
        """Control box used for sampling; unrestricted ranges fall back to ``[-r, r]`` per channel."""
        if self.control_range.bounds is not None:
            return np.array(self.control_range.bounds)
        return np.tile([-default_radius, default_radius], (self.n_controls, 1))

    def replace(self, **changes) -> "ControlSystem":
        kw = dict(
            algebra=self.algebra,
            derivation=self.derivation,
            control_fields=self.control_fields,
            control_range=self.control_range,
            group_meta=self.group_meta,
            name=self.name,
        )
        kw.update(changes)
        return ControlSystem(**kw)
