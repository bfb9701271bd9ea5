"""Matrix-group realizations of linear systems and their numerical solution.

A realization is a direct product of factors, each either a translation group
``R^d`` or a connected matrix group given by an embedding of its slice of the
algebra basis.  The derivation is realized per factor as a linear map on a
translation factor, as ``ad(Y0)`` for an element ``Y0`` of a matrix factor, or
trivially.  Internally a group element is one block-diagonal matrix; a
translation ``x`` is stored in affine form ``[[I, x], [0, 1]]`` so that its
linear flow ``x -> exp(tA) x`` is conjugation by ``diag(exp(tA), 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from . import kernels
from .algebra import LieAlgebra
from .errors import InvalidInput, StepRejected, UnsupportedRealization, ValidationFailed
from .system import ControlSystem

DEFAULT_DT = 1e-3
EMBED_TOL = 1e-10
INNER_TOL = 1e-9
RECOVER_TOL = 1e-8
LOG_ANGLE = 0.95 * math.pi

_CHECK_FLAGS = {"unit_det": kernels.UNIT_DET, "orthogonal": kernels.ORTHOGONAL, "none": 0}


@dataclass(frozen=True, eq=False)
class TranslationFactor:
    dim: int
    name: str = "R"

    @property
    def algebra_dim(self) -> int:
        return self.dim

    @property
    def block_size(self) -> int:
        return self.dim + 1


@dataclass(frozen=True, eq=False)
class MatrixFactor:
    embedding: np.ndarray
    checks: tuple[str, ...] = ()
    name: str = "G"

    def __post_init__(self):
        e = np.array(self.embedding, dtype=float)
        if e.ndim != 3 or e.shape[1] != e.shape[2]:
            raise InvalidInput(f"embedding must have shape (k, n, n), got {e.shape}")
        for c in self.checks:
            if c not in _CHECK_FLAGS:
                raise InvalidInput(f"unknown invariant check {c!r}")
        e.setflags(write=False)
        object.__setattr__(self, "embedding", e)
        object.__setattr__(self, "checks", tuple(self.checks))

    @property
    def size(self) -> int:
        return self.embedding.shape[1]

    @property
    def algebra_dim(self) -> int:
        return self.embedding.shape[0]

    @property
    def block_size(self) -> int:
        return self.size


DERIVATION_KINDS = ("auto", "linear_map", "inner", "trivial")


@dataclass(frozen=True, eq=False)
class GroupElement:
    """Block-diagonal matrix representing an element of a realization."""

    matrix: np.ndarray
    realization: "GroupRealization" = field(repr=False)

    @property
    def parts(self) -> list[np.ndarray]:
        """Per-factor values: a vector for translations, a matrix otherwise."""
        return self.realization.split(self.matrix)

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.matrix @ other.matrix, self.realization)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.realization._inverse(self.matrix), self.realization)


class GroupRealization:
    """Direct product of translation and matrix factors carrying a realized derivation.

    Factors consume the algebra basis in order: the first factor owns the first
    ``factor.algebra_dim`` basis vectors, and so on.
    """

    def __init__(
        self,
        algebra: LieAlgebra,
        factors: Sequence[TranslationFactor | MatrixFactor],
        derivation: np.ndarray,
        kinds: Sequence[str] | None = None,
    ):
        self.algebra = algebra
        self.factors = tuple(factors)
        self.kinds = tuple(kinds) if kinds is not None else ("auto",) * len(self.factors)
        if len(self.kinds) != len(self.factors):
            raise InvalidInput("one derivation kind per factor is required")
        for k in self.kinds:
            if k not in DERIVATION_KINDS:
                raise UnsupportedRealization(f"unknown derivation realization {k!r}")
        if sum(f.algebra_dim for f in self.factors) != algebra.dim:
            raise InvalidInput("factors must account for every algebra basis vector")
        self.derivation = np.array(derivation, dtype=float)
        self.derivation.setflags(write=False)

        idx, start = 0, 0
        self.slices, self.starts, self.sizes, self.flags = [], [], [], []
        for f in self.factors:
            self.slices.append(slice(idx, idx + f.algebra_dim))
            self.starts.append(start)
            self.sizes.append(f.block_size)
            if isinstance(f, TranslationFactor):
                self.flags.append(kernels.AFFINE)
            else:
                self.flags.append(sum(_CHECK_FLAGS[c] for c in set(f.checks)))
            idx += f.algebra_dim
            start += f.block_size
        self.size = start
        self.starts = np.array(self.starts, dtype=np.int64)
        self.sizes = np.array(self.sizes, dtype=np.int64)
        self.flags = np.array(self.flags, dtype=np.int64)

        self.residuals = self._validate_structure()
        self.y0, self.inner_elements = self._realize_derivation()

    # -- construction -----------------------------------------------------

    def _validate_structure(self) -> dict:
        c = self.algebra.structure
        owner = np.zeros(self.algebra.dim, dtype=int)
        for k, sl in enumerate(self.slices):
            owner[sl] = k
        cross = 0.0
        for i in range(self.algebra.dim):
            for j in range(self.algebra.dim):
                if owner[i] != owner[j]:
                    cross = max(cross, float(np.max(np.abs(c[i, j]))))
                else:
                    outside = owner != owner[i]
                    cross = max(cross, float(np.max(np.abs(c[i, j, outside]), initial=0.0)))
        hom = 0.0
        for f, sl in zip(self.factors, self.slices):
            cf = c[sl, sl, sl]
            if isinstance(f, TranslationFactor):
                hom = max(hom, float(np.max(np.abs(cf), initial=0.0)))
                continue
            e = f.embedding
            if np.linalg.matrix_rank(e.reshape(f.algebra_dim, -1)) < f.algebra_dim:
                raise ValidationFailed(f"embedding of factor {f.name} is not injective")
            comm = np.einsum("iab,jbc->ijac", e, e)
            comm = comm - comm.transpose(1, 0, 2, 3)
            pred = np.einsum("ijk,kab->ijab", cf, e)
            scale = max(1.0, float(np.max(np.abs(e))) ** 2)
            hom = max(hom, float(np.max(np.abs(comm - pred))) / scale)
        res = {"cross_factor": cross, "embedding": hom}
        if cross > EMBED_TOL or hom > EMBED_TOL:
            raise ValidationFailed("realization does not match the structure constants", res)
        return res

    def _realize_derivation(self):
        d = self.derivation
        n = self.algebra.dim
        mask = np.zeros((n, n), dtype=bool)
        for sl in self.slices:
            mask[sl, sl] = True
        off = float(np.max(np.abs(d[~mask]), initial=0.0))
        if off > INNER_TOL:
            raise UnsupportedRealization("derivation mixes factors; only factor-wise derivations are realizable")
        y0 = np.zeros((self.size, self.size))
        inner = []
        c = self.algebra.structure
        for f, sl, s, kind in zip(self.factors, self.slices, self.starts, self.kinds):
            blk = d[sl, sl]
            zero = not np.any(np.abs(blk) > 1e-14)
            if kind == "auto":
                if isinstance(f, TranslationFactor):
                    kind = "linear_map"
                else:
                    kind = "trivial" if zero else "inner"
            if kind == "trivial":
                if not zero:
                    raise UnsupportedRealization(f"factor {f.name}: derivation is not trivial on this factor")
                inner.append(None)
                continue
            if isinstance(f, TranslationFactor):
                if kind != "linear_map":
                    raise UnsupportedRealization(f"translation factor {f.name} needs a linear_map derivation")
                y0[s:s + f.dim, s:s + f.dim] = blk
                inner.append(None)
                continue
            if kind != "inner":
                raise UnsupportedRealization(f"matrix factor {f.name} needs an inner or trivial derivation")
            k = f.algebra_dim
            cf = c[sl, sl, sl]
            # ad(y)[q, j] = sum_p y_p c[p, j, q]
            lhs = np.einsum("pjq->qjp", cf).reshape(k * k, k)
            y, *_ = np.linalg.lstsq(lhs, blk.reshape(-1), rcond=None)
            res = float(np.max(np.abs(lhs @ y - blk.reshape(-1))))
            if res > RECOVER_TOL:
                raise UnsupportedRealization(
                    f"factor {f.name}: derivation is not inner (least-squares residual {res:.3g})"
                )
            ymat = np.einsum("p,pab->ab", y, f.embedding)
            e = f.embedding
            comm = np.einsum("ab,jbc->jac", ymat, e) - np.einsum("jab,bc->jac", e, ymat)
            pred = np.einsum("qj,qab->jab", blk, e)
            if float(np.max(np.abs(comm - pred))) > INNER_TOL * max(1.0, float(np.max(np.abs(blk)))):
                raise UnsupportedRealization(f"factor {f.name}: ad(Y0) does not reproduce the derivation")
            y0[s:s + f.size, s:s + f.size] = ymat
            inner.append(y)
        y0.setflags(write=False)
        return y0, inner

    def with_derivation(self, derivation) -> "GroupRealization":
        derivation = np.asarray(derivation, dtype=float)
        if np.array_equal(derivation, self.derivation):
            return self
        cache = self.__dict__.setdefault("_variants", {})
        key = derivation.tobytes()
        if key not in cache:
            cache[key] = GroupRealization(self.algebra, self.factors, derivation, self.kinds)
        return cache[key]

    def for_system(self, sys: ControlSystem) -> "GroupRealization":
        if sys.algebra.dim != self.algebra.dim:
            raise InvalidInput("system and realization have different algebras")
        return self.with_derivation(sys.derivation)

    # -- algebra <-> matrices ----------------------------------------------

    def embed(self, v) -> np.ndarray:
        """Block-diagonal matrix of the algebra element ``v``."""
        v = self.algebra.check_vector(v)
        out = np.zeros((self.size, self.size))
        for f, sl, s in zip(self.factors, self.slices, self.starts):
            if isinstance(f, TranslationFactor):
                out[s:s + f.dim, s + f.dim] = v[sl]
            else:
                out[s:s + f.size, s:s + f.size] = np.einsum("p,pab->ab", v[sl], f.embedding)
        return out

    def control_matrices(self, sys: ControlSystem) -> np.ndarray:
        return np.array([self.embed(b) for b in sys.control_fields])

    @cached_property
    def _coord_solvers(self):
        out = []
        for f in self.factors:
            if isinstance(f, MatrixFactor):
                out.append(np.linalg.pinv(f.embedding.reshape(f.algebra_dim, -1).T))
            else:
                out.append(None)
        return out

    # -- group operations ---------------------------------------------------

    def identity(self) -> GroupElement:
        return GroupElement(np.eye(self.size), self)

    def element(self, matrix) -> GroupElement:
        m = np.asarray(matrix, dtype=float)
        if m.shape != (self.size, self.size):
            raise InvalidInput(f"element must be {self.size}x{self.size}")
        return GroupElement(m, self)

    def from_parts(self, parts: Sequence) -> GroupElement:
        m = np.zeros((self.size, self.size))
        for f, s, p in zip(self.factors, self.starts, parts):
            p = np.asarray(p, dtype=float)
            if isinstance(f, TranslationFactor):
                m[s:s + f.dim, s:s + f.dim] = np.eye(f.dim)
                m[s:s + f.dim, s + f.dim] = p
                m[s + f.dim, s + f.dim] = 1.0
            else:
                m[s:s + f.size, s:s + f.size] = p
        return GroupElement(m, self)

    def split(self, matrix) -> list[np.ndarray]:
        out = []
        for f, s in zip(self.factors, self.starts):
            if isinstance(f, TranslationFactor):
                out.append(np.array(matrix[s:s + f.dim, s + f.dim]))
            else:
                out.append(np.array(matrix[s:s + f.size, s:s + f.size]))
        return out

    def _inverse(self, matrix) -> np.ndarray:
        out = np.zeros_like(matrix)
        for f, s, n in zip(self.factors, self.starts, self.sizes):
            blk = matrix[s:s + n, s:s + n]
            if isinstance(f, TranslationFactor):
                inv = np.eye(n)
                inv[:f.dim, f.dim] = -blk[:f.dim, f.dim]
                out[s:s + n, s:s + n] = inv
            elif "orthogonal" in f.checks:
                out[s:s + n, s:s + n] = blk.T
            else:
                out[s:s + n, s:s + n] = np.linalg.inv(blk)
        return out

    def flat(self, g: GroupElement) -> np.ndarray:
        """Per-factor flattened coordinates (translation vector, then row-major matrices)."""
        return np.concatenate([p.ravel() for p in g.parts])

    def flat_columns(self) -> list[str]:
        cols = []
        for k, f in enumerate(self.factors):
            if isinstance(f, TranslationFactor):
                cols += [f"f{k}_x{i}" for i in range(f.dim)]
            else:
                cols += [f"f{k}_m{i}{j}" for i in range(f.size) for j in range(f.size)]
        return cols

    def distance(self, g: GroupElement, h: GroupElement) -> float:
        """Euclidean on translation factors plus Frobenius on matrix factors."""
        return float(sum(np.linalg.norm(a - b) for a, b in zip(g.parts, h.parts)))

    def invariant_residuals(self, g: GroupElement) -> dict:
        det_res, orth_res = 0.0, 0.0
        for f, p in zip(self.factors, g.parts):
            if isinstance(f, TranslationFactor):
                continue
            if "unit_det" in f.checks:
                det_res = max(det_res, abs(float(np.linalg.det(p)) - 1.0))
            if "orthogonal" in f.checks:
                orth_res = max(orth_res, float(np.linalg.norm(p.T @ p - np.eye(f.size))))
        return {"det": det_res, "orthogonal": orth_res}

    def log_coords(self, g: GroupElement) -> np.ndarray | None:
        """Algebra coordinates of the principal logarithm, or ``None`` when it is ill-conditioned.

        The logarithm is rejected when some eigenvalue of a matrix factor lies
        within ``0.05 * pi`` of the negative real axis.
        """
        coords = []
        for f, p, solver in zip(self.factors, g.parts, self._coord_solvers):
            if isinstance(f, TranslationFactor):
                coords.append(p)
                continue
            ev = np.linalg.eigvals(p)
            if np.any(np.abs(np.angle(ev)) > LOG_ANGLE) or np.any(np.abs(ev) == 0):
                return None
            lg = scipy.linalg.logm(p)
            lg = np.real_if_close(lg, tol=1e6)
            if np.iscomplexobj(lg):
                return None
            coords.append(solver @ np.asarray(lg).ravel())
        return np.concatenate(coords)


# ---------------------------------------------------------------------------
# group exponential and linear flow


def group_exp(r: GroupRealization, v) -> GroupElement:
    x = r.embed(v)
    out = np.zeros_like(x)
    for f, s, n in zip(r.factors, r.starts, r.sizes):
        if isinstance(f, TranslationFactor):
            out[s:s + n, s:s + n] = np.eye(n) + x[s:s + n, s:s + n]
        else:
            out[s:s + n, s:s + n] = kernels.expm(x[s:s + n, s:s + n])
    return GroupElement(out, r)


def _flow_conjugators(r: GroupRealization, t: float):
    left = np.zeros((r.size, r.size))
    right = np.zeros((r.size, r.size))
    for s, n in zip(r.starts, r.sizes):
        blk = r.y0[s:s + n, s:s + n]
        left[s:s + n, s:s + n] = kernels.expm(t * blk)
        right[s:s + n, s:s + n] = kernels.expm(-t * blk)
    return left, right


def linear_flow(r: GroupRealization, t: float, g: GroupElement) -> GroupElement:
    """Flow of the linear vector field: ``g -> exp(t Y0) g exp(-t Y0)`` blockwise."""
    if t == 0:
        return g
    left, right = _flow_conjugators(r, t)
    return GroupElement(left @ g.matrix @ right, r)


def flow_automorphism_check(r: GroupRealization, t: float, g: GroupElement, h: GroupElement) -> float:
    lhs = linear_flow(r, t, g @ h)
    rhs = linear_flow(r, t, g) @ linear_flow(r, t, h)
    return r.distance(lhs, rhs)


def flow_differential(r: GroupRealization, t: float, h: float = 1e-5) -> np.ndarray:
    """Central-difference differential of ``linear_flow(t, .)`` at the identity, in algebra coordinates."""
    n = r.algebra.dim
    out = np.zeros((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        plus = r.log_coords(linear_flow(r, t, group_exp(r, e)))
        minus = r.log_coords(linear_flow(r, t, group_exp(r, -e)))
        out[:, i] = (plus - minus) / (2 * h)
    return out


# ---------------------------------------------------------------------------
# controls and trajectories


@dataclass(frozen=True, eq=False)
class ControlSignal:
    """Piecewise-constant control: ``values[p]`` is held for ``durations[p]``."""

    durations: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        d = np.array(self.durations, dtype=float).reshape(-1)
        v = np.array(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None] if d.size != 1 else v[None, :]
        if v.shape[0] != d.shape[0]:
            raise InvalidInput("one control value per piece is required")
        if np.any(d <= 0):
            raise InvalidInput("piece durations must be positive")
        d.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "durations", d)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, u, duration: float) -> "ControlSignal":
        return cls([duration], np.atleast_1d(np.asarray(u, dtype=float))[None, :])

    @classmethod
    def zero(cls, m: int, duration: float) -> "ControlSignal":
        return cls.constant(np.zeros(m), duration)

    @property
    def duration(self) -> float:
        return float(np.sum(self.durations))

    @property
    def n_controls(self) -> int:
        return self.values.shape[1]

    def __add__(self, other: "ControlSignal") -> "ControlSignal":
        """Concatenation: ``self`` first, then ``other``."""
        return ControlSignal(
            np.concatenate([self.durations, other.durations]),
            np.vstack([self.values, other.values]),
        )

    def split(self, s: float) -> tuple["ControlSignal", "ControlSignal"]:
        """Restriction to ``[0, s]`` and the shifted tail ``u(. + s)``."""
        ends = np.cumsum(self.durations)
        if not 0 < s < ends[-1]:
            raise InvalidInput("split point must lie strictly inside the signal")
        head_d, head_v, tail_d, tail_v = [], [], [], []
        t0 = 0.0
        for d, v, t1 in zip(self.durations, self.values, ends):
            if t1 <= s:
                head_d.append(d)
                head_v.append(v)
            elif t0 >= s:
                tail_d.append(d)
                tail_v.append(v)
            else:
                head_d.append(s - t0)
                head_v.append(v)
                tail_d.append(t1 - s)
                tail_v.append(v)
            t0 = t1
        return ControlSignal(head_d, head_v), ControlSignal(tail_d, tail_v)

    def shifted(self, s: float) -> "ControlSignal":
        return self.split(s)[1]

    def time_reversed(self) -> "ControlSignal":
        """``v(t) = -u(T - t)``: the control that drives the reverse system to ``phi_-T(endpoint^-1)``."""
        return ControlSignal(self.durations[::-1], -self.values[::-1])

    def within(self, box: np.ndarray, tol: float = 1e-12) -> bool:
        return bool(np.all(self.values >= box[:, 0] - tol) and np.all(self.values <= box[:, 1] + tol))

    def to_json(self) -> list:
        return [[float(d), v.tolist()] for d, v in zip(self.durations, self.values)]

    @classmethod
    def from_json(cls, pieces) -> "ControlSignal":
        return cls([p[0] for p in pieces], [np.atleast_1d(p[1]) for p in pieces])


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    realization: GroupRealization = field(repr=False)

    @property
    def final(self) -> GroupElement:
        return GroupElement(self.states[-1], self.realization)

    def __len__(self):
        return len(self.times)

    def __getitem__(self, i) -> GroupElement:
        return GroupElement(self.states[i], self.realization)

    def rows(self) -> list[list[float]]:
        r = self.realization
        return [[float(t)] + r.flat(self[i]).tolist() for i, t in enumerate(self.times)]

    def columns(self) -> list[str]:
        return ["time"] + self.realization.flat_columns()


def step_schedule(signal: ControlSignal, dt: float = DEFAULT_DT) -> tuple[np.ndarray, np.ndarray]:
    """Per-step sizes and controls; each piece is split into equal steps no longer than ``dt``."""
    if dt <= 0:
        raise InvalidInput("dt must be positive")
    hs, us = [], []
    for d, v in zip(signal.durations, signal.values):
        n = max(1, math.ceil(d / dt - 1e-9))
        hs.append(np.full(n, d / n))
        us.append(np.repeat(v[None, :], n, axis=0))
    return np.concatenate(hs), np.vstack(us)


def _check_box(sys: ControlSystem, values: np.ndarray):
    if sys.control_range.restricted:
        box = sys.control_range.bounds
        if np.any(values < box[:, 0] - 1e-12) or np.any(values > box[:, 1] + 1e-12):
            raise InvalidInput("control values outside the control range")


def _raise_status(status: int, where: str):
    if status == kernels.STATUS_BAD_DET:
        raise StepRejected(f"{where}: determinant left the identity component; reduce dt")
    if status != kernels.STATUS_OK:
        raise StepRejected(f"{where}: invariant drift above {kernels.REJECT_TOL:g}; reduce dt")


def step(r: GroupRealization, sys: ControlSystem, g: GroupElement, u, dt: float) -> GroupElement:
    """One classical RK4 step followed by invariant renormalisation."""
    if dt <= 0:
        raise InvalidInput("dt must be positive")
    r = r.for_system(sys)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    _check_box(sys, u[None, :])
    out, status, _ = kernels.rk4_path(
        g.matrix, r.y0, r.control_matrices(sys), np.array([dt]), u[None, :],
        np.array([True]), r.starts, r.sizes, r.flags,
    )
    _raise_status(status, "step")
    return GroupElement(out[-1], r)


def solve(
    r: GroupRealization,
    sys: ControlSystem,
    g0: GroupElement,
    u: ControlSignal,
    dt: float = DEFAULT_DT,
    stride: int = 1,
) -> Trajectory:
    """Fixed-step RK4 solution from ``g0``; states are kept every ``stride`` steps and at the end."""
    r = r.for_system(sys)
    if u.n_controls != sys.n_controls:
        raise InvalidInput(f"signal has {u.n_controls} channels, system has {sys.n_controls}")
    _check_box(sys, u.values)
    hs, us = step_schedule(u, dt)
    record = np.zeros(len(hs), dtype=bool)
    record[stride - 1::max(1, stride)] = True
    record[-1] = True
    out, status, _ = kernels.rk4_path(
        g0.matrix, r.y0, r.control_matrices(sys), hs, us, record, r.starts, r.sizes, r.flags
    )
    _raise_status(status, "solve")
    t = np.concatenate([[0.0], np.cumsum(hs)[record]])
    return Trajectory(t, out, r)


def solve_backward(
    r: GroupRealization, sys: ControlSystem, g: GroupElement, u: ControlSignal, dt: float = DEFAULT_DT
) -> GroupElement:
    """Integrate backwards in time over ``u``: the state at time 0 whose forward solution ends at ``g``."""
    r = r.for_system(sys)
    hs, us = step_schedule(u, dt)
    record = np.zeros(len(hs), dtype=bool)
    record[-1] = True
    out, status, _ = kernels.rk4_path(
        g.matrix, r.y0, r.control_matrices(sys), -hs[::-1], us[::-1],
        record, r.starts, r.sizes, r.flags,
    )
    _raise_status(status, "solve_backward")
    return GroupElement(out[-1], r)


def solve_exact(r: GroupRealization, sys: ControlSystem, g0: GroupElement, u: ControlSignal) -> GroupElement:
    """Endpoint from closed-form exponentials of each constant piece."""
    r = r.for_system(sys)
    out = kernels.exact_batch(g0.matrix, r.y0, r.control_matrices(sys), u.durations[None], u.values[None])
    return GroupElement(out[0], r)


def reverse_system(sys: ControlSystem) -> ControlSystem:
    """Same algebra, fields and range; negated derivation."""
    name = sys.name[:-1] if sys.name.endswith("*") else (sys.name + "*" if sys.name else "")
    return sys.replace(derivation=-sys.derivation, name=name)
