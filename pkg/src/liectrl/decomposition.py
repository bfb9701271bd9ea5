"""Spectral splitting of a derivation into generalized eigenspaces.

Computed eigenvalues are grouped into classes before anything is counted:
values closer than ``CLUSTER_TOL`` are merged, and a larger group is also
accepted when its spread is consistent with the eigenvalue splitting of a
Jordan block of that size (about ``(eps * |D|)**(1/k)``) *and* the rank of
``(D - mean)**k`` confirms the multiplicity.  The class representative is the
mean of its members, which is accurate even when the members are not.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    LieAlgebra,
    Subspace,
    TOL_RANK,
    _bracket_cols,
    bracket_floor,
    lower_central_series,
    orth,
)
from .errors import NotAnEigenvalue

TOL_SPEC = 1e-9
CLUSTER_TOL = 1e-7
GRADING_TOL = 1e-8


@dataclass(frozen=True)
class EigenClass:
    value: complex
    multiplicity: int

    @property
    def is_real(self) -> bool:
        return self.value.imag == 0.0


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalue classes with algebraic multiplicities.

    Values whose real (imaginary) part is below ``tol`` in magnitude are
    snapped to exactly zero real (imaginary) part.
    """

    classes: tuple[EigenClass, ...]
    tol: float = TOL_SPEC

    @property
    def values(self) -> list[complex]:
        return [c.value for c in self.classes]

    @property
    def dim(self) -> int:
        return sum(c.multiplicity for c in self.classes)

    def multiplicity(self, value: complex, tol: float = CLUSTER_TOL) -> int:
        cls = self.find(value, tol)
        return 0 if cls is None else cls.multiplicity

    def find(self, value: complex, tol: float = CLUSTER_TOL) -> EigenClass | None:
        best = None
        for c in self.classes:
            dist = abs(c.value - value)
            if dist <= tol and (best is None or dist < abs(best.value - value)):
                best = c
        return best

    def zero_real_part(self) -> bool:
        return all(c.value.real == 0.0 for c in self.classes)

    def offending(self) -> list[complex]:
        return [c.value for c in self.classes if c.value.real != 0.0]

    def to_list(self) -> list[dict]:
        return [
            {"re": c.value.real, "im": c.value.imag, "multiplicity": c.multiplicity}
            for c in self.classes
        ]


def _snap(z: complex, tol: float) -> complex:
    re = 0.0 if abs(z.real) < tol else z.real
    im = 0.0 if abs(z.imag) < tol else z.imag
    return complex(re, im)


def _nullity_at(d: np.ndarray, mu: complex, k: int) -> int:
    n = d.shape[0]
    m = np.linalg.matrix_power(d.astype(complex) - mu * np.eye(n), k)
    s = np.linalg.svd(m, compute_uv=False)
    ref = max(float(np.linalg.norm(d, 2)) ** k, 1.0)
    return int(np.sum(s <= 1e-8 * ref))


def _cluster(d: np.ndarray, eig: np.ndarray) -> list[list[complex]]:
    eps = np.finfo(float).eps
    norm = max(1.0, float(np.linalg.norm(d, 2)))
    remaining = sorted(eig.tolist(), key=lambda z: (z.real, z.imag))
    groups = []
    while remaining:
        seed = remaining[0]
        order = sorted(remaining, key=lambda z: abs(z - seed))
        best = [z for z in order if abs(z - seed) <= CLUSTER_TOL]
        for k in range(len(best) + 1, len(order) + 1):
            cand = order[:k]
            mu = np.mean(cand)
            spread = max(abs(z - mu) for z in cand)
            if spread > max(CLUSTER_TOL, 10.0 * (eps * norm) ** (1.0 / k)):
                continue
            if _nullity_at(d, mu, k) >= k:
                best = cand
        for z in best:
            remaining.remove(z)
        groups.append(best)
    return groups


def spectrum(d, tol: float = TOL_SPEC) -> Spectrum:
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    if not np.any(d):
        return Spectrum((EigenClass(0j, n),), tol)
    eig = np.linalg.eigvals(d)
    groups = _cluster(d, eig)
    classes = {}
    for grp in groups:
        mu = _snap(complex(np.mean(grp)), tol)
        classes[mu] = classes.get(mu, 0) + len(grp)
    out = []
    for val, mult in classes.items():
        out.append(EigenClass(val, mult))
    out.sort(key=lambda c: (c.value.real, abs(c.value.imag), c.value.imag))
    return Spectrum(tuple(out), tol)


def _complex_gen_eigenspace(d: np.ndarray, mu: complex, mult: int) -> np.ndarray:
    """Complex basis (columns) of ``ker (D - mu)^mult``, exactly ``mult`` columns."""
    n = d.shape[0]
    m = np.linalg.matrix_power(d.astype(complex) - mu * np.eye(n), mult)
    _, _, vh = np.linalg.svd(m)
    return vh[n - mult:].conj().T


def _real_span(v: np.ndarray, expected: int) -> np.ndarray:
    both = np.hstack([v.real, v.imag])
    u, _, _ = np.linalg.svd(both, full_matrices=False)
    return u[:, :expected]


def _match(spec: Spectrum, alpha: complex) -> EigenClass:
    cls = spec.find(alpha, max(spec.tol, CLUSTER_TOL))
    if cls is None or abs(cls.value - alpha) > max(spec.tol, CLUSTER_TOL):
        raise NotAnEigenvalue(f"{alpha} is not an eigenvalue; spectrum is {spec.values}")
    return cls


def generalized_eigenspace(d, alpha: complex, spec: Spectrum | None = None) -> Subspace:
    """Real generalized eigenspace; for non-real ``alpha`` the invariant space of the conjugate pair."""
    d = np.asarray(d, dtype=float)
    spec = spec or spectrum(d)
    cls = _match(spec, complex(alpha))
    v = _complex_gen_eigenspace(d, cls.value, cls.multiplicity)
    expected = cls.multiplicity if cls.is_real else 2 * cls.multiplicity
    basis = _real_span(v, expected)
    basis.setflags(write=False)
    return Subspace(basis)


@dataclass(frozen=True, eq=False)
class DDecomposition:
    """``g = g_plus + g_minus + g_zero`` plus the generalized kernel and per-class pieces."""

    g_plus: Subspace
    g_minus: Subspace
    g_zero: Subspace
    g_kernel: Subspace
    per_eigenvalue: dict = field(default_factory=dict)
    spectrum: Spectrum | None = None

    @property
    def g_plus_zero(self) -> Subspace:
        return self.g_plus + self.g_zero

    @property
    def g_minus_zero(self) -> Subspace:
        return self.g_minus + self.g_zero

    def dims(self) -> dict:
        return {
            "g_plus": self.g_plus.dim,
            "g_minus": self.g_minus.dim,
            "g_zero": self.g_zero.dim,
            "g_kernel": self.g_kernel.dim,
        }


def _stack(n: int, blocks: list[np.ndarray]) -> Subspace:
    if not blocks:
        return Subspace.zero(n)
    m = np.hstack(blocks)
    q, _ = np.linalg.qr(m)
    q.setflags(write=False)
    return Subspace(q)


def d_decomposition(d, tol: float = TOL_SPEC) -> DDecomposition:
    d = np.asarray(d, dtype=float)
    n = d.shape[0]
    spec = spectrum(d, tol)
    per = {}
    plus, minus, zero = [], [], []
    kernel = Subspace.zero(n)
    for cls in spec.classes:
        if cls.value.imag < 0:
            continue
        sub = generalized_eigenspace(d, cls.value, spec)
        per[cls.value] = sub
        if cls.value.real > 0:
            plus.append(sub.basis)
        elif cls.value.real < 0:
            minus.append(sub.basis)
        else:
            zero.append(sub.basis)
        if cls.value == 0:
            kernel = sub
    return DDecomposition(_stack(n, plus), _stack(n, minus), _stack(n, zero), kernel, per, spec)


@dataclass(frozen=True)
class GradingReport:
    max_residual: float
    tolerance: float
    worst_pair: tuple | None

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def _all_complex_spaces(d: np.ndarray, spec: Spectrum) -> list[tuple[complex, np.ndarray]]:
    out = []
    for cls in spec.classes:
        out.append((cls.value, _complex_gen_eigenspace(d, cls.value, cls.multiplicity)))
    return out


def check_grading(a: LieAlgebra, d, dec: DDecomposition | None = None, tol: float = GRADING_TOL) -> GradingReport:
    """Check ``[g_alpha, g_beta] in g_(alpha+beta)`` (and ``= 0`` off the spectrum).

    Works on the complex generalized eigenspaces, one eigenvalue at a time.
    """
    d = np.asarray(d, dtype=float)
    spec = dec.spectrum if dec is not None and dec.spectrum is not None else spectrum(d)
    spaces = _all_complex_spaces(d, spec)
    w = np.hstack([v for _, v in spaces])
    offsets = np.cumsum([0] + [v.shape[1] for _, v in spaces])
    winv = np.linalg.inv(w)
    worst, worst_pair = 0.0, None
    for ia, (alpha, va) in enumerate(spaces):
        for ib, (beta, vb) in enumerate(spaces):
            if ib < ia:
                continue
            z = _bracket_cols(a.structure.astype(complex), va, vb)
            if z.shape[1] == 0:
                continue
            target = spec.find(alpha + beta)
            if target is None:
                res = float(np.max(np.linalg.norm(z, axis=0)))
            else:
                it = spec.classes.index(target)
                coords = winv @ z
                mask = np.ones(w.shape[1], dtype=bool)
                mask[offsets[it]:offsets[it + 1]] = False
                res = float(np.max(np.linalg.norm(w[:, mask] @ coords[mask], axis=0)))
            if res > worst or worst_pair is None:
                worst, worst_pair = max(worst, res), (alpha, beta)
    return GradingReport(worst, tol, worst_pair)


@dataclass(frozen=True, eq=False)
class MultiplesSubalgebra:
    """Real form of the sum of ``g_(j alpha)`` over positive integers ``j``."""

    subspace: Subspace
    multiples: tuple[int, ...]
    complex_dim: int
    nilpotent: bool


def multiples_subalgebra(a: LieAlgebra, d, alpha: complex, tol: float = TOL_SPEC) -> MultiplesSubalgebra:
    d = np.asarray(d, dtype=float)
    spec = spectrum(d, tol)
    cls = _match(spec, complex(alpha))
    if cls.value.real != 0.0 or cls.value == 0:
        raise NotAnEigenvalue(f"{alpha} must be a nonzero eigenvalue with zero real part")
    alpha = cls.value
    top = max(abs(c.value) for c in spec.classes)
    cols, js = [], []
    j = 1
    while j * abs(alpha) <= top + CLUSTER_TOL:
        c = spec.find(j * alpha)
        if c is not None:
            cols.append(_complex_gen_eigenspace(d, c.value, c.multiplicity))
            js.append(j)
        j += 1
    v = np.hstack(cols)
    c = a.structure.astype(complex)
    square = _bracket_cols(c, v, v)
    closed = np.linalg.norm(square - v @ np.linalg.lstsq(v, square, rcond=None)[0]) <= 1e-8
    # lower central series on the complex span must die out
    nilpotent = True
    cur = v
    while cur.shape[1]:
        nxt = orth(_bracket_cols(c, v, cur), floor=bracket_floor(a))
        if nxt.shape[1] >= cur.shape[1]:
            nilpotent = False
            break
        cur = nxt
    sub = Subspace.span(np.hstack([v.real, v.imag]))
    return MultiplesSubalgebra(sub, tuple(js), v.shape[1], nilpotent and closed)


def is_d_invariant(d, sub: Subspace, tol: float = 1e-9) -> bool:
    return sub.dim == 0 or sub.contains(np.asarray(d, dtype=float) @ sub.basis, tol)


def is_nilpotent_subspace(a: LieAlgebra, sub: Subspace) -> bool:
    return lower_central_series(a, sub)[-1].dim == 0


__all__ = [
    "TOL_SPEC",
    "TOL_RANK",
    "EigenClass",
    "Spectrum",
    "spectrum",
    "generalized_eigenspace",
    "DDecomposition",
    "d_decomposition",
    "GradingReport",
    "check_grading",
    "MultiplesSubalgebra",
    "multiples_subalgebra",
    "is_d_invariant",
    "is_nilpotent_subspace",
]
