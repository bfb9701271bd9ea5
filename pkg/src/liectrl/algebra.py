"""Finite-dimensional real Lie algebras given by structure constants.

The bracket of basis vectors is ``[e_i, e_j] = sum_k c[i, j, k] e_k``.  Vectors
are plain 1-d numpy arrays of coordinates in that basis; derivations are
``dim x dim`` matrices acting on coordinate columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInput, ValidationFailed

TOL_ALG = 1e-12
TOL_RANK = 1e-10


# ---------------------------------------------------------------------------
# rank helpers


def orth(vectors: np.ndarray, tol: float = TOL_RANK, floor: float = 0.0) -> np.ndarray:
    """Orthonormal basis (as columns) of the column space of ``vectors``.

    Singular values below ``tol`` times the largest one, or below the absolute
    ``floor``, are discarded.  Works for real and complex input.
    """
    vectors = np.asarray(vectors)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    if vectors.size == 0 or vectors.shape[1] == 0:
        return np.zeros((vectors.shape[0], 0), dtype=vectors.dtype)
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    if s[0] <= floor:
        return np.zeros((vectors.shape[0], 0), dtype=vectors.dtype)
    r = int(np.sum(s > max(tol * s[0], floor)))
    return u[:, :r]


def rank(vectors: np.ndarray, tol: float = TOL_RANK) -> int:
    return orth(vectors, tol).shape[1]


def null_space(matrix: np.ndarray, tol: float = TOL_RANK) -> np.ndarray:
    matrix = np.asarray(matrix)
    n = matrix.shape[1]
    if matrix.size == 0:
        return np.eye(n, dtype=matrix.dtype)
    _, s, vh = np.linalg.svd(matrix)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(n, dtype=matrix.dtype)
    r = int(np.sum(s > tol * s[0]))
    return vh[r:].conj().T


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace of an algebra, stored as an orthonormal column basis."""

    basis: np.ndarray

    @classmethod
    def span(cls, vectors, dim: int | None = None, tol: float = TOL_RANK, floor: float = 0.0) -> "Subspace":
        arr = np.asarray(vectors, dtype=float)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.shape[1] == 0 and dim is not None:
            arr = np.zeros((dim, 0))
        q = orth(arr, tol, floor)
        q.setflags(write=False)
        return cls(q)

    @classmethod
    def zero(cls, dim: int) -> "Subspace":
        return cls.span(np.zeros((dim, 0)))

    @classmethod
    def whole(cls, dim: int) -> "Subspace":
        return cls.span(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    def project(self, v: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto the subspace."""
        return self.basis @ (self.basis.T @ v)

    def distance(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=float)
        if v.ndim == 1:
            return float(np.linalg.norm(v - self.project(v)))
        return float(np.max(np.linalg.norm(v - self.project(v), axis=0), initial=0.0))

    def contains(self, v: np.ndarray, tol: float = 1e-9) -> bool:
        v = np.asarray(v, dtype=float)
        scale = max(1.0, float(np.max(np.abs(v), initial=0.0)))
        return self.distance(v) <= tol * scale

    def contains_subspace(self, other: "Subspace", tol: float = 1e-9) -> bool:
        return other.dim == 0 or self.contains(other.basis, tol)

    def same_as(self, other: "Subspace", tol: float = 1e-9) -> bool:
        return self.dim == other.dim and self.contains_subspace(other, tol)

    def __add__(self, other: "Subspace") -> "Subspace":
        return Subspace.span(np.hstack([self.basis, other.basis]), dim=self.ambient_dim)

    def complement(self) -> "Subspace":
        """Orthogonal complement in the ambient space."""
        return Subspace.span(null_space(self.basis.T) if self.dim else np.eye(self.ambient_dim))

    def to_list(self) -> list[list[float]]:
        return self.basis.T.tolist()


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """Real Lie algebra with structure tensor ``c[i, j, k]``.

    Antisymmetry is imposed structurally: only the entries with ``i < j`` are
    read from ``structure`` and the rest is filled in by ``c[j, i] = -c[i, j]``.
    The Jacobi identity is *not* checked here; see :func:`validate_jacobi`.
    """

    structure: np.ndarray
    basis_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        c = np.array(self.structure, dtype=float)
        if c.ndim != 3 or not (c.shape[0] == c.shape[1] == c.shape[2]) or c.shape[0] < 1:
            raise InvalidInput(f"structure tensor must have shape (d, d, d), got {c.shape}")
        d = c.shape[0]
        iu = np.triu(np.ones((d, d), dtype=bool), k=1)
        upper = np.where(iu[:, :, None], c, 0.0)
        c = upper - upper.transpose(1, 0, 2)
        c.setflags(write=False)
        object.__setattr__(self, "structure", c)
        names = tuple(self.basis_names) or tuple(f"e{i + 1}" for i in range(d))
        if len(names) != d:
            raise InvalidInput(f"expected {d} basis names, got {len(names)}")
        object.__setattr__(self, "basis_names", names)

    @property
    def dim(self) -> int:
        return self.structure.shape[0]

    @classmethod
    def abelian(cls, dim: int, basis_names: Sequence[str] = ()) -> "LieAlgebra":
        return cls(np.zeros((dim, dim, dim)), tuple(basis_names))

    @classmethod
    def from_brackets(cls, basis_names: Sequence[str], brackets: dict) -> "LieAlgebra":
        """Build from a table ``{(i, j): {k: value}}`` of nonzero brackets, ``i < j``."""
        d = len(basis_names)
        c = np.zeros((d, d, d))
        for (i, j), out in brackets.items():
            if not i < j:
                raise InvalidInput(f"bracket key ({i}, {j}) must satisfy i < j")
            for k, val in out.items():
                c[i, j, k] = val
        return cls(c, tuple(basis_names))

    @classmethod
    def from_matrices(cls, matrices: Sequence[np.ndarray], basis_names: Sequence[str] = ()) -> "LieAlgebra":
        """Structure constants of the matrix Lie algebra spanned by ``matrices``."""
        mats = np.asarray(matrices, dtype=float)
        k = mats.shape[0]
        flat = mats.reshape(k, -1).T
        c = np.zeros((k, k, k))
        for i in range(k):
            for j in range(i + 1, k):
                comm = mats[i] @ mats[j] - mats[j] @ mats[i]
                coef, *_ = np.linalg.lstsq(flat, comm.ravel(), rcond=None)
                if np.linalg.norm(flat @ coef - comm.ravel()) > 1e-10:
                    raise InvalidInput("matrices do not span a Lie algebra (bracket not closed)")
                c[i, j] = coef
        # least-squares noise on integer constants
        near = np.abs(c - np.round(c)) < 1e-12
        c[near] = np.round(c[near])
        return cls(c, tuple(basis_names))

    def basis_vector(self, i: int) -> np.ndarray:
        v = np.zeros(self.dim)
        v[i] = 1.0
        return v

    def check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise InvalidInput(f"vector of shape {x.shape} does not belong to a {self.dim}-dim algebra")
        return x

    def entries(self) -> list[list]:
        """Sparse canonical form ``[i, j, k, value]`` with ``i < j``, sorted."""
        d = self.dim
        out = []
        for i in range(d):
            for j in range(i + 1, d):
                for k in range(d):
                    val = float(self.structure[i, j, k])
                    if val != 0.0:
                        out.append([i, j, k, val])
        return out


# ---------------------------------------------------------------------------
# brackets and derivations


def bracket(a: LieAlgebra, x, y) -> np.ndarray:
    x = a.check_vector(x)
    y = a.check_vector(y)
    return np.einsum("i,j,ijk->k", x, y, a.structure)


def _bracket_cols(c: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """All brackets of columns of ``u`` with columns of ``v``, as columns."""
    if u.shape[1] == 0 or v.shape[1] == 0:
        return np.zeros((c.shape[0], 0), dtype=np.result_type(u, v))
    out = np.einsum("ia,jb,ijk->kab", u, v, c)
    return out.reshape(c.shape[0], -1)


def ad(a: LieAlgebra, y) -> np.ndarray:
    """Matrix of ``x -> [y, x]``; column ``j`` is ``[y, e_j]``."""
    y = a.check_vector(y)
    return np.einsum("i,ijk->kj", y, a.structure)


def ad_matrices(a: LieAlgebra) -> np.ndarray:
    """Stack of ``ad(e_i)`` for every basis vector."""
    return np.einsum("ijk->ikj", a.structure)


@dataclass(frozen=True)
class ResidualReport:
    residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance


def jacobi_residuals(a: LieAlgebra) -> np.ndarray:
    """``J[i, j, l, :] = [e_i,[e_j,e_l]] + [e_j,[e_l,e_i]] + [e_l,[e_i,e_j]]``."""
    c = a.structure
    t = np.einsum("jlp,ipm->ijlm", c, c)
    return t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3)


def validate_jacobi(a: LieAlgebra, tol: float = TOL_ALG) -> ResidualReport:
    res = float(np.max(np.abs(jacobi_residuals(a)), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(a.structure), initial=0.0))) ** 2
    return ResidualReport(res, tol * scale)


def leibniz_residuals(a: LieAlgebra, m: np.ndarray) -> np.ndarray:
    """``R[i, j] = D[e_i,e_j] - [De_i, e_j] - [e_i, De_j]``."""
    c = a.structure
    lhs = np.einsum("ijk,lk->ijl", c, m)
    t1 = np.einsum("pi,pjl->ijl", m, c)
    t2 = np.einsum("pj,ipl->ijl", m, c)
    return lhs - t1 - t2


def validate_derivation(a: LieAlgebra, m, tol: float = TOL_ALG) -> tuple[bool, float]:
    """Check the Leibniz rule on all basis pairs.

    The tolerance is scaled by ``max|c| * max|m|`` when that exceeds one so
    that large-valued inputs are not rejected for rounding alone.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (a.dim, a.dim):
        raise InvalidInput(f"derivation must be {a.dim}x{a.dim}, got {m.shape}")
    res = float(np.max(np.abs(leibniz_residuals(a, m)), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(a.structure), initial=0.0)) * float(np.max(np.abs(m), initial=0.0)))
    return res <= tol * scale, res


def killing_form(a: LieAlgebra) -> np.ndarray:
    c = a.structure
    k = np.einsum("ipq,jqp->ij", c, c)
    return 0.5 * (k + k.T)


# ---------------------------------------------------------------------------
# structural series


def _as_basis(a: LieAlgebra, sub: Subspace | None) -> np.ndarray:
    return np.eye(a.dim) if sub is None else sub.basis


def bracket_floor(a: LieAlgebra) -> float:
    """Absolute size below which a bracket of unit vectors is treated as rounding noise."""
    return TOL_RANK * float(np.max(np.abs(a.structure), initial=0.0))


def bracket_span(a: LieAlgebra, u: Subspace, v: Subspace) -> Subspace:
    return Subspace.span(_bracket_cols(a.structure, u.basis, v.basis), dim=a.dim, floor=bracket_floor(a))


def derived_series(a: LieAlgebra, sub: Subspace | None = None) -> list[Subspace]:
    """``g, [g,g], [[g,g],[g,g]], ...`` until the dimension stops dropping."""
    cur = Subspace.span(_as_basis(a, sub), dim=a.dim)
    series = [cur]
    while cur.dim > 0:
        nxt = bracket_span(a, cur, cur)
        if nxt.dim == cur.dim:
            break
        series.append(nxt)
        cur = nxt
    return series


def lower_central_series(a: LieAlgebra, sub: Subspace | None = None) -> list[Subspace]:
    """``g, [g,g], [g,[g,g]], ...`` until the dimension stops dropping."""
    top = Subspace.span(_as_basis(a, sub), dim=a.dim)
    cur = top
    series = [cur]
    while cur.dim > 0:
        nxt = bracket_span(a, top, cur)
        if nxt.dim == cur.dim:
            break
        series.append(nxt)
        cur = nxt
    return series


def is_solvable(a: LieAlgebra, sub: Subspace | None = None) -> bool:
    return derived_series(a, sub)[-1].dim == 0


def is_nilpotent(a: LieAlgebra, sub: Subspace | None = None) -> bool:
    return lower_central_series(a, sub)[-1].dim == 0


def is_subalgebra(a: LieAlgebra, sub: Subspace, tol: float = 1e-9) -> bool:
    return sub.contains(_bracket_cols(a.structure, sub.basis, sub.basis), tol)


def is_ideal(a: LieAlgebra, sub: Subspace, tol: float = 1e-9) -> bool:
    return sub.contains(_bracket_cols(a.structure, np.eye(a.dim), sub.basis), tol)


def span_closure(a: LieAlgebra, gens: Iterable) -> Subspace:
    """Smallest subalgebra containing ``gens``."""
    g = np.asarray(list(gens), dtype=float)
    if g.size == 0:
        raise InvalidInput("span_closure needs at least one generator")
    cur = Subspace.span(g.T, dim=a.dim)
    while True:
        nxt = cur + bracket_span(a, cur, cur)
        if nxt.dim == cur.dim:
            return cur
        cur = nxt


def radical(a: LieAlgebra) -> Subspace:
    """Solvable radical, computed as the Killing-orthogonal of ``[g, g]``."""
    k = killing_form(a)
    derived = bracket_span(a, Subspace.whole(a.dim), Subspace.whole(a.dim))
    if derived.dim == 0:
        rad = Subspace.whole(a.dim)
    else:
        m = derived.basis.T @ k
        scale = max(1.0, float(np.max(np.abs(k), initial=0.0)))
        m = np.where(np.abs(m) < 1e-12 * scale, 0.0, m)
        rad = Subspace.span(null_space(m) if np.any(m) else np.eye(a.dim), dim=a.dim)
    if rad.dim and not (is_ideal(a, rad) and is_solvable(a, rad)):
        raise ValidationFailed(
            "computed radical is not a solvable ideal (numerically degenerate algebra)",
            {"radical_dim": rad.dim},
        )
    return rad


def subalgebra(a: LieAlgebra, sub: Subspace) -> LieAlgebra:
    """Structure constants of ``sub`` in its orthonormal basis."""
    if not is_subalgebra(a, sub):
        raise InvalidInput("subspace is not closed under the bracket")
    q = sub.basis
    br = np.einsum("ia,jb,ijk->abk", q, q, a.structure)
    return LieAlgebra(br @ q, ())


def quotient(a: LieAlgebra, ideal: Subspace) -> tuple[LieAlgebra, np.ndarray]:
    """Quotient algebra ``a / ideal`` on the orthogonal complement of ``ideal``.

    Returns the quotient algebra and the complement basis (columns) that
    represents it inside ``a``.
    """
    comp = ideal.complement()
    q = comp.basis
    full = np.hstack([q, ideal.basis])
    br = np.einsum("ia,jb,ijk->kab", q, q, a.structure).reshape(a.dim, -1)
    coords = np.linalg.solve(full, br)[: q.shape[1]]
    k = q.shape[1]
    c = coords.reshape(k, k, k).transpose(1, 2, 0)
    return LieAlgebra(c, ()), q


def killing_signature(k: np.ndarray, tol: float = 1e-8) -> tuple[int, int, int]:
    """``(n_positive, n_negative, n_zero)`` eigenvalue counts, relative tolerance."""
    if k.size == 0:
        return (0, 0, 0)
    w = np.linalg.eigvalsh(k)
    scale = max(float(np.max(np.abs(w))), 1e-300)
    pos = int(np.sum(w > tol * scale))
    neg = int(np.sum(w < -tol * scale))
    return pos, neg, len(w) - pos - neg
