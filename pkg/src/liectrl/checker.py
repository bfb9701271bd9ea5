"""Sufficient controllability test for linear systems on Lie groups.

The verdict combines three hypotheses:

* local controllability from the identity, certified by the ad-rank condition
  (rank of ``{D^k b_j}`` equals the dimension);
* every eigenvalue of the derivation has zero real part;
* the group has finite semisimple center, certified for solvable algebras and
  for algebras whose semisimple quotient is of compact type, and otherwise
  taken from user declarations.

The test is sufficient only.  A failed hypothesis never yields a
"not controllable" conclusion.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .algebra import (
    TOL_RANK,
    Subspace,
    is_solvable,
    killing_form,
    killing_signature,
    orth,
    quotient,
    radical,
    subalgebra,
)
from .decomposition import TOL_SPEC, DDecomposition, Spectrum, d_decomposition
from .errors import InvalidInput, ValidationFailed
from .system import ControlRange, ControlSystem, FiniteCenterDeclaration, GroupMeta

__all__ = [
    "ControlRange",
    "ControlSystem",
    "FiniteCenterDeclaration",
    "GroupMeta",
    "AdRankResult",
    "FscCertificate",
    "Verdict",
    "G0Report",
    "ad_rank",
    "kalman_rank",
    "controllability_matrix",
    "fsc_certificate",
    "controllability_verdict",
    "verdicts",
    "g0_structure_report",
]

CONTROLLABLE = "Controllable"
FAILS = "SufficientConditionFails"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True, eq=False)
class AdRankResult:
    holds: bool
    dimension: int
    spanning_set: np.ndarray  # columns D^k b_j, ordered by j then k

    def to_json(self) -> dict:
        return {"holds": self.holds, "dimension": self.dimension}


def controllability_matrix(a, b) -> np.ndarray:
    """``[B, AB, ..., A^(d-1) B]``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if b.ndim == 1:
        b = b[:, None]
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape[0] != a.shape[0]:
        raise InvalidInput(f"incompatible shapes A{a.shape}, B{b.shape}")
    blocks = [b]
    for _ in range(a.shape[0] - 1):
        blocks.append(a @ blocks[-1])
    return np.hstack(blocks)


def kalman_rank(a, b, tol: float = TOL_RANK) -> bool:
    a = np.asarray(a, dtype=float)
    return orth(controllability_matrix(a, b), tol).shape[1] == a.shape[0]


def ad_rank(sys: ControlSystem, tol: float = TOL_RANK) -> AdRankResult:
    """Rank of ``{D^k b_j : 0 <= k < dim}``.

    On identity values ``ad^k(X^j)`` equals ``(-D)^k b_j``, whose span is the
    same as the span of the ``D^k b_j``.
    """
    d = sys.derivation
    cols = []
    for b in sys.control_fields:
        v = b.copy()
        for _ in range(sys.dim):
            cols.append(v)
            v = d @ v
    span = np.array(cols).T
    r = orth(span, tol).shape[1]
    return AdRankResult(r == sys.dim, r, span)


@dataclass(frozen=True)
class FscCertificate:
    status: str  # "certified" | "declared" | "unknown"
    reason: str = ""
    holds: bool | None = None

    def to_json(self) -> dict:
        return {"status": self.status, "reason": self.reason, "holds": self.holds}


def _semisimple_quotient_killing(sys: ControlSystem):
    a = sys.algebra
    rad = radical(a)
    if rad.dim == a.dim:
        return rad, np.zeros((0, 0))
    q, _ = quotient(a, rad)
    return rad, killing_form(q)


def fsc_certificate(sys: ControlSystem) -> FscCertificate:
    if is_solvable(sys.algebra):
        return FscCertificate("certified", "solvable", True)
    _, kq = _semisimple_quotient_killing(sys)
    pos, neg, zero = killing_signature(kq)
    if neg == kq.shape[0] and kq.shape[0] > 0:
        return FscCertificate("certified", "compact-type semisimple factors", True)
    decl = sys.group_meta.finite_center_declarations
    if decl:
        holds = all(d.finite_center for d in decl)
        names = ", ".join(f"{d.factor}: {'finite' if d.finite_center else 'infinite'}" for d in decl)
        return FscCertificate("declared", names, holds)
    return FscCertificate("unknown", "semisimple quotient is not of compact type and no declaration given", None)


@dataclass(frozen=True, eq=False)
class Verdict:
    ad_rank: AdRankResult
    spectrum: Spectrum
    spectrum_zero_real_part: bool
    offending_eigenvalues: tuple[complex, ...]
    fsc: FscCertificate
    conclusion: str
    failed: tuple[str, ...]
    missing: tuple[str, ...]
    guaranteed_reachable: Subspace
    guaranteed_co_reachable: Subspace
    decomposition: DDecomposition
    notes: tuple[str, ...] = field(default=())

    @property
    def controllable(self) -> bool:
        return self.conclusion == CONTROLLABLE

    @property
    def exit_code(self) -> int:
        return {CONTROLLABLE: 0, FAILS: 2, INCONCLUSIVE: 3}[self.conclusion]

    def to_json(self) -> dict:
        ar = self.ad_rank
        return {
            "conclusion": self.conclusion,
            "failed_hypotheses": list(self.failed),
            "missing_certificates": list(self.missing),
            "ad_rank": {
                "status": "holds" if ar.holds else "not_certified",
                "dimension": ar.dimension,
            },
            "spectrum": self.spectrum.to_list(),
            "spectrum_class": {
                "criterion": "zero real part",
                "all_zero_real_part": self.spectrum_zero_real_part,
                "offending": [{"re": z.real, "im": z.imag} for z in self.offending_eigenvalues],
            },
            "fsc": self.fsc.to_json(),
            "guaranteed_reachable": {
                "dim": self.guaranteed_reachable.dim,
                "basis": self.guaranteed_reachable.to_list(),
                "contingent_on": ["ad_rank", "fsc"],
            },
            "guaranteed_co_reachable": {
                "dim": self.guaranteed_co_reachable.dim,
                "basis": self.guaranteed_co_reachable.to_list(),
                "contingent_on": ["ad_rank", "fsc"],
            },
            "notes": list(self.notes),
        }


def controllability_verdict(sys: ControlSystem, tol_spec: float = TOL_SPEC, tol_rank: float = TOL_RANK) -> Verdict:
    ar = ad_rank(sys, tol_rank)
    dec = d_decomposition(sys.derivation, tol_spec)
    spec = dec.spectrum
    offending = tuple(spec.offending())
    fsc = fsc_certificate(sys)

    failed, missing = [], []
    if not ar.holds:
        failed.append("ad_rank")
    if offending:
        failed.append("spectrum")
    if fsc.status == "unknown":
        missing.append("fsc")
    elif fsc.holds is False:
        failed.append("fsc")

    if failed:
        conclusion = FAILS
    elif missing:
        conclusion = INCONCLUSIVE
    else:
        conclusion = CONTROLLABLE

    notes = [
        "local controllability from the identity is certified through the ad-rank condition; "
        "the interior hypothesis itself is not decided",
    ]
    if not ar.holds:
        notes.append(
            f"ad-rank reaches dimension {ar.dimension} < {sys.dim}: hypothesis not certified (not shown false)"
        )
    if sys.control_range.restricted:
        notes.append("restricted range: identity in the interior of A_tau is equivalent to A being open")
    if conclusion == FAILS:
        notes.append("the sufficient condition fails; this is not a proof of non-controllability")

    return Verdict(
        ad_rank=ar,
        spectrum=spec,
        spectrum_zero_real_part=not offending,
        offending_eigenvalues=offending,
        fsc=fsc,
        conclusion=conclusion,
        failed=tuple(failed),
        missing=tuple(missing),
        guaranteed_reachable=dec.g_plus_zero,
        guaranteed_co_reachable=dec.g_minus_zero,
        decomposition=dec,
        notes=tuple(notes),
    )


def verdicts(systems, workers: int = 1, **kw) -> list[Verdict]:
    """Verdicts for many systems; results are returned in input order."""
    if workers <= 1:
        return [controllability_verdict(s, **kw) for s in systems]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda s: controllability_verdict(s, **kw), systems))


@dataclass(frozen=True, eq=False)
class G0Report:
    g_kernel: Subspace
    radical: Subspace  # inside the algebra, as a subspace of g_kernel
    quotient_dim: int
    killing_signature: tuple[int, int, int]
    classification: str  # "trivial" | "compact" | "noncompact"
    derivation_into_radical: float | None

    def to_json(self) -> dict:
        return {
            "g_kernel_dim": self.g_kernel.dim,
            "radical_dim": self.radical.dim,
            "quotient_dim": self.quotient_dim,
            "killing_signature": list(self.killing_signature),
            "classification": self.classification,
            "derivation_into_radical_residual": self.derivation_into_radical,
        }


def g0_structure_report(sys: ControlSystem, tol_spec: float = TOL_SPEC) -> G0Report:
    """Radical and semisimple quotient of the generalized kernel of the derivation."""
    dec = d_decomposition(sys.derivation, tol_spec)
    g0 = dec.g_kernel
    n = sys.dim
    if g0.dim == 0:
        return G0Report(g0, Subspace.zero(n), 0, (0, 0, 0), "trivial", None)
    sub = subalgebra(sys.algebra, g0)
    rad_local = radical(sub)
    rad = Subspace.span(g0.basis @ rad_local.basis, dim=n)
    ldim = g0.dim - rad.dim
    if ldim == 0:
        return G0Report(g0, rad, 0, (0, 0, 0), "trivial", None)
    q, _ = quotient(sub, rad_local)
    sig = killing_signature(killing_form(q))
    compact = sig[1] == ldim
    residual = None
    if compact:
        image = sys.derivation @ g0.basis
        residual = rad.distance(image) if rad.dim else float(np.max(np.linalg.norm(image, axis=0)))
        if residual > 1e-9:
            raise ValidationFailed(
                "compact-type quotient but D(g_0) is not contained in the radical",
                {"derivation_into_radical": residual},
            )
    return G0Report(g0, rad, ldim, sig, "compact" if compact else "noncompact", residual)
