"""Monte-Carlo exploration of reachable sets from the identity.

Interior certification here is empirical evidence only: a cloud of sampled
endpoints is pulled back to algebra coordinates with the principal logarithm
and the origin is tested for strict membership in the convex hull.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
import scipy.spatial

from . import kernels
from .errors import BudgetExhausted, InsufficientSamples, InvalidInput, StepRejected
from .simulator import (
    DEFAULT_DT,
    ControlSignal,
    GroupElement,
    GroupRealization,
    linear_flow,
    solve,
    step_schedule,
)
from .system import ControlSystem

HULL_DIM_RATIO = 1e-6
CONNECT_TOL = 1e-3


@dataclass(frozen=True, eq=False)
class EndpointCloud:
    tau: float
    points: np.ndarray  # (N, size, size) block matrices
    seed: int
    log_chart: np.ndarray  # (n_valid, dim)
    valid: np.ndarray  # bool mask over points
    box: np.ndarray
    pieces: int
    realization: GroupRealization = field(repr=False)
    signals: tuple = field(default=(), repr=False)

    @property
    def dropped(self) -> int:
        return int(np.sum(~self.valid))

    def __len__(self):
        return self.points.shape[0]

    def element(self, i: int) -> GroupElement:
        return GroupElement(self.points[i], self.realization)

    def records(self):
        r = self.realization
        for i in range(len(self)):
            rec = {"index": i, "tau": self.tau, "state": r.flat(self.element(i)).tolist()}
            rec["log_chart"] = None
            if self.valid[i]:
                rec["log_chart"] = self.log_chart[int(np.sum(self.valid[:i]))].tolist()
            yield rec


def random_signals(rng: np.random.Generator, n: int, tau: float, pieces: int, box: np.ndarray):
    """Durations uniform on the simplex scaled to ``tau``, values uniform in ``box``."""
    durations = rng.dirichlet(np.ones(pieces), size=n) * tau
    lo, hi = box[:, 0], box[:, 1]
    values = lo + (hi - lo) * rng.random((n, pieces, box.shape[0]))
    return durations, values


def _schedules(durations: np.ndarray, values: np.ndarray, dt: float):
    """Pad per-trajectory step schedules to a common length (zero-size steps are skipped)."""
    rows = [step_schedule(ControlSignal(d[d > 0], v[d > 0]), dt) for d, v in zip(durations, values)]
    width = max(len(h) for h, _ in rows)
    m = values.shape[2]
    hs = np.zeros((len(rows), width))
    us = np.zeros((len(rows), width, m))
    for i, (h, u) in enumerate(rows):
        hs[i, :len(h)] = h
        us[i, :len(h)] = u
    return hs, us


def propagate_batch(r: GroupRealization, sys: ControlSystem, g0: GroupElement, durations, values,
                    dt: float = DEFAULT_DT) -> np.ndarray:
    """RK4 endpoints for a batch of piecewise-constant controls, all started at ``g0``."""
    r = r.for_system(sys)
    hs, us = _schedules(np.asarray(durations, float), np.asarray(values, float), dt)
    g0s = np.repeat(g0.matrix[None], hs.shape[0], axis=0)
    out, status = kernels.rk4_batch(g0s, r.y0, r.control_matrices(sys), hs, us, r.starts, r.sizes, r.flags)
    if np.any(status != 0):
        raise StepRejected(f"{int(np.sum(status != 0))} trajectories drifted off the group; reduce dt")
    return out


def _chart(r: GroupRealization, points: np.ndarray):
    coords, valid = [], np.zeros(points.shape[0], dtype=bool)
    for i, p in enumerate(points):
        c = r.log_coords(GroupElement(p, r))
        if c is not None:
            coords.append(c)
            valid[i] = True
    chart = np.array(coords) if coords else np.zeros((0, r.algebra.dim))
    return chart, valid


def sample_reachable(
    sys: ControlSystem,
    r: GroupRealization,
    tau: float,
    n: int,
    seed: int = 0,
    pieces: int = 8,
    dt: float = DEFAULT_DT,
    box: np.ndarray | None = None,
    zero_control: bool = False,
) -> EndpointCloud:
    """Endpoints of ``n`` random piecewise-constant controls of total duration ``tau`` from the identity."""
    if tau <= 0 or n < 1 or pieces < 1:
        raise InvalidInput("need tau > 0, n >= 1 and pieces >= 1")
    r = r.for_system(sys)
    box = sys.box() if box is None else np.asarray(box, dtype=float)
    rng = np.random.default_rng(seed)
    durations, values = random_signals(rng, n, tau, pieces, box)
    if zero_control:
        values[:] = 0.0
    points = propagate_batch(r, sys, r.identity(), durations, values, dt)
    chart, valid = _chart(r, points)
    return EndpointCloud(tau, points, seed, chart, valid, box, pieces, r, (durations, values))


@dataclass(frozen=True)
class AccessibilityResult:
    passed: bool
    dimension: int
    margin: float
    interior_weight: float
    n_points: int
    dropped: int

    def to_json(self) -> dict:
        return {
            "result": "pass" if self.passed else "fail",
            "dimension": self.dimension,
            "margin": self.margin,
            "interior_weight": self.interior_weight,
            "n_points": self.n_points,
            "dropped": self.dropped,
            "margin_definition": "distance from the origin to the nearest facet of the hull of the log-chart points",
        }


def affine_dimension(points: np.ndarray, ratio: float = HULL_DIM_RATIO) -> int:
    if points.shape[0] < 2:
        return 0
    centered = points - points.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > ratio * s[0]))


def origin_interior_weight(points: np.ndarray) -> float:
    """Largest ``s`` with ``0 = sum l_i p_i``, ``sum l_i = 1``, ``l_i >= s``; negative if infeasible."""
    k, d = points.shape
    # variables: l_1..l_k, s ; maximise s
    c = np.zeros(k + 1)
    c[-1] = -1.0
    a_eq = np.zeros((d + 1, k + 1))
    a_eq[:d, :k] = points.T
    a_eq[d, :k] = 1.0
    b_eq = np.zeros(d + 1)
    b_eq[d] = 1.0
    a_ub = np.hstack([-np.eye(k), np.ones((k, 1))])
    b_ub = np.zeros(k)
    bounds = [(None, None)] * k + [(None, 1.0)]
    res = scipy.optimize.linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        return -1.0
    return float(res.x[-1])


def local_accessibility_test(cloud: EndpointCloud) -> AccessibilityResult:
    pts = cloud.log_chart
    if pts.shape[0] == 0:
        raise InsufficientSamples("no endpoint has a usable logarithm")
    dim = cloud.realization.algebra.dim
    adim = affine_dimension(pts)
    if adim < dim:
        return AccessibilityResult(False, adim, 0.0, 0.0, pts.shape[0], cloud.dropped)
    weight = origin_interior_weight(pts)
    margin = 0.0
    if weight > 1e-12:
        hull = scipy.spatial.ConvexHull(pts)
        margin = float(np.min(-hull.equations[:, -1]))
    passed = weight > 1e-12 and margin > 0.0
    return AccessibilityResult(passed, adim, margin, weight, pts.shape[0], cloud.dropped)


@dataclass(frozen=True)
class CompositionReport:
    max_mismatch: float
    tolerance: float
    pairs: int
    monotonicity_mismatch: float

    @property
    def passed(self) -> bool:
        return self.max_mismatch <= self.tolerance and self.monotonicity_mismatch <= self.tolerance

    def to_json(self) -> dict:
        return {
            "max_mismatch": self.max_mismatch,
            "monotonicity_mismatch": self.monotonicity_mismatch,
            "pairs": self.pairs,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def composition_check(
    sys: ControlSystem,
    r: GroupRealization,
    tau1: float,
    tau2: float,
    n: int,
    seed: int = 0,
    pieces: int = 4,
    dt: float = DEFAULT_DT,
    tol: float = 1e-6,
) -> CompositionReport:
    """Check ``x . phi_tau1(y)`` against the endpoint of ``u2`` followed by ``u1``.

    Here ``x`` is reached with ``u1`` in time ``tau1`` and ``y`` with ``u2`` in
    time ``tau2``.  Also checks that prepending a zero control of length
    ``tau2 - tau1`` does not move an endpoint of ``A_tau1`` (inclusion
    ``A_tau1 in A_tau2``) when ``tau1 <= tau2``.
    """
    if tau1 <= 0 or tau2 <= 0:
        raise InvalidInput("durations must be positive")
    r = r.for_system(sys)
    box = sys.box()
    rng = np.random.default_rng(seed)
    d1, v1 = random_signals(rng, n, tau1, pieces, box)
    d2, v2 = random_signals(rng, n, tau2, pieces, box)
    e = r.identity()
    xs = propagate_batch(r, sys, e, d1, v1, dt)
    ys = propagate_batch(r, sys, e, d2, v2, dt)
    zs = propagate_batch(r, sys, e, np.hstack([d2, d1]), np.concatenate([v2, v1], axis=1), dt)
    worst = 0.0
    for x, y, z in zip(xs, ys, zs):
        pred = GroupElement(x, r) @ linear_flow(r, tau1, GroupElement(y, r))
        worst = max(worst, r.distance(pred, GroupElement(z, r)))
    mono = 0.0
    if tau2 > tau1:
        pad = np.full((n, 1), tau2 - tau1)
        ws = propagate_batch(
            r, sys, e, np.hstack([pad, d1]), np.concatenate([np.zeros((n, 1, box.shape[0])), v1], axis=1), dt
        )
        mono = max(r.distance(GroupElement(w, r), GroupElement(x, r)) for w, x in zip(ws, xs))
    return CompositionReport(worst, tol, n, mono)


# ---------------------------------------------------------------------------
# point-to-point probes


@dataclass(frozen=True, eq=False)
class ConnectResult:
    found: bool
    residual: float
    signal: ControlSignal | None
    evaluations: int

    def to_json(self) -> dict:
        return {
            "result": "found" if self.found else "best",
            "residual": self.residual,
            "evaluations": self.evaluations,
            "signal": None if self.signal is None else self.signal.to_json(),
            "duration": None if self.signal is None else self.signal.duration,
        }


class _Objective:
    def __init__(self, sys, r, g, h, pieces, budget):
        self.sys, self.r, self.g, self.h = sys, r, g, h
        self.pieces = pieces
        self.m = sys.n_controls
        self.budget = budget
        self.evaluations = 0
        self.bs = r.control_matrices(sys)
        self.mask = np.zeros((r.size, r.size), dtype=bool)
        for s, n in zip(r.starts, r.sizes):
            self.mask[s:s + n, s:s + n] = True

    def unpack(self, x):
        x = np.atleast_2d(x)
        return x[:, :self.pieces], x[:, self.pieces:].reshape(-1, self.pieces, self.m)

    def endpoints(self, x):
        d, v = self.unpack(x)
        self.evaluations += d.shape[0]
        return kernels.exact_batch(self.g.matrix, self.r.y0, self.bs, d, v)

    def distances(self, x):
        ends = self.endpoints(x)
        return np.array([self.r.distance(GroupElement(e, self.r), self.h) for e in ends])

    def residual_vector(self, x):
        e = self.endpoints(x)[0]
        return (e - self.h.matrix)[self.mask]


def connect(
    sys: ControlSystem,
    r: GroupRealization,
    g: GroupElement,
    h: GroupElement,
    budget: int = 100_000,
    seed: int = 0,
    pieces: int = 8,
    max_piece: float = 2.0,
    dt: float = DEFAULT_DT,
    tol: float = CONNECT_TOL,
    population: int = 200,
    elite: int = 20,
) -> ConnectResult:
    """Search a piecewise-constant control steering ``g`` to ``h``.

    Cross-entropy rounds (Gaussian re-sampling of durations and values around
    the elite set) alternate with bounded least-squares polishing of the best
    candidate.  Candidates are scored with closed-form piece exponentials; the
    reported residual is recomputed with the RK4 solver.  Raises
    :class:`BudgetExhausted`, carrying the best result, when the budget runs out.
    """
    r = r.for_system(sys)
    box = sys.box()
    m = sys.n_controls
    rng = np.random.default_rng(seed)
    obj = _Objective(sys, r, g, h, pieces, budget)
    lo = np.concatenate([np.zeros(pieces), np.tile(box[:, 0], pieces)])
    hi = np.concatenate([np.full(pieces, max_piece), np.tile(box[:, 1], pieces)])

    def verify(x):
        d, v = obj.unpack(x)
        keep = d[0] > 0
        if not np.any(keep):
            return r.distance(g, h), None
        sig = ControlSignal(d[0][keep], v[0][keep])
        end = solve(r, sys, g, sig, dt=dt, stride=10 ** 9).final
        return r.distance(end, h), sig

    # zero control held for one piece: g is returned unchanged when it is a fixed point of the drift
    x0 = np.concatenate([np.full(pieces, max_piece / 2), np.zeros(pieces * m)])
    best_x = x0
    best_f = float(obj.distances(x0)[0])
    if best_f <= tol / 10:
        res, sig = verify(x0)
        if res <= tol:
            return ConnectResult(True, res, sig, obj.evaluations)

    mean = (lo + hi) / 2
    std = (hi - lo) / 2
    stall = 0
    while obj.evaluations + population <= budget:
        xs = np.clip(mean + std * rng.standard_normal((population, lo.size)), lo, hi)
        fs = obj.distances(xs)
        order = np.argsort(fs)
        el = xs[order[:elite]]
        mean = 0.3 * mean + 0.7 * el.mean(axis=0)
        std = 0.3 * std + 0.7 * el.std(axis=0)
        if fs[order[0]] < best_f - 1e-12:
            best_f, best_x = float(fs[order[0]]), xs[order[0]]
            stall = 0
        else:
            stall += 1
        converged = np.max(std / (hi - lo)) < 1e-3
        if best_f < 0.2 or converged or stall >= 5:
            remaining = budget - obj.evaluations
            if remaining > lo.size + 2:
                sol = scipy.optimize.least_squares(
                    obj.residual_vector, np.clip(best_x, lo, hi), bounds=(lo, hi),
                    max_nfev=max(1, min(200, remaining // (lo.size + 1))), xtol=1e-14, ftol=1e-14, gtol=1e-14,
                )
                f = float(obj.distances(sol.x)[0])
                if f < best_f:
                    best_f, best_x = f, sol.x
            if best_f <= tol / 10:
                res, sig = verify(best_x)
                if res <= tol:
                    return ConnectResult(True, res, sig, obj.evaluations)
            if converged or stall >= 5:
                # restart around a fresh random point, keeping the incumbent
                mean = lo + (hi - lo) * rng.random(lo.size)
                std = (hi - lo) / 2
                stall = 0
    res, sig = verify(best_x)
    result = ConnectResult(res <= tol, res, sig, obj.evaluations)
    if result.found:
        return result
    raise BudgetExhausted(f"no connection within {budget} trajectories (best residual {res:.3g})", result)
