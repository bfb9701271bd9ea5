"""Hot numeric kernels: matrix exponential and batched RK4 propagation.

Group elements are block-diagonal ``N x N`` matrices (translation factors in
affine form).  Every supported linear system then obeys a single ODE,

    g' = (Y0 + sum_j u_j B_j) g - g Y0,

whose drift term ``Y0 g - g Y0`` is the linear vector field and whose
``B_j g`` terms are the right-invariant control fields.  All kernels work one
diagonal block at a time.

Each kernel has an ``_nb`` variant (explicit loops, compiled with numba) and an
``_np`` variant (vectorised numpy).  The public names dispatch on
:data:`liectrl._accel.USE_NUMBA`.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

UNIT_DET = 1
ORTHOGONAL = 2
AFFINE = 4

RENORM_TOL = 1e-10
REJECT_TOL = 1e-6

STATUS_OK = 0
STATUS_REJECTED = 1
STATUS_BAD_DET = 2

_PADE13 = np.array(
    [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ]
)
_THETA13 = 5.371920351148152


# ---------------------------------------------------------------------------
# matrix exponential (scaling and squaring with the degree-13 Pade approximant)


def _expm_py(a):
    n = a.shape[0]
    b = _PADE13
    norm1 = 0.0
    for j in range(n):
        col = 0.0
        for i in range(n):
            col += abs(a[i, j])
        if col > norm1:
            norm1 = col
    s = 0
    if norm1 > _THETA13:
        s = int(np.ceil(np.log2(norm1 / _THETA13)))
    x = np.ascontiguousarray(a) / (2.0 ** s)
    ident = np.eye(n)
    x2 = x @ x
    x4 = x2 @ x2
    x6 = x4 @ x2
    u_in = x6 @ (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * ident
    u = x @ u_in
    v = x6 @ (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * ident
    r = np.ascontiguousarray(np.linalg.solve(v - u, v + u))
    for _ in range(s):
        r = r @ r
    return r


_expm_nb = njit(_expm_py)


def expm(a, use_numba=None):
    """Matrix exponential of a real square matrix (degree-13 Pade, scaling and squaring)."""
    use_numba = USE_NUMBA if use_numba is None else use_numba
    a = np.ascontiguousarray(a, dtype=float)
    return _expm_nb(a) if use_numba else _expm_py(a)


# ---------------------------------------------------------------------------
# numba RK4


@njit(inline="always")
def _field(m, y0, g, out, starts, sizes):
    # out = m g - g y0 on the diagonal blocks; off-block entries of out are never touched
    for k in range(starts.shape[0]):
        s = starts[k]
        e = s + sizes[k]
        for i in range(s, e):
            for j in range(s, e):
                acc = 0.0
                for p in range(s, e):
                    acc += m[i, p] * g[p, j] - g[i, p] * y0[p, j]
                out[i, j] = acc


@njit(inline="always")
def _det_small(blk):
    n = blk.shape[0]
    if n == 1:
        return blk[0, 0]
    if n == 2:
        return blk[0, 0] * blk[1, 1] - blk[0, 1] * blk[1, 0]
    if n == 3:
        return (
            blk[0, 0] * (blk[1, 1] * blk[2, 2] - blk[1, 2] * blk[2, 1])
            - blk[0, 1] * (blk[1, 0] * blk[2, 2] - blk[1, 2] * blk[2, 0])
            + blk[0, 2] * (blk[1, 0] * blk[2, 1] - blk[1, 1] * blk[2, 0])
        )
    return np.linalg.det(np.ascontiguousarray(blk))


@njit
def _renormalize_nb(g, starts, sizes, flags, renorm_tol, reject_tol):
    status = 0
    for k in range(starts.shape[0]):
        f = flags[k]
        if f & 3 == 0:
            continue
        s = starts[k]
        n = sizes[k]
        blk = g[s:s + n, s:s + n]
        if f & 2:
            res = 0.0
            for i in range(n):
                for j in range(n):
                    acc = 0.0
                    for p in range(n):
                        acc += blk[p, i] * blk[p, j]
                    if i == j:
                        acc -= 1.0
                    res += acc * acc
            res = np.sqrt(res)
            if res > reject_tol:
                status = 1
            if res > renorm_tol:
                u, _, vt = np.linalg.svd(np.ascontiguousarray(blk))
                blk[:, :] = u @ vt
        if f & 1:
            d = _det_small(blk) if n <= 3 else np.linalg.det(np.ascontiguousarray(blk))
            if d <= 0.0:
                return 2
            if abs(d - 1.0) > reject_tol:
                status = 1
            if abs(d - 1.0) > renorm_tol:
                c = d ** (1.0 / n)
                for i in range(n):
                    for j in range(n):
                        blk[i, j] /= c
    return status


@njit(inline="always")
def _axpy(g, c, k, out, starts, sizes):
    for b in range(starts.shape[0]):
        s = starts[b]
        e = s + sizes[b]
        for i in range(s, e):
            for j in range(s, e):
                out[i, j] = g[i, j] + c * k[i, j]


@njit(inline="always")
def _rk4_step_nb(g, m, y0, h, starts, sizes, k1, k2, k3, k4, work):
    _field(m, y0, g, k1, starts, sizes)
    _axpy(g, 0.5 * h, k1, work, starts, sizes)
    _field(m, y0, work, k2, starts, sizes)
    _axpy(g, 0.5 * h, k2, work, starts, sizes)
    _field(m, y0, work, k3, starts, sizes)
    _axpy(g, h, k3, work, starts, sizes)
    _field(m, y0, work, k4, starts, sizes)
    c = h / 6.0
    for b in range(starts.shape[0]):
        s = starts[b]
        e = s + sizes[b]
        for i in range(s, e):
            for j in range(s, e):
                g[i, j] += c * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])


@njit(inline="always")
def _drive(m, y0, bs, u):
    n = y0.shape[0]
    for a in range(n):
        for c in range(n):
            acc = y0[a, c]
            for j in range(bs.shape[0]):
                acc += u[j] * bs[j, a, c]
            m[a, c] = acc


@njit
def _rk4_path_nb(g0, y0, bs, hs, us, record, starts, sizes, flags, renorm_tol, reject_tol):
    nsteps = hs.shape[0]
    n = g0.shape[0]
    nrec = 1
    for i in range(nsteps):
        if record[i]:
            nrec += 1
    out = np.empty((nrec, n, n))
    g = g0.copy()
    out[0] = g
    k1 = np.zeros((n, n))
    k2 = np.zeros((n, n))
    k3 = np.zeros((n, n))
    k4 = np.zeros((n, n))
    work = np.zeros((n, n))
    m = np.empty((n, n))
    status = 0
    idx = 1
    for i in range(nsteps):
        _drive(m, y0, bs, us[i])
        _rk4_step_nb(g, m, y0, hs[i], starts, sizes, k1, k2, k3, k4, work)
        st = _renormalize_nb(g, starts, sizes, flags, renorm_tol, reject_tol)
        if st != 0:
            status = st
            out[idx:] = g
            return out, status, i
        if record[i]:
            out[idx] = g
            idx += 1
    return out, status, nsteps


@njit
def _rk4_batch_nb(g0s, y0, bs, hs, us, starts, sizes, flags, renorm_tol, reject_tol):
    batch = g0s.shape[0]
    nsteps = hs.shape[1]
    n = g0s.shape[1]
    out = np.empty_like(g0s)
    status = np.zeros(batch, dtype=np.int64)
    k1 = np.zeros((n, n))
    k2 = np.zeros((n, n))
    k3 = np.zeros((n, n))
    k4 = np.zeros((n, n))
    work = np.zeros((n, n))
    m = np.empty((n, n))
    for b in range(batch):
        g = g0s[b].copy()
        for i in range(nsteps):
            h = hs[b, i]
            if h == 0.0:
                continue
            _drive(m, y0, bs, us[b, i])
            _rk4_step_nb(g, m, y0, h, starts, sizes, k1, k2, k3, k4, work)
            st = _renormalize_nb(g, starts, sizes, flags, renorm_tol, reject_tol)
            if st != 0:
                status[b] = st
                break
        out[b] = g
    return out, status


@njit
def _exact_batch_nb(g0, y0, bs, durations, values):
    batch, npieces = durations.shape
    n = g0.shape[0]
    out = np.empty((batch, n, n))
    for b in range(batch):
        g = g0.copy()
        for p in range(npieces):
            h = durations[b, p]
            if h == 0.0:
                continue
            m = y0.copy()
            for j in range(bs.shape[0]):
                m += values[b, p, j] * bs[j]
            g = _expm_nb(h * m) @ g @ _expm_nb(-h * y0)
        out[b] = g
    return out


# ---------------------------------------------------------------------------
# numpy fallbacks (vectorised over the batch axis)


def _blockmask(n, starts, sizes):
    mask = np.zeros((n, n), dtype=bool)
    for s, k in zip(starts, sizes):
        mask[s:s + k, s:s + k] = True
    return mask


def _renormalize_np(g, starts, sizes, flags, renorm_tol, reject_tol):
    """In-place renormalisation of a stack ``g`` of shape (K, N, N); returns status per row."""
    status = np.zeros(g.shape[0], dtype=np.int64)
    for s, n, f in zip(starts, sizes, flags):
        if f & 3 == 0:
            continue
        blk = g[:, s:s + n, s:s + n]
        if f & ORTHOGONAL:
            gram = np.einsum("kpi,kpj->kij", blk, blk) - np.eye(n)
            res = np.sqrt(np.einsum("kij,kij->k", gram, gram))
            status[res > reject_tol] = STATUS_REJECTED
            fix = res > renorm_tol
            if np.any(fix):
                u, _, vt = np.linalg.svd(blk[fix])
                blk[fix] = u @ vt
        if f & UNIT_DET:
            d = np.linalg.det(blk)
            bad = d <= 0.0
            status[np.abs(d - 1.0) > reject_tol] = STATUS_REJECTED
            status[bad] = STATUS_BAD_DET
            fix = (np.abs(d - 1.0) > renorm_tol) & ~bad
            if np.any(fix):
                blk[fix] = blk[fix] / (d[fix] ** (1.0 / n))[:, None, None]
        g[:, s:s + n, s:s + n] = blk
    return status


def _rk4_stack_step(g, m, y0, h, mask):
    def f(x):
        return (m @ x - x @ y0) * mask

    k1 = f(g)
    k2 = f(g + 0.5 * h[:, None, None] * k1)
    k3 = f(g + 0.5 * h[:, None, None] * k2)
    k4 = f(g + h[:, None, None] * k3)
    return g + (h / 6.0)[:, None, None] * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_batch_np(g0s, y0, bs, hs, us, starts, sizes, flags, renorm_tol, reject_tol):
    mask = _blockmask(g0s.shape[1], starts, sizes)
    g = g0s.copy()
    status = np.zeros(g.shape[0], dtype=np.int64)
    alive = np.ones(g.shape[0], dtype=bool)
    for i in range(hs.shape[1]):
        act = alive & (hs[:, i] != 0.0)
        if not np.any(act):
            continue
        m = y0 + np.einsum("kj,jab->kab", us[act, i], bs)
        g[act] = _rk4_stack_step(g[act], m, y0, hs[act, i], mask)
        sub = g[act]
        st = _renormalize_np(sub, starts, sizes, flags, renorm_tol, reject_tol)
        g[act] = sub
        idx = np.flatnonzero(act)
        failed = idx[st != 0]
        status[failed] = st[st != 0]
        alive[failed] = False
    return g, status


def _rk4_propagator(m, y0, h, idx):
    """RK4 step for ``g' = m g - g y0`` as a matrix on the block entries ``idx`` of ``vec(g)``.

    For constant coefficients one RK4 step is the degree-4 Taylor polynomial of
    ``exp(h L)`` with ``L g = m g - g y0``.
    """
    n = m.shape[0]
    eye = np.eye(n)
    lin = (np.kron(m, eye) - np.kron(eye, y0.T))[np.ix_(idx, idx)]
    hl = h * lin
    out = np.eye(idx.size)
    term = out
    for k in range(1, 5):
        term = term @ hl / k
        out = out + term
    return out


def _renormalize_one(g, blocks, renorm_tol, reject_tol):
    """Renormalise the flagged blocks of a single state in place; returns the status."""
    status = STATUS_OK
    for s, n, f in blocks:
        blk = g[s:s + n, s:s + n]
        if f & ORTHOGONAL:
            res = np.linalg.norm(blk.T @ blk - np.eye(n))
            if res > reject_tol:
                status = STATUS_REJECTED
            if res > renorm_tol:
                u, _, vt = np.linalg.svd(blk)
                blk[:] = u @ vt
        if f & UNIT_DET:
            d = np.linalg.det(blk)
            if d <= 0.0:
                return STATUS_BAD_DET
            if abs(d - 1.0) > reject_tol:
                status = STATUS_REJECTED
            if abs(d - 1.0) > renorm_tol:
                blk /= d ** (1.0 / n)
    return status


def _rk4_path_np(g0, y0, bs, hs, us, record, starts, sizes, flags, renorm_tol, reject_tol):
    n = g0.shape[0]
    idx = np.flatnonzero(_blockmask(n, starts, sizes).ravel())
    blocks = [(s, k, f) for s, k, f in zip(starts, sizes, flags) if f & 3]
    g = g0.copy()
    flat = g.reshape(-1)
    out = [g.copy()]
    prop, key = None, None
    for i in range(hs.shape[0]):
        if key is None or hs[i] != key[0] or not np.array_equal(us[i], key[1]):
            key = (hs[i], us[i])
            prop = _rk4_propagator(y0 + np.einsum("j,jab->ab", us[i], bs), y0, hs[i], idx)
        flat[idx] = prop @ flat[idx]
        st = _renormalize_one(g, blocks, renorm_tol, reject_tol) if blocks else STATUS_OK
        if st != STATUS_OK:
            nrec = 1 + int(np.sum(record))
            out.extend([g.copy()] * (nrec - len(out)))
            return np.array(out), st, i
        if record[i]:
            out.append(g.copy())
    return np.array(out), STATUS_OK, hs.shape[0]


def _exact_batch_np(g0, y0, bs, durations, values):
    batch, npieces = durations.shape
    out = np.repeat(g0[None], batch, axis=0)
    for b in range(batch):
        for p in range(npieces):
            h = durations[b, p]
            if h == 0.0:
                continue
            m = y0 + np.einsum("j,jab->ab", values[b, p], bs)
            out[b] = _expm_py(h * m) @ out[b] @ _expm_py(-h * y0)
    return out


# ---------------------------------------------------------------------------
# dispatch


def _layout_arrays(starts, sizes, flags):
    return (
        np.ascontiguousarray(starts, dtype=np.int64),
        np.ascontiguousarray(sizes, dtype=np.int64),
        np.ascontiguousarray(flags, dtype=np.int64),
    )


def rk4_path(g0, y0, bs, hs, us, record, starts, sizes, flags,
             renorm_tol=RENORM_TOL, reject_tol=REJECT_TOL, use_numba=None):
    """Integrate one trajectory; returns (recorded states, status, steps done)."""
    use_numba = USE_NUMBA if use_numba is None else use_numba
    args = (
        np.ascontiguousarray(g0, dtype=float),
        np.ascontiguousarray(y0, dtype=float),
        np.ascontiguousarray(bs, dtype=float),
        np.ascontiguousarray(hs, dtype=float),
        np.ascontiguousarray(us, dtype=float).reshape(len(hs), -1),
        np.ascontiguousarray(record, dtype=np.bool_),
        *_layout_arrays(starts, sizes, flags),
        float(renorm_tol),
        float(reject_tol),
    )
    fn = _rk4_path_nb if use_numba else _rk4_path_np
    out, status, done = fn(*args)
    return out, int(status), int(done)


def rk4_batch(g0s, y0, bs, hs, us, starts, sizes, flags,
              renorm_tol=RENORM_TOL, reject_tol=REJECT_TOL, use_numba=None):
    """Integrate a batch of trajectories; ``hs`` is (K, S), ``us`` is (K, S, m).

    Steps with ``h == 0`` are skipped, so ragged step schedules can be padded.
    """
    use_numba = USE_NUMBA if use_numba is None else use_numba
    hs = np.ascontiguousarray(hs, dtype=float)
    args = (
        np.ascontiguousarray(g0s, dtype=float),
        np.ascontiguousarray(y0, dtype=float),
        np.ascontiguousarray(bs, dtype=float),
        hs,
        np.ascontiguousarray(us, dtype=float).reshape(hs.shape[0], hs.shape[1], -1),
        *_layout_arrays(starts, sizes, flags),
        float(renorm_tol),
        float(reject_tol),
    )
    fn = _rk4_batch_nb if use_numba else _rk4_batch_np
    return fn(*args)


def exact_batch(g0, y0, bs, durations, values, use_numba=None):
    """Propagate piecewise-constant controls with closed-form exponentials."""
    use_numba = USE_NUMBA if use_numba is None else use_numba
    durations = np.ascontiguousarray(durations, dtype=float)
    args = (
        np.ascontiguousarray(g0, dtype=float),
        np.ascontiguousarray(y0, dtype=float),
        np.ascontiguousarray(bs, dtype=float),
        durations,
        np.ascontiguousarray(values, dtype=float).reshape(durations.shape[0], durations.shape[1], -1),
    )
    fn = _exact_batch_nb if use_numba else _exact_batch_np
    return fn(*args)
