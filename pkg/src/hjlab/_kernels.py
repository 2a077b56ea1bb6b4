"""Hot loops with a numba implementation and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``HJLAB_DISABLE_NUMBA`` is unset or "0".  Both implementations
live side by side (``NUMPY`` and ``NUMBA`` namespaces) so tests and the
benchmark can compare them directly.  ``HJ_FRONT_THREADS`` caps the
number of numba worker threads.
"""
import os
from types import SimpleNamespace

import numpy as np

_DISABLE = os.environ.get("HJLAB_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:  # pragma: no cover - exercised implicitly
    import numba as nb
    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    nb = None
    HAS_NUMBA = False


def _chunks(n, size):
    for lo in range(0, n, size):
        yield lo, min(n, lo + size)


# ---------------------------------------------------------------- numpy path

def _np_min_sqdist(X, Y):
    """Squared distance from every row of X to its nearest row of Y."""
    X = np.ascontiguousarray(X, dtype=float)
    Y = np.ascontiguousarray(Y, dtype=float)
    out = np.empty(X.shape[0])
    step = max(1, 4_000_000 // max(1, Y.shape[0]))
    for lo, hi in _chunks(X.shape[0], step):
        d = X[lo:hi, None, :] - Y[None, :, :]
        out[lo:hi] = np.einsum("ijk,ijk->ij", d, d).min(axis=1)
    return out


def _np_minplus_argmin(uy, y, q, t, v0, dv, table):
    """min_j uy[j] + t*Hs((q-y[j])/t) with Hs linearly interpolated.

    Velocities outside the table give +inf.  Ties go to the smaller j.
    """
    uy = np.asarray(uy, dtype=float)
    y = np.asarray(y, dtype=float)
    q = np.asarray(q, dtype=float)
    nt = table.shape[0]
    vals = np.empty(q.shape[0])
    idx = np.empty(q.shape[0], dtype=np.int64)
    step = max(1, 2_000_000 // max(1, y.shape[0]))
    for lo, hi in _chunks(q.shape[0], step):
        s = ((q[lo:hi, None] - y[None, :]) / t - v0) / dv
        k = np.floor(s).astype(np.int64)
        ok = (k >= 0) & (k < nt - 1)
        kc = np.clip(k, 0, nt - 2)
        w = s - kc
        hs = (1.0 - w) * table[kc] + w * table[kc + 1]
        tot = np.where(ok, uy[None, :] + t * hs, np.inf)
        j = np.argmin(tot, axis=1)
        idx[lo:hi] = j
        vals[lo:hi] = tot[np.arange(hi - lo), j]
    return vals, idx


def _np_bin_min(bins, vals, nbins):
    """Per-bin minimum and the index attaining it (first index on ties)."""
    bins = np.asarray(bins, dtype=np.int64)
    vals = np.asarray(vals, dtype=float)
    order = np.lexsort((np.arange(vals.size), vals, bins))
    b = bins[order]
    first = np.ones(b.size, dtype=bool)
    first[1:] = b[1:] != b[:-1]
    best = np.full(nbins, np.inf)
    arg = np.full(nbins, -1, dtype=np.int64)
    sel = order[first]
    best[bins[sel]] = vals[sel]
    arg[bins[sel]] = sel
    return best, arg


def _np_lf_diffs_1d(u, dx):
    d = np.diff(u) / dx
    pm = np.empty_like(u)
    pp = np.empty_like(u)
    pm[1:] = d
    pp[:-1] = d
    # linear extrapolation of the ghost nodes
    pm[0] = d[0]
    pp[-1] = d[-1]
    return pm, pp


def _np_lf_update_1d(u, hv, pm, pp, theta, dt):
    return u - dt * (hv - 0.5 * theta * (pp - pm))


def _np_lf_diffs_2d(u, dx1, dx2):
    d1 = np.diff(u, axis=0) / dx1
    d2 = np.diff(u, axis=1) / dx2
    p1m = np.empty_like(u)
    p1p = np.empty_like(u)
    p2m = np.empty_like(u)
    p2p = np.empty_like(u)
    p1m[1:] = d1
    p1p[:-1] = d1
    p1m[0] = d1[0]
    p1p[-1] = d1[-1]
    p2m[:, 1:] = d2
    p2p[:, :-1] = d2
    p2m[:, 0] = d2[:, 0]
    p2p[:, -1] = d2[:, -1]
    return p1m, p1p, p2m, p2p


def _np_lf_update_2d(u, hv, p1m, p1p, p2m, p2p, theta1, theta2, dt):
    return u - dt * (hv - 0.5 * theta1 * (p1p - p1m) - 0.5 * theta2 * (p2p - p2m))


NUMPY = SimpleNamespace(
    name="numpy",
    min_sqdist=_np_min_sqdist,
    minplus_argmin=_np_minplus_argmin,
    bin_min=_np_bin_min,
    lf_diffs_1d=_np_lf_diffs_1d,
    lf_update_1d=_np_lf_update_1d,
    lf_diffs_2d=_np_lf_diffs_2d,
    lf_update_2d=_np_lf_update_2d,
)


# ---------------------------------------------------------------- numba path

def _build_numba():
    njit = nb.njit
    prange = nb.prange

    @njit(parallel=True, cache=True)
    def min_sqdist(X, Y):
        n, k = X.shape
        m = Y.shape[0]
        out = np.empty(n)
        for i in prange(n):
            best = np.inf
            for j in range(m):
                s = 0.0
                for c in range(k):
                    d = X[i, c] - Y[j, c]
                    s += d * d
                if s < best:
                    best = s
            out[i] = best
        return out

    @njit(parallel=True, cache=True)
    def minplus_argmin(uy, y, q, t, v0, dv, table):
        nq = q.shape[0]
        ny = y.shape[0]
        nt = table.shape[0]
        vals = np.empty(nq)
        idx = np.empty(nq, dtype=np.int64)
        for i in prange(nq):
            best = np.inf
            arg = 0
            for j in range(ny):
                s = ((q[i] - y[j]) / t - v0) / dv
                k = int(np.floor(s))
                if k < 0 or k >= nt - 1:
                    continue
                w = s - k
                tot = uy[j] + t * ((1.0 - w) * table[k] + w * table[k + 1])
                if tot < best:
                    best = tot
                    arg = j
            vals[i] = best
            idx[i] = arg
        return vals, idx

    @njit(cache=True)
    def bin_min(bins, vals, nbins):
        best = np.full(nbins, np.inf)
        arg = np.full(nbins, -1, dtype=np.int64)
        for i in range(vals.shape[0]):
            b = bins[i]
            if vals[i] < best[b]:
                best[b] = vals[i]
                arg[b] = i
        return best, arg

    @njit(cache=True)
    def lf_diffs_1d(u, dx):
        n = u.shape[0]
        pm = np.empty(n)
        pp = np.empty(n)
        for j in range(n - 1):
            d = (u[j + 1] - u[j]) / dx
            pp[j] = d
            pm[j + 1] = d
        pm[0] = pp[0]
        pp[n - 1] = pm[n - 1]
        return pm, pp

    @njit(cache=True)
    def lf_update_1d(u, hv, pm, pp, theta, dt):
        out = np.empty_like(u)
        for j in range(u.shape[0]):
            out[j] = u[j] - dt * (hv[j] - 0.5 * theta * (pp[j] - pm[j]))
        return out

    @njit(parallel=True, cache=True)
    def lf_diffs_2d(u, dx1, dx2):
        n1, n2 = u.shape
        p1m = np.empty_like(u)
        p1p = np.empty_like(u)
        p2m = np.empty_like(u)
        p2p = np.empty_like(u)
        for i in prange(n1):
            for j in range(n2):
                if i < n1 - 1:
                    p1p[i, j] = (u[i + 1, j] - u[i, j]) / dx1
                else:
                    p1p[i, j] = (u[i, j] - u[i - 1, j]) / dx1
                if i > 0:
                    p1m[i, j] = (u[i, j] - u[i - 1, j]) / dx1
                else:
                    p1m[i, j] = (u[i + 1, j] - u[i, j]) / dx1
                if j < n2 - 1:
                    p2p[i, j] = (u[i, j + 1] - u[i, j]) / dx2
                else:
                    p2p[i, j] = (u[i, j] - u[i, j - 1]) / dx2
                if j > 0:
                    p2m[i, j] = (u[i, j] - u[i, j - 1]) / dx2
                else:
                    p2m[i, j] = (u[i, j + 1] - u[i, j]) / dx2
        return p1m, p1p, p2m, p2p

    @njit(parallel=True, cache=True)
    def lf_update_2d(u, hv, p1m, p1p, p2m, p2p, theta1, theta2, dt):
        n1, n2 = u.shape
        out = np.empty_like(u)
        for i in prange(n1):
            for j in range(n2):
                out[i, j] = u[i, j] - dt * (hv[i, j] - 0.5 * theta1 * (p1p[i, j] - p1m[i, j])
                                           - 0.5 * theta2 * (p2p[i, j] - p2m[i, j]))
        return out

    return SimpleNamespace(
        name="numba",
        min_sqdist=min_sqdist,
        minplus_argmin=minplus_argmin,
        bin_min=bin_min,
        lf_diffs_1d=lf_diffs_1d,
        lf_update_1d=lf_update_1d,
        lf_diffs_2d=lf_diffs_2d,
        lf_update_2d=lf_update_2d,
    )


NUMBA = _build_numba() if HAS_NUMBA else None

if HAS_NUMBA:
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # prefer OpenMP: skips the TBB version probe and its warning
        try:
            from numba.np.ufunc import omppool  # noqa: F401
            nb.config.THREADING_LAYER = "omp"
        except ImportError:  # pragma: no cover
            pass
    _threads = os.environ.get("HJ_FRONT_THREADS")
    if _threads:
        try:
            nb.set_num_threads(max(1, min(int(_threads), nb.config.NUMBA_NUM_THREADS)))
        except ValueError:
            pass

K = NUMBA if (HAS_NUMBA and not _DISABLE) else NUMPY
BACKEND = K.name


def backend(name=None):
    """Return a kernel namespace by name ("numba"/"numpy"), default active."""
    if name is None:
        return K
    if name == "numpy":
        return NUMPY
    if name == "numba":
        if NUMBA is None:
            raise RuntimeError("numba is not available")
        return NUMBA
    raise ValueError(f"unknown backend {name!r}")
