"""Hot numeric kernels with a compiled path and a pure-numpy path.

Both paths accumulate in the same order (column by column for distances,
neighbor by neighbor for reductions) so they agree bit for bit. The public
functions dispatch on ``BACKEND``; the ``*_numpy`` / ``*_jit`` names stay
importable so tests and the benchmark can compare them directly.
"""
import numpy as np

from ._accel import BACKEND, HAVE_NUMBA, njit


# -- pairwise squared distances ------------------------------------------------

def _pairwise_sq_dist_loop(A, B):
    na, d = A.shape
    nb = B.shape[0]
    out = np.empty((na, nb))
    for i in range(na):
        for j in range(nb):
            s = 0.0
            for c in range(d):
                diff = A[i, c] - B[j, c]
                s += diff * diff
            out[i, j] = s
    return out


def pairwise_sq_dist_numpy(A, B):
    out = np.zeros((A.shape[0], B.shape[0]))
    for c in range(A.shape[1]):
        diff = A[:, c, None] - B[None, :, c]
        out += diff * diff
    return out


# -- stable k-smallest selection ------------------------------------------------

def _nearest_loop(D2, k):
    nq, n = D2.shape
    k = min(k, n)
    idx = np.empty((nq, k), dtype=np.int64)
    best = np.empty(k)
    for q in range(nq):
        filled = 0
        for j in range(n):
            d = D2[q, j]
            if filled == k and not d < best[k - 1]:
                continue
            # insert after every entry with distance <= d: earlier rows win ties
            pos = filled if filled < k else k - 1
            while pos > 0 and best[pos - 1] > d:
                best[pos] = best[pos - 1]
                idx[q, pos] = idx[q, pos - 1]
                pos -= 1
            best[pos] = d
            idx[q, pos] = j
            if filled < k:
                filled += 1
    return idx


def nearest_numpy(D2, k):
    k = min(k, D2.shape[1])
    return np.argsort(D2, axis=1, kind="stable")[:, :k]


# -- neighbor reductions ---------------------------------------------------------

def _reduce_loop(D2, idx, y, k, inverse):
    nq = idx.shape[0]
    k = min(k, idx.shape[1])
    out = np.empty(nq)
    for q in range(nq):
        if not inverse:
            s = 0.0
            for i in range(k):
                s += y[idx[q, i]]
            out[q] = s / k
            continue
        nzero = 0
        zsum = 0.0
        for i in range(k):
            if D2[q, idx[q, i]] == 0.0:
                nzero += 1
                zsum += y[idx[q, i]]
        if nzero > 0:
            out[q] = zsum / nzero
            continue
        num = 0.0
        den = 0.0
        for i in range(k):
            j = idx[q, i]
            w = 1.0 / np.sqrt(D2[q, j])
            num += w * y[j]
            den += w
        out[q] = num / den
    return out


def reduce_neighbors_numpy(D2, idx, y, k, inverse):
    k = min(k, idx.shape[1])
    nq = idx.shape[0]
    rows = np.arange(nq)
    if not inverse:
        s = np.zeros(nq)
        for i in range(k):
            s += y[idx[:, i]]
        return s / k
    nzero = np.zeros(nq)
    zsum = np.zeros(nq)
    num = np.zeros(nq)
    den = np.zeros(nq)
    with np.errstate(divide="ignore", invalid="ignore"):
        for i in range(k):
            d2 = D2[rows, idx[:, i]]
            yi = y[idx[:, i]]
            z = d2 == 0.0
            nzero += z
            zsum += np.where(z, yi, 0.0)
            w = 1.0 / np.sqrt(d2)
            num += w * yi
            den += w
        return np.where(nzero > 0, zsum / np.maximum(nzero, 1), num / den)


# -- hover integrator -------------------------------------------------------------

def _hover_loop(p0, v0, noise, dt, feedback, setpoint_every, stale_steps, gain, tau):
    nsteps = noise.shape[0]
    traj = np.empty((nsteps + 1, 3))
    p = p0.copy()
    v = v0.copy()
    cmd = np.zeros(3)
    traj[0] = p
    alpha = dt / tau
    for i in range(nsteps):
        if feedback:
            if i % setpoint_every == 0:
                for a in range(3):
                    cmd[a] = -gain * p[a]
            for a in range(3):
                v[a] += (cmd[a] - v[a]) * alpha
        elif i >= stale_steps:
            for a in range(3):
                v[a] -= v[a] * alpha
        for a in range(3):
            v[a] += noise[i, a]
            p[a] += v[a] * dt
        traj[i + 1] = p
    return traj


hover_integrate_numpy = _hover_loop

if HAVE_NUMBA:
    pairwise_sq_dist_jit = njit(_pairwise_sq_dist_loop)
    nearest_jit = njit(_nearest_loop)
    reduce_neighbors_jit = njit(_reduce_loop)
    hover_integrate_jit = njit(_hover_loop)


def pairwise_sq_dist(A, B):
    """Squared Euclidean distance between every row of ``A`` and of ``B``."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"column mismatch: {A.shape[1]} vs {B.shape[1]}")
    if BACKEND == "numba":
        return pairwise_sq_dist_jit(A, B)
    return pairwise_sq_dist_numpy(A, B)


def nearest(D2, k):
    """Indices of the ``k`` smallest entries per row, ties to the lower index."""
    if k < 1:
        raise ValueError("k must be >= 1")
    D2 = np.ascontiguousarray(D2, dtype=np.float64)
    if BACKEND == "numba":
        return nearest_jit(D2, int(k))
    return nearest_numpy(D2, k)


def reduce_neighbors(D2, idx, y, k, inverse):
    """Uniform or inverse-distance mean over the first ``k`` neighbors.

    With inverse weighting, a query with any zero-distance neighbor gets the
    mean of those exact matches.
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    if BACKEND == "numba":
        return reduce_neighbors_jit(np.ascontiguousarray(D2, dtype=np.float64),
                                    np.ascontiguousarray(idx, dtype=np.int64),
                                    y, int(k), bool(inverse))
    return reduce_neighbors_numpy(D2, idx, y, k, inverse)


def hover_integrate(p0, v0, noise, dt, feedback, setpoint_every, stale_steps,
                    gain, tau):
    args = (np.asarray(p0, dtype=np.float64), np.asarray(v0, dtype=np.float64),
            np.ascontiguousarray(noise, dtype=np.float64), float(dt), bool(feedback),
            int(setpoint_every), int(stale_steps), float(gain), float(tau))
    if BACKEND == "numba":
        return hover_integrate_jit(*args)
    return hover_integrate_numpy(*args)


__all__ = ["BACKEND", "pairwise_sq_dist", "nearest", "reduce_neighbors",
           "hover_integrate"]
