"""Proximity kernels.

Every kernel here has two implementations with identical output: a numba
cell-list / brute-force loop and a pure-numpy path. ``pairs_within`` and
``cross_within`` dispatch on :data:`containsim._accel.BACKEND`; the
``*_numba`` / ``*_numpy`` functions stay importable for the benchmark and for
cross-checking tests.

Squared distances are always formed as ``dx*dx + dy*dy`` so both paths agree
bit for bit. Outputs are sorted lexicographically by index pair.
"""

import numpy as np

from ._accel import BACKEND, njit

_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_F = np.empty(0, dtype=np.float64)


def _empty():
    return _EMPTY_I.copy(), _EMPTY_I.copy(), _EMPTY_F.copy()


def _sorted(i, j, d2):
    order = np.lexsort((j, i))
    return i[order], j[order], d2[order]


# ---------------------------------------------------------------------------
# numba path
# ---------------------------------------------------------------------------


@njit(cache=True)
def _grow(buf, size):
    out = np.empty(size, dtype=buf.dtype)
    out[:buf.shape[0]] = buf
    return out


@njit(cache=True)
def _grid_pairs_nb(x, y, groups, r2, cell):
    n = x.shape[0]
    xmin = x.min()
    ymin = y.min()
    nx = int((x.max() - xmin) / cell) + 1
    ny = int((y.max() - ymin) / cell) + 1

    cx = np.empty(n, dtype=np.int64)
    cy = np.empty(n, dtype=np.int64)
    starts = np.zeros(nx * ny + 1, dtype=np.int64)
    for k in range(n):
        cx[k] = int((x[k] - xmin) / cell)
        cy[k] = int((y[k] - ymin) / cell)
        starts[cx[k] * ny + cy[k] + 1] += 1
    for c in range(nx * ny):
        starts[c + 1] += starts[c]
    members = np.empty(n, dtype=np.int64)
    fill = starts[:-1].copy()
    for k in range(n):
        key = cx[k] * ny + cy[k]
        members[fill[key]] = k
        fill[key] += 1

    cap = 64
    out_i = np.empty(cap, dtype=np.int64)
    out_j = np.empty(cap, dtype=np.int64)
    out_d = np.empty(cap, dtype=np.float64)
    w = 0
    for a in range(n):
        gx0 = max(cx[a] - 1, 0)
        gx1 = min(cx[a] + 2, nx)
        gy0 = max(cy[a] - 1, 0)
        gy1 = min(cy[a] + 2, ny)
        for gx in range(gx0, gx1):
            lo = starts[gx * ny + gy0]
            hi = starts[gx * ny + gy1]
            for s in range(lo, hi):
                b = members[s]
                if b <= a or groups[a] != groups[b]:
                    continue
                dx = x[a] - x[b]
                dy = y[a] - y[b]
                d2 = dx * dx + dy * dy
                if d2 <= r2:
                    if w == cap:
                        cap *= 2
                        out_i = _grow(out_i, cap)
                        out_j = _grow(out_j, cap)
                        out_d = _grow(out_d, cap)
                    out_i[w] = a
                    out_j[w] = b
                    out_d[w] = d2
                    w += 1
    return out_i[:w].copy(), out_j[:w].copy(), out_d[:w].copy()


@njit(cache=True)
def _cross_nb(qx, qy, x, y, r2, cell):
    n = x.shape[0]
    xmin = x.min()
    ymin = y.min()
    nx = int((x.max() - xmin) / cell) + 1
    ny = int((y.max() - ymin) / cell) + 1

    starts = np.zeros(nx * ny + 1, dtype=np.int64)
    keys = np.empty(n, dtype=np.int64)
    for k in range(n):
        keys[k] = int((x[k] - xmin) / cell) * ny + int((y[k] - ymin) / cell)
        starts[keys[k] + 1] += 1
    for c in range(nx * ny):
        starts[c + 1] += starts[c]
    members = np.empty(n, dtype=np.int64)
    fill = starts[:-1].copy()
    for k in range(n):
        members[fill[keys[k]]] = k
        fill[keys[k]] += 1

    reach = np.sqrt(r2) * (1.0 + 1e-9)
    cap = 64
    out_i = np.empty(cap, dtype=np.int64)
    out_j = np.empty(cap, dtype=np.int64)
    out_d = np.empty(cap, dtype=np.float64)
    w = 0
    for a in range(qx.shape[0]):
        gx0 = max(int(np.floor((qx[a] - reach - xmin) / cell)), 0)
        gx1 = min(int(np.floor((qx[a] + reach - xmin) / cell)), nx - 1)
        gy0 = max(int(np.floor((qy[a] - reach - ymin) / cell)), 0)
        gy1 = min(int(np.floor((qy[a] + reach - ymin) / cell)), ny - 1)
        for gx in range(gx0, gx1 + 1):
            if gy0 > gy1:
                break
            lo = starts[gx * ny + gy0]
            hi = starts[gx * ny + gy1 + 1]
            for s in range(lo, hi):
                b = members[s]
                dx = qx[a] - x[b]
                dy = qy[a] - y[b]
                d2 = dx * dx + dy * dy
                if d2 <= r2:
                    if w == cap:
                        cap *= 2
                        out_i = _grow(out_i, cap)
                        out_j = _grow(out_j, cap)
                        out_d = _grow(out_d, cap)
                    out_i[w] = a
                    out_j[w] = b
                    out_d[w] = d2
                    w += 1
    return out_i[:w].copy(), out_j[:w].copy(), out_d[:w].copy()


def _cell_size(x, y, radius):
    n = x.shape[0]
    ex = float(x.max() - x.min())
    ey = float(y.max() - y.min())
    cell = max(radius, np.sqrt(ex * ey / n), (ex + ey) / (n + 1), 1e-9)
    return cell * (1.0 + 1e-9)


def pairs_within_numba(x, y, radius, groups=None):
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if x.shape[0] < 2:
        return _empty()
    if groups is None:
        groups = np.zeros(x.shape[0], dtype=np.int64)
    groups = np.ascontiguousarray(groups, dtype=np.int64)
    i, j, d2 = _grid_pairs_nb(x, y, groups, float(radius) * float(radius),
                              _cell_size(x, y, float(radius)))
    return _sorted(i, j, d2)


def cross_within_numba(qx, qy, x, y, radius):
    qx = np.ascontiguousarray(qx, dtype=np.float64)
    qy = np.ascontiguousarray(qy, dtype=np.float64)
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    if qx.shape[0] == 0 or x.shape[0] == 0:
        return _empty()
    i, j, d2 = _cross_nb(qx, qy, x, y, float(radius) * float(radius),
                         _cell_size(x, y, float(radius)))
    return _sorted(i, j, d2)


# ---------------------------------------------------------------------------
# numpy path
# ---------------------------------------------------------------------------


def pairs_within_numpy(x, y, radius, groups=None):
    """Sort-and-sweep along x; shift k compares each point with its k-th successor."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.shape[0]
    if n < 2:
        return _empty()
    if groups is None:
        groups = np.zeros(n, dtype=np.int64)
    groups = np.asarray(groups, dtype=np.int64)
    r2 = float(radius) * float(radius)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    # slack so rounding in dx*dx never hides a pair from the sweep
    reach = float(radius) * (1.0 + 1e-9)

    found_i, found_j, found_d = [], [], []
    for k in range(1, n):
        live = np.flatnonzero(xs[k:] - xs[:-k] <= reach)
        if live.size == 0:
            break
        a = order[live]
        b = order[live + k]
        dx = x[a] - x[b]
        dy = y[a] - y[b]
        d2 = dx * dx + dy * dy
        keep = (d2 <= r2) & (groups[a] == groups[b])
        a, b = a[keep], b[keep]
        found_i.append(np.minimum(a, b))
        found_j.append(np.maximum(a, b))
        found_d.append(d2[keep])
    if not found_i:
        return _empty()
    return _sorted(np.concatenate(found_i).astype(np.int64),
                   np.concatenate(found_j).astype(np.int64),
                   np.concatenate(found_d))


def cross_within_numpy(qx, qy, x, y, radius, chunk=256):
    qx = np.asarray(qx, dtype=np.float64)
    qy = np.asarray(qy, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if qx.shape[0] == 0 or x.shape[0] == 0:
        return _empty()
    r2 = float(radius) * float(radius)
    found_i, found_j, found_d = [], [], []
    for start in range(0, qx.shape[0], chunk):
        dx = qx[start:start + chunk, None] - x[None, :]
        dy = qy[start:start + chunk, None] - y[None, :]
        d2 = dx * dx + dy * dy
        a, b = np.nonzero(d2 <= r2)
        found_i.append(a + start)
        found_j.append(b)
        found_d.append(d2[a, b])
    return _sorted(np.concatenate(found_i).astype(np.int64),
                   np.concatenate(found_j).astype(np.int64),
                   np.concatenate(found_d))


if BACKEND == "numba":
    pairs_within = pairs_within_numba
    cross_within = cross_within_numba
else:
    pairs_within = pairs_within_numpy
    cross_within = cross_within_numpy

