"""Hot numeric kernels.

Each kernel has a numba path (``*_jit``) and a vectorised numpy path
(``*_numpy``). The public names dispatch on :data:`ridgecut._accel.HAS_NUMBA`.
Both paths produce identical combinatorics; floating sums may differ in the
last few ulps because numpy reduces pairwise.
"""
import numpy as np

from ._accel import HAS_NUMBA, njit

__all__ = [
    "clip_loops",
    "loop_vector_areas",
    "grid_integrand",
    "clip_loops_numpy",
    "clip_loops_jit",
    "loop_vector_areas_numpy",
    "loop_vector_areas_jit",
    "grid_integrand_numpy",
    "grid_integrand_jit",
]


def _next_positions(ptr):
    n = ptr[-1]
    nxt = np.arange(1, n + 1, dtype=np.int64)
    ends = ptr[1:] - 1
    nxt[ends] = ptr[:-1]
    return nxt


# --------------------------------------------------------------------------
# one-plane Sutherland-Hodgman over a CSR list of face loops
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def clip_loops_jit(ptr, idx, s):
    nf = ptr.shape[0] - 1
    total = idx.shape[0]
    codes = np.empty(2 * total, dtype=np.int64)
    lo = np.empty(total, dtype=np.int64)
    hi = np.empty(total, dtype=np.int64)
    new_ptr = np.zeros(nf + 1, dtype=np.int64)
    k = 0
    nc = 0
    for f in range(nf):
        start = ptr[f]
        stop = ptr[f + 1]
        for p in range(start, stop):
            a = idx[p]
            b = idx[p + 1] if p + 1 < stop else idx[start]
            sa = s[a]
            sb = s[b]
            if sa <= 0.0:
                codes[k] = a
                k += 1
            if (sa < 0.0 and sb > 0.0) or (sa > 0.0 and sb < 0.0):
                lo[nc] = min(a, b)
                hi[nc] = max(a, b)
                nc += 1
                codes[k] = -nc
                k += 1
        new_ptr[f + 1] = k
    return new_ptr, codes[:k], lo[:nc], hi[:nc]


def clip_loops_numpy(ptr, idx, s):
    ptr = np.asarray(ptr, dtype=np.int64)
    idx = np.asarray(idx, dtype=np.int64)
    nf = ptr.shape[0] - 1
    nxt = _next_positions(ptr)
    sa = s[idx]
    sb = s[idx[nxt]]
    keep = sa <= 0.0
    cross = ((sa < 0.0) & (sb > 0.0)) | ((sa > 0.0) & (sb < 0.0))
    crossing_number = np.cumsum(cross)  # 1-based where cross
    slots = np.empty((idx.shape[0], 2), dtype=np.int64)
    slots[:, 0] = idx
    slots[:, 1] = -crossing_number
    valid = np.stack([keep, cross], axis=1)
    codes = slots[valid]
    a = idx[cross]
    b = idx[nxt][cross]
    face_of = np.repeat(np.arange(nf), np.diff(ptr))
    counts = np.bincount(face_of, weights=keep.astype(np.int64) + cross, minlength=nf)
    new_ptr = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
    return new_ptr, codes, np.minimum(a, b), np.maximum(a, b)


# --------------------------------------------------------------------------
# vector area of each planar loop, fanned from its first vertex
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def loop_vector_areas_jit(verts, ptr, idx):
    nf = ptr.shape[0] - 1
    out = np.zeros((nf, 3))
    for f in range(nf):
        start = ptr[f]
        stop = ptr[f + 1]
        if stop - start < 3:
            continue
        o = verts[idx[start]]
        ax = 0.0
        ay = 0.0
        az = 0.0
        for p in range(start + 1, stop - 1):
            u = verts[idx[p]]
            w = verts[idx[p + 1]]
            ux = u[0] - o[0]
            uy = u[1] - o[1]
            uz = u[2] - o[2]
            wx = w[0] - o[0]
            wy = w[1] - o[1]
            wz = w[2] - o[2]
            ax += uy * wz - uz * wy
            ay += uz * wx - ux * wz
            az += ux * wy - uy * wx
        out[f, 0] = 0.5 * ax
        out[f, 1] = 0.5 * ay
        out[f, 2] = 0.5 * az
    return out


def loop_vector_areas_numpy(verts, ptr, idx):
    ptr = np.asarray(ptr, dtype=np.int64)
    idx = np.asarray(idx, dtype=np.int64)
    nf = ptr.shape[0] - 1
    out = np.zeros((nf, 3))
    if nf == 0:
        return out
    lens = np.diff(ptr)
    face_of = np.repeat(np.arange(nf), lens)
    origin = verts[idx[ptr[:-1]]][face_of]
    nxt = _next_positions(ptr)
    u = verts[idx] - origin
    w = verts[idx[nxt]] - origin
    c = np.cross(u, w)
    # the fan term of the closing edge (last -> first) is u x 0 = 0
    for k in range(3):
        out[:, k] = 0.5 * np.bincount(face_of, weights=c[:, k], minlength=nf)
    out[lens < 3] = 0.0
    return out


# --------------------------------------------------------------------------
# Newton integrand 1/(1+|grad u|^2) on a masked cell-centred grid
# --------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def grid_integrand_jit(u, mask, hx, hy, top, top_tol):
    ny, nx = u.shape
    g2 = np.full((ny, nx), np.nan)
    total = 0.0
    lvl = top - top_tol
    for j in range(ny):
        for i in range(nx):
            if not mask[j, i]:
                continue
            c = u[j, i]
            flat = c >= lvl
            left = i > 0 and mask[j, i - 1]
            right = i < nx - 1 and mask[j, i + 1]
            down = j > 0 and mask[j - 1, i]
            up = j < ny - 1 and mask[j + 1, i]
            if left and right:
                gx = (u[j, i + 1] - u[j, i - 1]) / (2.0 * hx)
                flat = flat and u[j, i + 1] >= lvl and u[j, i - 1] >= lvl
            elif right:
                gx = (u[j, i + 1] - c) / hx
                flat = flat and u[j, i + 1] >= lvl
            elif left:
                gx = (c - u[j, i - 1]) / hx
                flat = flat and u[j, i - 1] >= lvl
            else:
                gx = 0.0
            if down and up:
                gy = (u[j + 1, i] - u[j - 1, i]) / (2.0 * hy)
                flat = flat and u[j + 1, i] >= lvl and u[j - 1, i] >= lvl
            elif up:
                gy = (u[j + 1, i] - c) / hy
                flat = flat and u[j + 1, i] >= lvl
            elif down:
                gy = (c - u[j - 1, i]) / hy
                flat = flat and u[j - 1, i] >= lvl
            else:
                gy = 0.0
            if flat:
                gx = 0.0
                gy = 0.0
            q = gx * gx + gy * gy
            g2[j, i] = q
            total += 1.0 / (1.0 + q)
    return g2, total


def _one_axis_gradient(u, mask, h, lvl, axis):
    """Central/one-sided differences along one axis, plus the flatness mask."""
    um = np.moveaxis(u, axis, 0)
    mm = np.moveaxis(mask, axis, 0)
    n = um.shape[0]
    prev_ok = np.zeros_like(mm)
    next_ok = np.zeros_like(mm)
    prev_ok[1:] = mm[:-1]
    next_ok[:-1] = mm[1:]
    u_prev = np.empty_like(um)
    u_next = np.empty_like(um)
    u_prev[1:] = um[:-1]
    u_prev[0] = um[0]
    u_next[:-1] = um[1:]
    u_next[n - 1] = um[n - 1]
    both = prev_ok & next_ok
    only_next = next_ok & ~prev_ok
    only_prev = prev_ok & ~next_ok
    g = np.zeros_like(um)
    g[both] = (u_next[both] - u_prev[both]) / (2.0 * h)
    g[only_next] = (u_next[only_next] - um[only_next]) / h
    g[only_prev] = (um[only_prev] - u_prev[only_prev]) / h
    flat = np.ones_like(mm)
    flat &= ~next_ok | (u_next >= lvl)
    flat &= ~prev_ok | (u_prev >= lvl)
    return np.moveaxis(g, 0, axis), np.moveaxis(flat, 0, axis)


def grid_integrand_numpy(u, mask, hx, hy, top, top_tol):
    u = np.asarray(u, dtype=float)
    mask = np.asarray(mask, dtype=bool)
    lvl = top - top_tol
    gx, flat_x = _one_axis_gradient(u, mask, hx, lvl, axis=1)
    gy, flat_y = _one_axis_gradient(u, mask, hy, lvl, axis=0)
    flat = (u >= lvl) & flat_x & flat_y & mask
    gx[flat] = 0.0
    gy[flat] = 0.0
    g2 = gx * gx + gy * gy
    g2[~mask] = np.nan
    total = float(np.sum(1.0 / (1.0 + g2[mask])))
    return g2, total


if HAS_NUMBA:
    clip_loops = clip_loops_jit
    loop_vector_areas = loop_vector_areas_jit
    grid_integrand = grid_integrand_jit
else:
    clip_loops = clip_loops_numpy
    loop_vector_areas = loop_vector_areas_numpy
    grid_integrand = grid_integrand_numpy
