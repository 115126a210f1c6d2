"""Pure numpy version of the compiled sweep in ``_kernel.pyx``.

Same arguments, same algorithm, vectorised across nodes instead of threaded.
Used when the extension module is not built.
"""
import numpy as np

GOLDEN = 0.6180339887498949


def _limit(m, d_left, d_right):
    # Fritsch-Carlson: flat at local extrema, at most three times either secant
    cap = 3.0 * np.minimum(np.abs(d_left), np.abs(d_right))
    m = np.clip(m, -cap, cap)
    return np.where((d_left * d_right <= 0.0) | (m * d_right <= 0.0), 0.0, m)


def hermite_slopes(Q):
    """Slopes of ``Q`` per unit index for the monotone Hermite interpolant."""
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    if n < 2:
        return np.zeros(n)
    M = np.empty(n)
    if n < 5:
        M[0] = Q[1] - Q[0]
        M[-1] = Q[-1] - Q[-2]
        M[1:-1] = 0.5 * (Q[2:] - Q[:-2])
    else:
        M[0] = (-11.0 * Q[0] + 18.0 * Q[1] - 9.0 * Q[2] + 2.0 * Q[3]) / 6.0
        M[1] = (-2.0 * Q[0] - 3.0 * Q[1] + 6.0 * Q[2] - Q[3]) / 6.0
        M[-2] = (2.0 * Q[-1] + 3.0 * Q[-2] - 6.0 * Q[-3] + Q[-4]) / 6.0
        M[-1] = (11.0 * Q[-1] - 18.0 * Q[-2] + 9.0 * Q[-3] - 2.0 * Q[-4]) / 6.0
        M[2:-2] = (Q[:-4] - 8.0 * Q[1:-3] + 8.0 * Q[3:-1] - Q[4:]) / 12.0
    d = np.diff(Q)
    M[0] = _limit(M[0], d[0], d[0])
    M[-1] = _limit(M[-1], d[-1], d[-1])
    M[1:-1] = _limit(M[1:-1], d[:-1], d[1:])
    return M


def hermite_interp(Q, M, pos):
    """Monotone cubic interpolation of ``Q`` at fractional indices ``pos``; exact at nodes."""
    pos = np.asarray(pos, dtype=float)
    ip = np.floor(pos).astype(np.intp)
    s = pos - ip
    up = s > 1.0 - 1e-9
    ip = np.where(up, ip + 1, ip)
    s = np.where(up | (s < 1e-9), 0.0, s)
    nxt = np.minimum(ip + 1, Q.shape[0] - 1)
    r = 1.0 - s
    val = (r * r * (1.0 + 2.0 * s) * Q[ip] + s * s * (3.0 - 2.0 * s) * Q[nxt]
           + s * r * (r * M[ip] - s * M[nxt]))
    return np.where(s == 0.0, Q[ip], val)


def _objective(Q, M, v, dx, idx, k):
    ek = v * np.exp(-k)
    return ek + (1.0 - ek) * hermite_interp(Q, M, idx - k / dx)


def _golden(Q, M, v, dx, idx, lo, hi, iters):
    a = lo.copy()
    b = hi.copy()
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc = _objective(Q, M, v, dx, idx, c)
    fd = _objective(Q, M, v, dx, idx, d)
    for _ in range(iters):
        left = fc < fd
        # left: keep [a, d]; else keep [c, b]
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = np.where(left, b - GOLDEN * (b - a), d)
        new_d = np.where(left, c, a + GOLDEN * (b - a))
        new_fc = np.where(left, np.nan, fd)
        new_fd = np.where(left, fc, np.nan)
        probe = np.where(left, new_c, new_d)
        fp = _objective(Q, M, v, dx, idx, probe)
        fc = np.where(left, fp, new_fc)
        fd = np.where(left, new_fd, fp)
        c, d = new_c, new_d
    pick_c = fc < fd
    return np.where(pick_c, c, d), np.where(pick_c, fc, fd)


def bellman_sweep(Q, dx, v, ratio, refine, iters, tie, R_out, K_out,
                  start=0, stop=-1, threads=1):
    Q = np.ascontiguousarray(Q, dtype=float)
    n = Q.shape[0]
    if stop < 0:
        stop = n
    idx = np.arange(start, stop)
    if idx.size == 0:
        return
    M = hermite_slopes(Q)
    integral = ratio >= 1.0 and float(ratio) == float(int(ratio))
    m_cap = int(np.floor((n - 1) / ratio + 1e-9)) + 1
    m = np.arange(m_cap)
    kill = v * np.exp(-(m * ratio * dx))
    surv = 1.0 - kill

    if integral:
        stride = int(ratio)
        m_max = idx // stride
    else:
        m_max = np.floor(idx / ratio + 1e-9).astype(np.intp)
    valid = m[None, :] <= m_max[:, None]
    if integral:
        pos = np.where(valid, idx[:, None] - m[None, :] * stride, 0)
        q = Q[pos]
    else:
        pos = np.where(valid, idx[:, None] - m[None, :] * ratio, 0.0)
        q = hermite_interp(Q, M, pos)
    r = kill[None, :] + surv[None, :] * q
    r = np.where(valid, r, np.inf)
    r_min = r.min(axis=1)
    ok = r <= (r_min * (1.0 + tie))[:, None]
    # largest tying allocation
    m_best = m_cap - 1 - np.argmax(ok[:, ::-1], axis=1)
    r_best = r[np.arange(idx.size), m_best]
    k_best = m_best * ratio * dx

    if refine:
        right = (m_best < idx) & (idx > 0)
        if right.any():
            kc, rc = _golden(Q, M, v, dx, idx[right], k_best[right], k_best[right] + dx, iters)
            better = rc < r_best[right] * (1.0 - tie)
            sel = np.flatnonzero(right)[better]
            k_best[sel] = kc[better]
            r_best[sel] = rc[better]
        left = (m_best > 0) & (idx > 0)
        if left.any():
            hi = m_best[left] * dx
            kc, rc = _golden(Q, M, v, dx, idx[left], hi - dx, hi, iters)
            better = rc < r_best[left] * (1.0 - tie)
            sel = np.flatnonzero(left)[better]
            k_best[sel] = kc[better]
            r_best[sel] = rc[better]

    R_out[start:stop] = r_best
    K_out[start:stop] = k_best
