# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner maximisation for the time-marching solver.

Works on the complement ``Q = 1 - P`` of the survival probability.  For every
ammunition node ``i`` the routine minimises the complement of the conditional
survival

    R(k) = v e^{-k} + (1 - v e^{-k}) Q(x_i - k)

over admissible allocations ``k`` and stores the minimum and its argmin.
Off-node values of ``Q`` come from a monotone cubic Hermite interpolant:
fourth-order finite-difference slopes, limited so the interpolant never
leaves the range of the two bracketing nodes.
Each node writes only its own output cells, so the result does not depend on
the number of threads.
"""
from cython.parallel import prange

from libc.math cimport exp, fabs, floor, fmin

cdef double GOLDEN = 0.6180339887498949


cdef inline double limit(double m, double d_left, double d_right) noexcept nogil:
    # Fritsch-Carlson: flat at local extrema, at most three times either secant
    cdef double cap
    if d_left * d_right <= 0.0 or m * d_right <= 0.0:
        return 0.0
    cap = 3.0 * fmin(fabs(d_left), fabs(d_right))
    if fabs(m) > cap:
        return cap if m > 0.0 else -cap
    return m


cdef void hermite_slopes(const double[::1] Q, double[::1] M) noexcept nogil:
    """Slopes of Q per unit index for the monotone Hermite interpolant."""
    cdef Py_ssize_t n = Q.shape[0], i
    if n < 2:
        if n == 1:
            M[0] = 0.0
        return
    if n < 5:
        M[0] = Q[1] - Q[0]
        M[n - 1] = Q[n - 1] - Q[n - 2]
        for i in range(1, n - 1):
            M[i] = 0.5 * (Q[i + 1] - Q[i - 1])
    else:
        M[0] = (-11.0 * Q[0] + 18.0 * Q[1] - 9.0 * Q[2] + 2.0 * Q[3]) / 6.0
        M[1] = (-2.0 * Q[0] - 3.0 * Q[1] + 6.0 * Q[2] - Q[3]) / 6.0
        M[n - 2] = (2.0 * Q[n - 1] + 3.0 * Q[n - 2] - 6.0 * Q[n - 3] + Q[n - 4]) / 6.0
        M[n - 1] = (11.0 * Q[n - 1] - 18.0 * Q[n - 2] + 9.0 * Q[n - 3] - 2.0 * Q[n - 4]) / 6.0
        for i in range(2, n - 2):
            M[i] = (Q[i - 2] - 8.0 * Q[i - 1] + 8.0 * Q[i + 1] - Q[i + 2]) / 12.0
    M[0] = limit(M[0], Q[1] - Q[0], Q[1] - Q[0])
    M[n - 1] = limit(M[n - 1], Q[n - 1] - Q[n - 2], Q[n - 1] - Q[n - 2])
    for i in range(1, n - 1):
        M[i] = limit(M[i], Q[i] - Q[i - 1], Q[i + 1] - Q[i])


cdef inline double interp(const double[::1] Q, const double[::1] M, double pos) noexcept nogil:
    # Hermite interpolation of Q at fractional index pos >= 0; exact at nodes
    cdef Py_ssize_t ip = <Py_ssize_t>floor(pos)
    cdef double s = pos - ip
    if s > 1.0 - 1e-9:
        ip += 1
        s = 0.0
    elif s < 1e-9:
        s = 0.0
    if s == 0.0:
        return Q[ip]
    cdef double r = 1.0 - s
    return (r * r * (1.0 + 2.0 * s) * Q[ip] + s * s * (3.0 - 2.0 * s) * Q[ip + 1]
            + s * r * (r * M[ip] - s * M[ip + 1]))


cdef double scan_min(const double* kill, const double* surv, const double* q,
                     Py_ssize_t count) noexcept nogil:
    cdef double r, best = 2.0
    cdef Py_ssize_t m
    for m in range(count):
        r = kill[m] + surv[m] * q[m]
        best = r if r < best else best
    return best


cdef inline double objective(const double[::1] Q, const double[::1] M, double v, double dx,
                             Py_ssize_t i, double k) noexcept nogil:
    cdef double ek = v * exp(-k)
    return ek + (1.0 - ek) * interp(Q, M, i - k / dx)


cdef inline void golden(const double[::1] Q, const double[::1] M, double v, double dx, Py_ssize_t i,
                        double lo, double hi, int iters,
                        double* k_out, double* r_out) noexcept nogil:
    cdef double a = lo, b = hi
    cdef double c = b - GOLDEN * (b - a)
    cdef double d = a + GOLDEN * (b - a)
    cdef double fc = objective(Q, M, v, dx, i, c)
    cdef double fd = objective(Q, M, v, dx, i, d)
    cdef int it
    for it in range(iters):
        if fc < fd:
            b = d
            d = c
            fd = fc
            c = b - GOLDEN * (b - a)
            fc = objective(Q, M, v, dx, i, c)
        else:
            a = c
            c = d
            fc = fd
            d = a + GOLDEN * (b - a)
            fd = objective(Q, M, v, dx, i, d)
    if fc < fd:
        k_out[0] = c
        r_out[0] = fc
    else:
        k_out[0] = d
        r_out[0] = fd


cdef void one_node(const double[::1] Q, const double[::1] M, const double[::1] Qrev,
                   const double[::1] kill, const double[::1] surv, Py_ssize_t i,
                   double dx, double v, double ratio, bint integral, bint refine,
                   int iters, double tie, double[::1] R_out, double[::1] K_out) noexcept nogil:
    cdef Py_ssize_t m, m_max, m_best, off
    cdef Py_ssize_t stride = <Py_ssize_t>ratio
    cdef double r, r_min, q
    cdef double k_best, r_best, k_c, r_c, lo, hi

    if integral:
        m_max = i // stride
    else:
        m_max = <Py_ssize_t>floor(i / ratio + 1e-9)

    r_min = 2.0
    if stride == 1 and integral:
        # Qrev[off + m] == Q[i - m]; both operands ascend, so this vectorises
        off = Q.shape[0] - 1 - i
        r_min = scan_min(&kill[0], &surv[0], &Qrev[off], m_max + 1)
    else:
        for m in range(m_max + 1):
            if integral:
                q = Q[i - m * stride]
            else:
                q = interp(Q, M, i - m * ratio)
            r = kill[m] + surv[m] * q
            r_min = r if r < r_min else r_min

    # largest allocation whose value ties with the optimum
    m_best = 0
    r_best = r_min
    m = m_max
    while m >= 0:
        if integral:
            q = Q[i - m * stride]
        else:
            q = interp(Q, M, i - m * ratio)
        r = kill[m] + surv[m] * q
        if r <= r_min * (1.0 + tie):
            m_best = m
            r_best = r
            break
        m -= 1
    k_best = m_best * ratio * dx

    if refine and i > 0:
        # right-hand bracket first so that a tie keeps the larger allocation
        if m_best < i:
            lo = k_best
            hi = k_best + dx
            golden(Q, M, v, dx, i, lo, hi, iters, &k_c, &r_c)
            if r_c < r_best * (1.0 - tie):
                k_best = k_c
                r_best = r_c
        if m_best > 0:
            lo = m_best * dx - dx
            hi = m_best * dx
            golden(Q, M, v, dx, i, lo, hi, iters, &k_c, &r_c)
            if r_c < r_best * (1.0 - tie):
                k_best = k_c
                r_best = r_c

    R_out[i] = r_best
    K_out[i] = k_best


def bellman_sweep(const double[::1] Q, double dx, double v, double ratio,
                  bint refine, int iters, double tie,
                  double[::1] R_out, double[::1] K_out,
                  Py_ssize_t start=0, Py_ssize_t stop=-1, int threads=1):
    """Fill ``R_out[start:stop]`` and ``K_out[start:stop]`` from the slice ``Q``.

    ``ratio`` is the allocation step in units of ``dx`` (1 for the node scan).
    """
    cdef Py_ssize_t n = Q.shape[0]
    cdef Py_ssize_t i, m
    cdef Py_ssize_t m_cap
    cdef bint integral = ratio == <double>(<Py_ssize_t>ratio) and ratio >= 1.0
    if stop < 0:
        stop = n
    m_cap = <Py_ssize_t>floor((n - 1) / ratio + 1e-9) + 1
    kill_arr = bytearray(8 * m_cap)
    surv_arr = bytearray(8 * m_cap)
    rev_arr = bytearray(8 * n)
    slope_arr = bytearray(8 * n)
    cdef double[::1] kill = memoryview(kill_arr).cast("d")
    cdef double[::1] surv = memoryview(surv_arr).cast("d")
    cdef double[::1] Qrev = memoryview(rev_arr).cast("d")
    cdef double[::1] M = memoryview(slope_arr).cast("d")
    for m in range(m_cap):
        kill[m] = v * exp(-(m * ratio * dx))
        surv[m] = 1.0 - kill[m]
    for i in range(n):
        Qrev[i] = Q[n - 1 - i]
    hermite_slopes(Q, M)
    if threads < 1:
        threads = 1
    for i in prange(start, stop, nogil=True, schedule="static", num_threads=threads):
        one_node(Q, M, Qrev, kill, surv, i, dx, v, ratio, integral, refine, iters, tie, R_out, K_out)
