# cython: language_level=3
"""Compiled hot kernels: mean-shortage cache, replay loop and the scalar
Dormand-Prince integration of one critical curve.

Semantics match ``npsa._fallback`` exactly; see there for documentation.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, pow, fabs, isfinite

from .ode import SolverError

cnp.import_array()

cdef enum:
    PHI_EMPIRICAL = 0
    PHI_EXPONENTIAL = 1
    PHI_LOMAX = 2

# Dormand-Prince coefficients
cdef double C2 = 1.0 / 5, C3 = 3.0 / 10, C4 = 4.0 / 5, C5 = 8.0 / 9
cdef double A21 = 1.0 / 5
cdef double A31 = 3.0 / 40, A32 = 9.0 / 40
cdef double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9
cdef double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561, A54 = -212.0 / 729
cdef double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176, A65 = -5103.0 / 18656
cdef double A71 = 35.0 / 384, A73 = 500.0 / 1113, A74 = 125.0 / 192, A75 = -2187.0 / 6784, A76 = 11.0 / 84
cdef double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920, E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40

cdef double SAFETY = 0.9, FAC_MIN = 0.2, FAC_MAX = 10.0, BETA = 0.04
cdef double EXPO1 = 0.2 - 0.04 * 0.75

from .ode import P as _P_py
cdef double[:, ::1] P = np.ascontiguousarray(_P_py)


cdef inline Py_ssize_t _search_right(const double[::1] xs, double y) noexcept nogil:
    # number of entries <= y
    cdef Py_ssize_t lo = 0, hi = xs.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if xs[mid] <= y:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline double _shortage(const double[::1] xs, const double[::1] phis, double mean,
                             double y) noexcept nogil:
    cdef Py_ssize_t n = xs.shape[0], j
    if y <= xs[0]:
        return mean - y
    j = _search_right(xs, y)
    if j >= n:
        return 0.0
    return phis[j] + (xs[j] - y) * (<double>(n - j) / n)


def shortage_table(xs_in):
    cdef const double[::1] xs = np.ascontiguousarray(xs_in, dtype=np.float64)
    cdef Py_ssize_t n = xs.shape[0], i
    out = np.zeros(n)
    cdef double[::1] phis = out
    cdef double acc = 0.0
    with nogil:
        for i in range(n - 2, -1, -1):
            acc = acc + (xs[i + 1] - xs[i]) * (<double>(n - i - 1) / n)
            phis[i] = acc
    return out


def shortage_eval(xs_in, phis_in, double mean, ys_in):
    cdef const double[::1] xs = np.ascontiguousarray(xs_in, dtype=np.float64)
    cdef const double[::1] phis = np.ascontiguousarray(phis_in, dtype=np.float64)
    ys_arr = np.asarray(ys_in, dtype=np.float64)
    flat = np.ascontiguousarray(ys_arr.ravel())
    cdef const double[::1] ys = flat
    out = np.empty(flat.shape[0])
    cdef double[::1] res = out
    cdef Py_ssize_t i
    with nogil:
        for i in range(ys.shape[0]):
            res[i] = _shortage(xs, phis, mean, ys[i])
    return out.reshape(ys_arr.shape)


def shortage_eval1(xs_in, phis_in, double mean, double y):
    cdef const double[::1] xs = xs_in
    cdef const double[::1] phis = phis_in
    return _shortage(xs, phis, mean, y)


def replay(values_in, thresholds_in):
    cdef const double[::1] values = np.ascontiguousarray(values_in, dtype=np.float64)
    thr_arr = np.ascontiguousarray(thresholds_in, dtype=np.float64)
    cdef Py_ssize_t k = thr_arr.shape[1] if thr_arr.ndim == 2 else 0
    if thr_arr.ndim != 2:
        thr_arr = np.zeros((values.shape[0], 0))
    cdef const double[:, ::1] thr = thr_arr
    idx = np.empty(min(k, values.shape[0]), dtype=np.int64)
    workers = np.empty(min(k, values.shape[0]), dtype=np.int64)
    cdef cnp.int64_t[::1] iv = idx
    cdef cnp.int64_t[::1] wv = workers
    cdef Py_ssize_t i, m = 0
    with nogil:
        for i in range(values.shape[0]):
            if k == 0:
                break
            if values[i] > thr[i, k - 1]:
                iv[m] = i
                wv[m] = k
                m += 1
                k -= 1
    return idx[:m].copy(), workers[:m].copy()


cdef struct CurveModel:
    double lam         # rate on the current segment
    double s_lo        # current segment in reversed time
    double s_hi
    int kind
    double a
    double b
    const double *xs
    const double *phis
    Py_ssize_t n
    double mean
    const double *pt
    const double *py
    const double *pq
    Py_ssize_t pm      # number of steps in previous curve (0: first curve)


cdef inline double _phi(const CurveModel *m, double y) noexcept nogil:
    cdef Py_ssize_t lo, hi, mid, j
    if m.kind == PHI_EXPONENTIAL:
        if y < 0.0:
            return m.a - y
        return m.a * exp(-y / m.a)
    if m.kind == PHI_LOMAX:
        if y < 0.0:
            return m.b / (m.a - 1.0) - y
        return m.b * pow(1.0 + y / m.b, 1.0 - m.a) / (m.a - 1.0)
    if m.n == 0:
        return 0.0
    if y <= m.xs[0]:
        return m.mean - y
    lo = 0
    hi = m.n
    while lo < hi:
        mid = (lo + hi) >> 1
        if m.xs[mid] <= y:
            lo = mid + 1
        else:
            hi = mid
    j = lo
    if j >= m.n:
        return 0.0
    return m.phis[j] + (m.xs[j] - y) * (<double>(m.n - j) / m.n)


cdef inline double _prev(const CurveModel *m, double s) noexcept nogil:
    cdef Py_ssize_t lo, hi, mid, i
    cdef double h, x
    cdef const double *q
    if s >= m.pt[m.pm]:
        return m.py[m.pm]
    lo = 0
    hi = m.pm + 1
    while lo < hi:
        mid = (lo + hi) >> 1
        if m.pt[mid] <= s:
            lo = mid + 1
        else:
            hi = mid
    i = lo - 1
    if i < 0:
        i = 0
    h = m.pt[i + 1] - m.pt[i]
    x = (s - m.pt[i]) / h
    q = m.pq + 4 * i
    return m.py[i] + h * x * (q[0] + x * (q[1] + x * (q[2] + x * q[3])))


cdef inline double _rhs(const CurveModel *m, double s, double y) noexcept nogil:
    cdef double val
    if s < m.s_lo:
        s = m.s_lo
    elif s > m.s_hi:
        s = m.s_hi
    val = _phi(m, y)
    if m.pm > 0:
        val -= _phi(m, _prev(m, s))
        if val < 0.0:
            val = 0.0
    return m.lam * val


def integrate_curve(double T, double bin_width, rates_in, int kind, double a, double b,
                    xs_in, phis_in, double mean, prev_t_in, prev_y_in, prev_q_in,
                    double rtol, double atol, double min_step, Py_ssize_t max_steps):
    cdef const double[::1] rates = np.ascontiguousarray(rates_in, dtype=np.float64)
    xs_arr = np.ascontiguousarray(xs_in, dtype=np.float64)
    phis_arr = np.ascontiguousarray(phis_in, dtype=np.float64)
    cdef Py_ssize_t n_samples = xs_arr.shape[0]
    if n_samples == 0:
        xs_arr = np.zeros(1)
        phis_arr = np.zeros(1)
    cdef const double[::1] xs = xs_arr
    cdef const double[::1] phis = phis_arr
    pt_arr = np.ascontiguousarray(prev_t_in, dtype=np.float64)
    py_arr = np.ascontiguousarray(prev_y_in, dtype=np.float64)
    pq_arr = np.ascontiguousarray(prev_q_in, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t pm = pt_arr.shape[0] - 1 if pt_arr.shape[0] > 0 else 0
    if pm == 0:
        pt_arr = np.zeros(1)
        py_arr = np.zeros(1)
        pq_arr = np.zeros(4)
    cdef const double[::1] pt = pt_arr
    cdef const double[::1] py = py_arr
    cdef const double[::1] pq = pq_arr

    cdef CurveModel m
    m.kind = kind
    m.a = a
    m.b = b
    m.xs = &xs[0]
    m.phis = &phis[0]
    m.n = n_samples
    m.mean = mean
    m.pt = &pt[0]
    m.py = &py[0]
    m.pq = &pq[0]
    m.pm = pm

    # segment bounds in reversed time, same arithmetic as the fallback
    cdef Py_ssize_t nb = rates.shape[0], j
    bounds_arr = np.empty(nb + 1)
    cdef double[::1] bounds = bounds_arr
    cdef double e
    for j in range(nb + 1):
        e = (nb - j) * bin_width
        if e > T or j == 0:
            e = T
        bounds[j] = T - e
    bounds[nb] = T - 0.0

    cdef Py_ssize_t cap = 256, count = 0, r, used = 0, seg_steps, seg_max
    ts = np.empty(cap + 1)
    ys = np.empty(cap + 1)
    qs = np.empty((cap, 4))
    cdef double[::1] tv = ts
    cdef double[::1] yv = ys
    cdef double[:, ::1] qv = qs

    cdef double t0, t1, t = 0.0, y = 0.0, f, h = 0.0, h_ctrl = 0.0
    cdef double k1, k2, k3, k4, k5, k6, k7, y_new, err, sc, err_norm
    cdef double fac11, fac, h_new, facold
    cdef double d0, d1, d2, h0, h1, f1, scale
    cdef bint rejected, failed = False, clipped = False, have_h = False
    cdef double kk[7]
    cdef int c

    tv[0] = 0.0
    yv[0] = 0.0
    for j in range(nb):
        t0 = bounds[j]
        t1 = bounds[j + 1]
        if not t1 > t0:
            continue
        m.lam = rates[nb - 1 - j]
        m.s_lo = t0
        m.s_hi = t1
        seg_max = max_steps - used
        if seg_max < 1:
            raise SolverError("maximum number of steps exceeded", t0)
        t = t0
        f = _rhs(&m, t, y)
        if not isfinite(f):
            raise SolverError("non-finite right-hand side", t)
        if not have_h:
            # initial step (Hairer), max norm
            scale = atol + fabs(y) * rtol
            d0 = fabs(y / scale)
            d1 = fabs(f / scale)
            if d0 < 1e-5 or d1 < 1e-5:
                h0 = 1e-6
            else:
                h0 = 0.01 * d0 / d1
            if h0 > t1 - t0:
                h0 = t1 - t0
            f1 = _rhs(&m, t0 + h0, y + h0 * f)
            if not isfinite(f1):
                raise SolverError("non-finite right-hand side", t0 + h0)
            d2 = fabs((f1 - f) / scale) / h0
            if (d1 if d1 > d2 else d2) <= 1e-15:
                h1 = h0 * 1e-3 if h0 * 1e-3 > 1e-6 else 1e-6
            else:
                h1 = pow(0.01 / (d1 if d1 > d2 else d2), 1.0 / 5)
            h = 100 * h0
            if h1 < h:
                h = h1
            if t1 - t0 < h:
                h = t1 - t0
            have_h = True
        h_ctrl = h
        clipped = False
        facold = 1e-4
        rejected = False
        seg_steps = 0
        while t < t1:
            if seg_steps >= seg_max:
                raise SolverError("maximum number of steps exceeded", t)
            if h < min_step:
                raise SolverError("step size underflow", t)
            h_ctrl = h
            clipped = t + 1.01 * h >= t1
            if clipped:
                h = t1 - t
            with nogil:
                k1 = f
                k2 = _rhs(&m, t + C2 * h, y + h * (A21 * k1))
                k3 = _rhs(&m, t + C3 * h, y + h * (A31 * k1 + A32 * k2))
                k4 = _rhs(&m, t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
                k5 = _rhs(&m, t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
                k6 = _rhs(&m, t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
                y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
                k7 = _rhs(&m, t + h, y_new)
                failed = not (isfinite(k2) and isfinite(k3) and isfinite(k4)
                              and isfinite(k5) and isfinite(k6) and isfinite(k7))
            if failed:
                raise SolverError("non-finite right-hand side", t)
            err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            sc = atol + rtol * (fabs(y) if fabs(y) > fabs(y_new) else fabs(y_new))
            err_norm = fabs(err / sc)
            seg_steps += 1
            fac11 = pow(err_norm, EXPO1)
            if err_norm <= 1.0:
                fac = fac11 / pow(facold, BETA)
                fac = fac / SAFETY
                if fac > 1.0 / FAC_MIN:
                    fac = 1.0 / FAC_MIN
                if fac < 1.0 / FAC_MAX:
                    fac = 1.0 / FAC_MAX
                h_new = h / fac
                if rejected and h_new > h:
                    h_new = h
                facold = err_norm if err_norm > 1e-4 else 1e-4
                if count == cap:
                    cap *= 2
                    ts = np.resize(ts, cap + 1)
                    ys = np.resize(ys, cap + 1)
                    qs = np.resize(qs, (cap, 4))
                    tv = ts
                    yv = ys
                    qv = qs
                kk[0] = k1; kk[1] = k2; kk[2] = k3; kk[3] = k4; kk[4] = k5; kk[5] = k6; kk[6] = k7
                for c in range(4):
                    qv[count, c] = 0.0
                    for r in range(7):
                        qv[count, c] += kk[r] * P[r, c]
                if h == t1 - t:
                    t = t1
                else:
                    t = t + h
                y = y_new
                f = k7
                count += 1
                tv[count] = t
                yv[count] = y
                rejected = False
                h = h_new
            else:
                fac = fac11 / SAFETY
                if fac > 1.0 / FAC_MIN:
                    fac = 1.0 / FAC_MIN
                h = h / fac
                rejected = True
        used += seg_steps
        if clipped and h_ctrl > h:
            h = h_ctrl
    return ts[:count + 1].copy(), ys[:count + 1].copy(), qs[:count].copy()
