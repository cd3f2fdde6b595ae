# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation loops for WAGP, windowed WAGP and UCB1.

Reward-function arithmetic follows ``RewardFunction._eval`` and
``RewardFunction.pseudo_inverse`` operation for operation.
"""

import numpy as np

from libc.math cimport pow, exp, log, sqrt
from libc.stdlib cimport malloc, calloc, free

from ..reward_model import encode_arms


cdef struct Arms:
    int K
    int *fam
    double *par      # K x 3: a, b, gamma
    double *ends     # K x 2: mu(0), mu(1)
    int *inc
    long long *off
    double *kx
    double *ky


cdef inline double _seg_eval(const double *xs, const double *ys, long long n, double v) nogil:
    cdef long long lo = 0, hi = n - 1, mid
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xs[mid] <= v:
            lo = mid
        else:
            hi = mid
    return ys[lo] + (ys[hi] - ys[lo]) * (v - xs[lo]) / (xs[hi] - xs[lo])


cdef inline double _seg_inverse(const double *xs, const double *ys, long long n, double v, int increasing) nogil:
    cdef long long lo = 0, hi = n - 1, mid
    if increasing:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ys[mid] <= v:
                lo = mid
            else:
                hi = mid
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ys[mid] >= v:
                lo = mid
            else:
                hi = mid
    return xs[lo] + (xs[hi] - xs[lo]) * (v - ys[lo]) / (ys[hi] - ys[lo])


cdef inline double _eval(const Arms *m, int k, double th) nogil:
    cdef int f = m.fam[k]
    cdef double a = m.par[3 * k], b = m.par[3 * k + 1], g = m.par[3 * k + 2]
    if f == 0:
        return a * th + b
    if f == 1:
        return a * pow(th, g) + b
    if f == 2:
        return a * exp(b * th)
    return _seg_eval(m.kx + m.off[k], m.ky + m.off[k], m.off[k + 1] - m.off[k], th)


cdef inline double _pinv(const Arms *m, int k, double y) nogil:
    cdef double v0 = m.ends[2 * k], v1 = m.ends[2 * k + 1]
    cdef int f = m.fam[k]
    cdef double a = m.par[3 * k], b = m.par[3 * k + 1], g = m.par[3 * k + 2]
    cdef double th, s
    if m.inc[k]:
        if y <= v0:
            return 0.0
        if y >= v1:
            return 1.0
    else:
        if y >= v0:
            return 0.0
        if y <= v1:
            return 1.0
    if f == 0:
        th = (y - b) / a
    elif f == 1:
        s = (y - b) / a
        if s <= 0.0:
            th = 0.0
        elif s >= 1.0:
            th = 1.0
        else:
            th = pow(s, 1.0 / g)
    elif f == 2:
        th = log(y / a) / b
    else:
        th = _seg_inverse(m.kx + m.off[k], m.ky + m.off[k], m.off[k + 1] - m.off[k], y, m.inc[k])
    if th < 0.0:
        return 0.0
    if th > 1.0:
        return 1.0
    return th


cdef inline int _greedy(const Arms *m, double th) nogil:
    cdef int k, arm = 0
    cdef double v, best = _eval(m, 0, th)
    for k in range(1, m.K):
        v = _eval(m, k, th)
        if v > best:
            best = v
            arm = k
    return arm


cdef class _ArmsHolder:
    """Keeps the encoded arrays alive while the C struct points into them."""
    cdef Arms arms
    cdef object keep

    def __init__(self, model):
        enc = encode_arms(model)
        self.keep = enc
        cdef int[::1] fam = enc["fam"]
        cdef double[:, ::1] par = enc["par"]
        cdef double[:, ::1] ends = enc["ends"]
        cdef int[::1] inc = enc["inc"]
        cdef long long[::1] off = enc["off"]
        cdef double[::1] kx = enc["kx"]
        cdef double[::1] ky = enc["ky"]
        self.arms.K = fam.shape[0]
        self.arms.fam = &fam[0]
        self.arms.par = &par[0, 0]
        self.arms.ends = &ends[0, 0]
        self.arms.inc = &inc[0]
        self.arms.off = &off[0]
        self.arms.kx = &kx[0]
        self.arms.ky = &ky[0]


def run_wagp_gp(model, rewards, int first_arm, bint record=False):
    """WAGP over a precomputed reward table.

    Returns ``(arms, estimates, X_hat_history, N_history)``; the histories are
    ``None`` unless ``record`` is set.
    """
    cdef _ArmsHolder h = _ArmsHolder(model)
    cdef const Arms *m = &h.arms
    cdef const double[:, ::1] X = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef Py_ssize_t T = X.shape[0]
    cdef int K = m.K
    out_arms = np.empty(T, dtype=np.int64)
    out_est = np.empty(T, dtype=np.float64)
    cdef long long[::1] oa = out_arms
    cdef double[::1] oe = out_est
    xh_hist = np.empty((T if record else 0, K), dtype=np.float64)
    n_hist = np.empty((T if record else 0, K), dtype=np.int64)
    cdef double[:, ::1] xr = xh_hist
    cdef long long[:, ::1] nr = n_hist
    cdef long long *N = <long long *> calloc(K, sizeof(long long))
    cdef double *xhat = <double *> calloc(K, sizeof(double))
    cdef double *thk = <double *> calloc(K, sizeof(double))
    cdef double theta = 0.0, x, td
    cdef Py_ssize_t t
    cdef int arm, k
    try:
        with nogil:
            for t in range(1, T + 1):
                if t == 1:
                    arm = first_arm
                else:
                    arm = _greedy(m, theta)
                x = X[t - 1, arm]
                xhat[arm] = (N[arm] * xhat[arm] + x) / (N[arm] + 1)
                N[arm] += 1
                thk[arm] = _pinv(m, arm, xhat[arm])
                theta = 0.0
                td = <double> t
                for k in range(K):
                    theta += (N[k] / td) * thk[k]
                oa[t - 1] = arm
                oe[t - 1] = theta
                if record:
                    for k in range(K):
                        xr[t - 1, k] = xhat[k]
                        nr[t - 1, k] = N[k]
    finally:
        free(N)
        free(xhat)
        free(thk)
    if record:
        return out_arms, out_est, xh_hist, n_hist
    return out_arms, out_est, None, None


cdef inline void _win_add(const Arms *m, long long *N, double *xhat, double *thk, int arm, double x) nogil:
    xhat[arm] = (N[arm] * xhat[arm] + x) / (N[arm] + 1)
    N[arm] += 1
    thk[arm] = _pinv(m, arm, xhat[arm])


cdef inline double _win_theta(long long *N, double *thk, int K) nogil:
    cdef long long total = 0
    cdef int k
    cdef double theta = 0.0, td
    for k in range(K):
        total += N[k]
    td = <double> total
    for k in range(K):
        theta += (N[k] / td) * thk[k]
    return theta


def run_windowed_wagp(model, rewards, int first_arm, long long tau_h):
    """Windowed WAGP over a precomputed reward table; returns ``(arms, estimates)``."""
    cdef _ArmsHolder h = _ArmsHolder(model)
    cdef const Arms *m = &h.arms
    cdef const double[:, ::1] X = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef Py_ssize_t T = X.shape[0]
    cdef int K = m.K
    out_arms = np.empty(T, dtype=np.int64)
    out_est = np.empty(T, dtype=np.float64)
    cdef long long[::1] oa = out_arms
    cdef double[::1] oe = out_est
    # Two window accumulators, swapped by pointer at round boundaries.
    cdef long long *Na = <long long *> calloc(K, sizeof(long long))
    cdef long long *Nb = <long long *> calloc(K, sizeof(long long))
    cdef double *Xa = <double *> calloc(K, sizeof(double))
    cdef double *Xb = <double *> calloc(K, sizeof(double))
    cdef double *Ta = <double *> calloc(K, sizeof(double))
    cdef double *Tb = <double *> calloc(K, sizeof(double))
    cdef long long *pN
    cdef double *pX
    cdef double *pT
    cdef long long rho = 1, block, tot
    cdef double x
    cdef Py_ssize_t t
    cdef int arm, k
    if tau_h < 1:
        raise ValueError("tau_h must be a positive integer")
    try:
        with nogil:
            for t in range(1, T + 1):
                block = (t - 1) // tau_h
                if block >= 2 and block != rho:
                    pN = Na; Na = Nb; Nb = pN
                    pX = Xa; Xa = Xb; Xb = pX
                    pT = Ta; Ta = Tb; Tb = pT
                    for k in range(K):
                        Nb[k] = 0
                        Xb[k] = 0.0
                        Tb[k] = 0.0
                    rho = block
                tot = 0
                for k in range(K):
                    tot += Na[k]
                if tot == 0:
                    arm = first_arm
                else:
                    arm = _greedy(m, _win_theta(Na, Ta, K))
                x = X[t - 1, arm]
                _win_add(m, Na, Xa, Ta, arm, x)
                if block >= 1:
                    _win_add(m, Nb, Xb, Tb, arm, x)
                oa[t - 1] = arm
                oe[t - 1] = _win_theta(Na, Ta, K)
    finally:
        free(Na); free(Nb); free(Xa); free(Xb); free(Ta); free(Tb)
    return out_arms, out_est


def run_ucb1(rewards):
    """UCB1 over a precomputed reward table; returns the selected arms."""
    cdef const double[:, ::1] X = np.ascontiguousarray(rewards, dtype=np.float64)
    cdef Py_ssize_t T = X.shape[0]
    cdef int K = X.shape[1]
    out_arms = np.empty(T, dtype=np.int64)
    cdef long long[::1] oa = out_arms
    cdef long long *N = <long long *> calloc(K, sizeof(long long))
    cdef double *mean = <double *> calloc(K, sizeof(double))
    cdef double lt, v, best, x
    cdef Py_ssize_t t
    cdef int arm, k
    try:
        with nogil:
            for t in range(1, T + 1):
                if t <= K:
                    arm = <int> (t - 1)
                else:
                    lt = log(<double> t)
                    arm = 0
                    best = mean[0] + sqrt(2.0 * lt / N[0])
                    for k in range(1, K):
                        v = mean[k] + sqrt(2.0 * lt / N[k])
                        if v > best:
                            best = v
                            arm = k
                x = X[t - 1, arm]
                mean[arm] = (N[arm] * mean[arm] + x) / (N[arm] + 1)
                N[arm] += 1
                oa[t - 1] = arm
    finally:
        free(N)
        free(mean)
    return out_arms
