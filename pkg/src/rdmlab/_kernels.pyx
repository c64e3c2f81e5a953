# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled propagation kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, sin, cos, sinh, cosh, atan2, floor, fabs, log, hypot, exp, M_PI, round as cround

cnp.import_array()

DEF SERIES_CUTOFF = 1e-8
DEF BIG_EXPONENT = 30.0
DEF AMBIGUOUS_TOL = 1e-12
DEF NUDGE = 1e-10

BC_DIRICHLET = 0
BC_NEUMANN = 1


cdef struct State:
    double u
    double du
    double lscale
    long zeros


cdef inline void _coeffs(double v, double ell, double E,
                         double *c, double *s, double *sp, double *lf) noexcept nogil:
    cdef double w = E - v
    cdef double z = w * ell * ell
    cdef double k, x, sfac
    lf[0] = 0.0
    if fabs(z) < SERIES_CUTOFF:
        sfac = 1.0 - z / 6.0 + z * z / 120.0
        c[0] = 1.0 - z / 2.0 + z * z / 24.0
        s[0] = ell * sfac
        sp[0] = -w * ell * sfac
    elif w > 0.0:
        k = sqrt(w)
        c[0] = cos(k * ell)
        s[0] = sin(k * ell) / k
        sp[0] = -k * sin(k * ell)
    else:
        k = sqrt(-w)
        x = k * ell
        if x > BIG_EXPONENT:
            c[0] = 0.5
            s[0] = 0.5 / k
            sp[0] = 0.5 * k
            lf[0] = x
        else:
            c[0] = cosh(x)
            s[0] = sinh(x) / k
            sp[0] = k * sinh(x)


cdef inline void _piece(double v, double ell, double E, State *st) noexcept nogil:
    cdef double c, s, sp, lf, u1, du1, nrm, k, phi0, phi1, n, psi
    cdef double u = st.u
    cdef double du = st.du
    cdef double w
    if ell <= 0.0:
        return
    _coeffs(v, ell, E, &c, &s, &sp, &lf)
    u1 = c * u + s * du
    du1 = sp * u + c * du
    w = E - v
    if w > 0.0 and sqrt(w) * ell >= M_PI:
        k = sqrt(w)
        phi0 = atan2(u, du / k)
        phi1 = atan2(u1, du1 / k)
        n = cround((phi0 + k * ell - phi1) / (2.0 * M_PI))
        psi = phi1 + 2.0 * M_PI * n
        st.zeros += <long>(floor(psi / M_PI) - floor(phi0 / M_PI))
    elif u != 0.0 and (u1 == 0.0 or ((u1 > 0.0) != (u > 0.0))):
        st.zeros += 1
    nrm = hypot(u1, du1)
    st.u = u1 / nrm
    st.du = du1 / nrm
    st.lscale += lf + log(nrm)


def propagate(values, lengths, double E, double u, double du):
    cdef double[::1] vv = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[::1] ll = np.ascontiguousarray(lengths, dtype=np.float64)
    cdef Py_ssize_t i, n = vv.shape[0]
    cdef State st
    cdef double nrm = hypot(u, du)
    st.u = u / nrm
    st.du = du / nrm
    st.lscale = log(nrm)
    st.zeros = 0
    with nogil:
        for i in range(n):
            _piece(vv[i], ll[i], E, &st)
    return int(st.zeros), st.u, st.du, st.lscale


def transfer(values, lengths, double E, double renorm=22026.465794806718):
    cdef double[::1] vv = np.ascontiguousarray(values, dtype=np.float64)
    cdef double[::1] ll = np.ascontiguousarray(lengths, dtype=np.float64)
    cdef Py_ssize_t i, n = vv.shape[0]
    cdef double a = 1.0, b = 0.0, c = 0.0, d = 1.0
    cdef double pc, ps, psp, lf, m, ta, tb, tc, td
    cdef double lscale = 0.0
    with nogil:
        for i in range(n):
            if ll[i] <= 0.0:
                continue
            _coeffs(vv[i], ll[i], E, &pc, &ps, &psp, &lf)
            ta = pc * a + ps * c
            tb = pc * b + ps * d
            tc = psp * a + pc * c
            td = psp * b + pc * d
            a = ta
            b = tb
            c = tc
            d = td
            lscale += lf
            m = fabs(a)
            if fabs(b) > m:
                m = fabs(b)
            if fabs(c) > m:
                m = fabs(c)
            if fabs(d) > m:
                m = fabs(d)
            if m > renorm:
                a /= m
                b /= m
                c /= m
                d /= m
                lscale += log(m)
    return [[a, b], [c, d]], lscale


cdef inline void _apply_count(double c, double s, double sp, double k, double ell,
                              State *st) noexcept nogil:
    # counting only needs the direction of (u, du): rescale by the max-abs
    # entry instead of the norm and skip the log scale.  k > 0 marks an
    # oscillatory piece with wavenumber k.
    cdef double u = st.u
    cdef double du = st.du
    cdef double u1 = c * u + s * du
    cdef double du1 = sp * u + c * du
    cdef double m, phi0, phi1, n, psi
    if k > 0.0 and k * ell >= M_PI:
        phi0 = atan2(u, du / k)
        phi1 = atan2(u1, du1 / k)
        n = cround((phi0 + k * ell - phi1) / (2.0 * M_PI))
        psi = phi1 + 2.0 * M_PI * n
        st.zeros += <long>(floor(psi / M_PI) - floor(phi0 / M_PI))
    elif u != 0.0 and (u1 == 0.0 or ((u1 > 0.0) != (u > 0.0))):
        st.zeros += 1
    m = fabs(u1) if fabs(u1) > fabs(du1) else fabs(du1)
    st.u = u1 / m
    st.du = du1 / m


cdef inline void _free_count(double ell, double E, State *st) noexcept nogil:
    cdef double c, s, sp, lf, kap, x, ex, k = 0.0
    if ell <= 0.0:
        return
    if E < 0.0 and -E * ell * ell >= SERIES_CUTOFF:
        kap = sqrt(-E)
        x = kap * ell
        if x > BIG_EXPONENT:
            c = 0.5
            s = 0.5 / kap
            sp = 0.5 * kap
        else:
            ex = exp(x)
            c = 0.5 * (ex + 1.0 / ex)
            s = 0.5 * (ex - 1.0 / ex) / kap
            sp = kap * kap * s
    else:
        _coeffs(0.0, ell, E, &c, &s, &sp, &lf)
        if E > 0.0:
            k = sqrt(E)
    _apply_count(c, s, sp, k, ell, st)


cdef inline long _chain_count(double[::1] qv, double[::1] ql, double[:, ::1] qcoef,
                              double d_max, double[:, ::1] om, Py_ssize_t row,
                              double E, int bc, bint *ambiguous) noexcept nogil:
    cdef Py_ssize_t i, j, L = om.shape[1], P = qv.shape[0]
    cdef double free = 0.0, nrm
    cdef State st
    st.lscale = 0.0
    st.zeros = 0
    if bc == 0:
        st.u = 0.0
        st.du = 1.0
    else:
        st.u = 1.0
        st.du = 0.0
    for i in range(L):
        free += om[row, i] + d_max
        for j in range(P):
            if qv[j] == 0.0:
                free += ql[j]
                continue
            _free_count(free, E, &st)
            free = 0.0
            _apply_count(qcoef[j, 0], qcoef[j, 1], qcoef[j, 2], qcoef[j, 3], ql[j], &st)
        free += d_max - om[row, i]
    _free_count(free, E, &st)
    nrm = hypot(st.u, st.du)
    st.u /= nrm
    st.du /= nrm
    if bc == 0:
        ambiguous[0] = fabs(st.u) <= AMBIGUOUS_TOL
        return st.zeros
    ambiguous[0] = fabs(st.du) <= AMBIGUOUS_TOL
    return st.zeros + (1 if st.u * st.du < 0.0 else 0)


cdef void _bump_coeffs(double[::1] qv, double[::1] ql, double E,
                       double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t j
    cdef double c, s, sp, lf
    for j in range(qv.shape[0]):
        # exp(lf) is dropped: the zero count does not depend on the scale
        _coeffs(qv[j], ql[j], E, &c, &s, &sp, &lf)
        out[j, 0] = c
        out[j, 1] = s
        out[j, 2] = sp
        out[j, 3] = sqrt(E - qv[j]) if E - qv[j] > 0.0 else 0.0


def batch_counts(q_values, q_lengths, double d_max, omegas, energies, int bc):
    cdef double[::1] qv = np.ascontiguousarray(q_values, dtype=np.float64)
    cdef double[::1] ql = np.ascontiguousarray(q_lengths, dtype=np.float64)
    cdef double[:, ::1] om = np.ascontiguousarray(np.atleast_2d(omegas), dtype=np.float64)
    cdef double[::1] ee = np.ascontiguousarray(np.atleast_1d(energies), dtype=np.float64)
    cdef Py_ssize_t S = om.shape[0], K = ee.shape[0], s, k
    out = np.empty((S, K), dtype=np.int64)
    cdef long[:, ::1] cnt = out
    cdef long nudged = 0
    cdef bint amb
    cdef double[:, ::1] qc = np.empty((qv.shape[0], 4))
    cdef double[:, ::1] qn = np.empty((qv.shape[0], 4))
    with nogil:
        for k in range(K):
            _bump_coeffs(qv, ql, ee[k], qc)
            _bump_coeffs(qv, ql, ee[k] + NUDGE, qn)
            for s in range(S):
                cnt[s, k] = _chain_count(qv, ql, qc, d_max, om, s, ee[k], bc, &amb)
                if amb:
                    nudged += 1
                    cnt[s, k] = _chain_count(qv, ql, qn, d_max, om, s, ee[k] + NUDGE, bc, &amb)
    return out, int(nudged)
