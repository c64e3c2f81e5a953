"""Pure-Python/numpy implementation of the propagation kernels.

This is the reference path: the Cython module ``_kernels`` implements the
same functions with the same signatures and must agree with this one to
rounding.  Everything here solves ``-u'' + v u = E u`` exactly on constant
pieces.

State conventions
-----------------
A solution is carried as ``(u, du)`` normalized to unit Euclidean norm with
the discarded logarithm accumulated separately.  Zeros of ``u`` are counted
in half-open intervals ``(x0, x1]``.
"""
import math

import numpy as np

SERIES_CUTOFF = 1e-8
BIG_EXPONENT = 30.0
AMBIGUOUS_TOL = 1e-12
NUDGE = 1e-10

BC_DIRICHLET = 0
BC_NEUMANN = 1


def _piece_coeffs(v, ell, E):
    """Entries (c, s, sp, log_factor) of the propagator on one constant piece.

    The propagator is ``exp(log_factor) * [[c, s], [sp, c]]``.
    """
    w = E - v
    z = w * ell * ell
    if abs(z) < SERIES_CUTOFF:
        c = 1.0 - z / 2.0 + z * z / 24.0
        sfac = 1.0 - z / 6.0 + z * z / 120.0
        return c, ell * sfac, -w * ell * sfac, 0.0
    if w > 0.0:
        k = math.sqrt(w)
        return math.cos(k * ell), math.sin(k * ell) / k, -k * math.sin(k * ell), 0.0
    kap = math.sqrt(-w)
    x = kap * ell
    if x > BIG_EXPONENT:
        # cosh = sinh = e^x / 2 up to e^{-2x} < 1e-26
        return 0.5, 0.5 / kap, 0.5 * kap, x
    return math.cosh(x), math.sinh(x) / kap, kap * math.sinh(x), 0.0


def _piece(v, ell, E, u, du):
    """Advance a unit-norm state across one piece; return (zeros, u, du, log)."""
    if ell <= 0.0:
        return 0, u, du, 0.0
    c, s, sp, lf = _piece_coeffs(v, ell, E)
    u1 = c * u + s * du
    du1 = sp * u + c * du
    w = E - v
    zeros = 0
    if w > 0.0 and math.sqrt(w) * ell >= math.pi:
        k = math.sqrt(w)
        phi0 = math.atan2(u, du / k)
        phi1 = math.atan2(u1, du1 / k)
        n = round((phi0 + k * ell - phi1) / (2.0 * math.pi))
        psi = phi1 + 2.0 * math.pi * n
        zeros = math.floor(psi / math.pi) - math.floor(phi0 / math.pi)
    elif u != 0.0 and (u1 == 0.0 or (u1 > 0.0) != (u > 0.0)):
        zeros = 1
    nrm = math.hypot(u1, du1)
    return zeros, u1 / nrm, du1 / nrm, lf + math.log(nrm)


def propagate(values, lengths, E, u, du):
    """Propagate ``(u, du)`` through consecutive constant pieces.

    Returns ``(zeros, u, du, log_scale)`` with ``(u, du)`` unit-norm and the
    true end state equal to ``exp(log_scale) * (u, du)``.
    """
    nrm = math.hypot(u, du)
    u, du = u / nrm, du / nrm
    log_scale = math.log(nrm)
    zeros = 0
    for v, ell in zip(values, lengths):
        z, u, du, lg = _piece(float(v), float(ell), E, u, du)
        zeros += z
        log_scale += lg
    return zeros, u, du, log_scale


def transfer(values, lengths, E, renorm=math.exp(10.0)):
    """Ordered product of piece propagators, renormalized.

    Returns ``(M, log_scale)`` as a nested list and float; the propagator from
    the left end to the right end is ``exp(log_scale) * M``.
    """
    a, b, c, d = 1.0, 0.0, 0.0, 1.0
    log_scale = 0.0
    for v, ell in zip(values, lengths):
        ell = float(ell)
        if ell <= 0.0:
            continue
        pc, ps, psp, lf = _piece_coeffs(float(v), ell, E)
        a, b, c, d = (pc * a + ps * c, pc * b + ps * d,
                      psp * a + pc * c, psp * b + pc * d)
        log_scale += lf
        m = max(abs(a), abs(b), abs(c), abs(d))
        if m > renorm:
            a, b, c, d = a / m, b / m, c / m, d / m
            log_scale += math.log(m)
    return [[a, b], [c, d]], log_scale


# -- batched counting over many configurations ---------------------------------

def _piece_batch(v, ell, E, u, du, zeros, lscale):
    """Vectorized ``_piece`` for scalar v, E and array (or scalar) lengths."""
    ell = np.broadcast_to(np.asarray(ell, dtype=float), u.shape)
    w = E - v
    z = w * ell * ell
    small = np.abs(z) < SERIES_CUTOFF
    lf = np.zeros_like(u)
    if w > 0.0:
        k = math.sqrt(w)
        c = np.cos(k * ell)
        s = np.sin(k * ell) / k
        sp = -k * np.sin(k * ell)
    elif w < 0.0:
        kap = math.sqrt(-w)
        x = kap * ell
        big = x > BIG_EXPONENT
        xs = np.where(big, 0.0, x)
        c = np.where(big, 0.5, np.cosh(xs))
        sh = np.where(big, 0.5, np.sinh(xs))
        s = sh / kap
        sp = kap * sh
        lf = np.where(big, x, 0.0)
    else:
        c = np.ones_like(u)
        s = ell.copy()
        sp = np.zeros_like(u)
    if small.any():
        zs = z[small]
        sfac = 1.0 - zs / 6.0 + zs * zs / 120.0
        c = np.array(c, dtype=float, copy=True)
        s = np.array(s, dtype=float, copy=True)
        sp = np.array(sp, dtype=float, copy=True)
        c[small] = 1.0 - zs / 2.0 + zs * zs / 24.0
        s[small] = ell[small] * sfac
        sp[small] = -w * ell[small] * sfac
    u1 = c * u + s * du
    du1 = sp * u + c * du
    active = ell > 0.0
    sign_change = (u != 0.0) & ((u1 == 0.0) | ((u1 > 0.0) != (u > 0.0)))
    if w > 0.0:
        k = math.sqrt(w)
        osc = active & (k * ell >= math.pi)
        if osc.any():
            phi0 = np.arctan2(u[osc], du[osc] / k)
            phi1 = np.arctan2(u1[osc], du1[osc] / k)
            n = np.round((phi0 + k * ell[osc] - phi1) / (2.0 * math.pi))
            psi = phi1 + 2.0 * math.pi * n
            zc = (np.floor(psi / math.pi) - np.floor(phi0 / math.pi)).astype(np.int64)
        zeros += np.where(active & ~osc, sign_change, 0)
        if osc.any():
            zeros[osc] += zc
    else:
        zeros += np.where(active, sign_change, 0)
    nrm = np.hypot(u1, du1)
    u[...] = np.where(active, u1 / nrm, u)
    du[...] = np.where(active, du1 / nrm, du)
    lscale += np.where(active, lf + np.log(nrm), 0.0)


def _chain_states(q_values, q_lengths, d_max, omegas, E, bc):
    """Propagate the boundary solution through displaced cells, all samples."""
    omegas = np.asarray(omegas, dtype=float)
    S, L = omegas.shape
    u = np.full(S, 0.0 if bc == BC_DIRICHLET else 1.0)
    du = np.full(S, 1.0 if bc == BC_DIRICHLET else 0.0)
    zeros = np.zeros(S, dtype=np.int64)
    lscale = np.zeros(S)
    free = np.zeros(S)
    for i in range(L):
        free = free + (omegas[:, i] + d_max)
        for v, ell in zip(q_values, q_lengths):
            if v == 0.0:
                free = free + ell
                continue
            _piece_batch(0.0, free, E, u, du, zeros, lscale)
            free = np.zeros(S)
            _piece_batch(float(v), float(ell), E, u, du, zeros, lscale)
        free = free + (d_max - omegas[:, i])
    _piece_batch(0.0, free, E, u, du, zeros, lscale)
    return zeros, u, du


def _counts_from_state(zeros, u, du, bc):
    if bc == BC_DIRICHLET:
        return zeros, np.abs(u) <= AMBIGUOUS_TOL
    return zeros + (u * du < 0.0), np.abs(du) <= AMBIGUOUS_TOL


def batch_counts(q_values, q_lengths, d_max, omegas, energies, bc):
    """Eigenvalue counts below each energy for each configuration.

    Parameters
    ----------
    q_values, q_lengths : 1d arrays
        Piece layout of the single-site potential across ``[-r, r]``.
    d_max : float
        ``1/2 - r``.
    omegas : (S, L) array
        Displacements, one row per configuration.
    energies : (K,) array
    bc : int
        ``BC_DIRICHLET`` or ``BC_NEUMANN``.

    Returns
    -------
    counts : (S, K) int64
    nudged : int
        Number of (sample, energy) pairs that sat on an eigenvalue and were
        re-evaluated at ``E + NUDGE``.
    """
    omegas = np.atleast_2d(np.asarray(omegas, dtype=float))
    energies = np.atleast_1d(np.asarray(energies, dtype=float))
    q_values = [float(x) for x in q_values]
    q_lengths = [float(x) for x in q_lengths]
    out = np.empty((omegas.shape[0], energies.size), dtype=np.int64)
    nudged = 0
    for j, E in enumerate(energies):
        zeros, u, du = _chain_states(q_values, q_lengths, d_max, omegas, E, bc)
        counts, amb = _counts_from_state(zeros, u, du, bc)
        if amb.any():
            nudged += int(amb.sum())
            z2, u2, du2 = _chain_states(q_values, q_lengths, d_max, omegas[amb],
                                        E + NUDGE, bc)
            counts[amb] = _counts_from_state(z2, u2, du2, bc)[0]
        out[:, j] = counts
    return out, nudged
