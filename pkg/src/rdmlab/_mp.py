"""Extended-precision propagators (mpmath) for ill-conditioned traces.

At the spectral minimum of a corner configuration the Neumann solution
shrinks by 1/rho on every cell with a negative displacement, so a relative
perturbation eps of the energy or of u' is amplified like rho^(2|S_i|)
along the walk.  Double precision is insufficient for walks of length ~50;
these helpers carry enough digits to make the trace exact to double.
"""
import mpmath


def piece_matrix(v, ell, E):
    v = mpmath.mpf(v)
    ell = mpmath.mpf(ell)
    w = E - v
    if w > 0:
        k = mpmath.sqrt(w)
        c, s = mpmath.cos(k * ell), mpmath.sin(k * ell)
        return c, s / k, -k * s
    if w < 0:
        k = mpmath.sqrt(-w)
        c, s = mpmath.cosh(k * ell), mpmath.sinh(k * ell)
        return c, s / k, k * s
    return mpmath.mpf(1), ell, mpmath.mpf(0)


def transfer(values, lengths, E):
    a, b, c, d = mpmath.mpf(1), mpmath.mpf(0), mpmath.mpf(0), mpmath.mpf(1)
    for v, ell in zip(values, lengths):
        if ell <= 0:
            continue
        pc, ps, psp = piece_matrix(v, ell, E)
        a, b, c, d = pc * a + ps * c, pc * b + ps * d, psp * a + pc * c, psp * b + pc * d
    return a, b, c, d


def neumann_ground(values, lengths, guess, dps):
    """Refine a double-precision Neumann ground energy to ``dps`` digits."""
    with mpmath.workdps(dps):
        def slope(E):
            return transfer(values, lengths, E)[2]

        E = mpmath.findroot(slope, (mpmath.mpf(guess) - mpmath.mpf("1e-9"),
                                    mpmath.mpf(guess) + mpmath.mpf("1e-9")),
                            solver="secant", tol=mpmath.mpf(10) ** (-dps + 5))
        return +E
