"""Fused sine/cosine for the sine activation.

numpy evaluates float64 ``sin`` and ``cos`` one element at a time through
libm, which dominates a training epoch. Here both come out of a single
compiled loop: Cody-Waite reduction by pi/2 followed by the classic
minimax polynomials on [-pi/4, pi/4], written branch-free so the loop
vectorizes. Arguments beyond ``REDUCTION_LIMIT`` take the numpy path.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

REDUCTION_LIMIT = 1e5

_TWO_OVER_PI = 0.63661977236758134308
_PIO2_HI = 1.57079632673412561417e00
_PIO2_MID = 6.07710050630396597660e-11
_PIO2_LO = 2.02226624879595063154e-21
_S1, _S2, _S3 = -1.66666666666666324348e-01, 8.33333333332248946124e-03, -1.98412698298579493134e-04
_S4, _S5, _S6 = 2.75573137070700676789e-06, -2.50507602534068634195e-08, 1.58969099521155010221e-10
_C1, _C2, _C3 = 4.16666666666666019037e-02, -1.38888888888741095749e-03, 2.48015872894767294178e-05
_C4, _C5, _C6 = -2.75573143513906633035e-07, 2.08757232129817482790e-09, -1.13596475577881948265e-11


def _sincos_loop(z, s, c):
    for i in range(z.size):
        x = z[i]
        k = np.floor(x * _TWO_OVER_PI + 0.5)
        r = ((x - k * _PIO2_HI) - k * _PIO2_MID) - k * _PIO2_LO
        r2 = r * r
        sp = r + r * r2 * (_S1 + r2 * (_S2 + r2 * (_S3 + r2 * (_S4 + r2 * (_S5 + r2 * _S6)))))
        cp = 1.0 - 0.5 * r2 + r2 * r2 * (_C1 + r2 * (_C2 + r2 * (_C3 + r2 * (_C4 + r2 * (_C5 + r2 * _C6)))))
        q = k - 4.0 * np.floor(k * 0.25)  # quadrant in {0, 1, 2, 3}
        odd = q == 1.0 or q == 3.0
        a = cp if odd else sp
        b = sp if odd else cp
        s[i] = -a if q >= 2.0 else a
        c[i] = -b if (q == 1.0 or q == 2.0) else b


_compiled = njit(cache=True, nogil=True)(_sincos_loop) if njit is not None else None


def sincos(z):
    """``(sin z, cos z)`` for a float64 array."""
    z = np.ascontiguousarray(z, dtype=float)
    if _compiled is None or z.size == 0 or not np.abs(z).max() < REDUCTION_LIMIT:
        return np.sin(z), np.cos(z)
    s = np.empty_like(z)
    c = np.empty_like(z)
    _compiled(z.reshape(-1), s.reshape(-1), c.reshape(-1))
    return s, c


# -- activation chain rule -------------------------------------------------------
#
# Arrays are feature-major: Z[a, c, n] is channel c (value, gradient, Hessian
# upper triangle) of unit a at point n. s0, s1 hold the activation and its
# first derivative at Z[:, 0, :]; the sine flag selects how the second and
# third derivatives follow from them.

def _derivs(s0, s1, sine):
    if sine:
        return -s0, -s1
    t2 = s0 * s0
    return -2.0 * s0 * s1, s1 * (6.0 * t2 - 2.0)


def _activate_loop(Z, s0, s1, out, d, pi, pj, sine):
    K, C, N = Z.shape
    P = C - 1 - d if C > 1 else 0
    for a in range(K):
        for n in range(N):
            out[a, 0, n] = s0[a, n]
        if C == 1:
            continue
        for i in range(d):
            for n in range(N):
                out[a, 1 + i, n] = s1[a, n] * Z[a, 1 + i, n]
        for p in range(P):
            h = 1 + d + p
            i = 1 + pi[p]
            j = 1 + pj[p]
            for n in range(N):
                s2, _ = _derivs_nb(s0[a, n], s1[a, n], sine)
                out[a, h, n] = s2 * Z[a, i, n] * Z[a, j, n] + s1[a, n] * Z[a, h, n]


def _activate_vjp_loop(Z, s0, s1, dA, dZ, d, pi, pj, sine):
    K, C, N = Z.shape
    P = C - 1 - d if C > 1 else 0
    for a in range(K):
        for n in range(N):
            dZ[a, 0, n] = dA[a, 0, n] * s1[a, n]
        if C == 1:
            continue
        for i in range(d):
            for n in range(N):
                s2, _ = _derivs_nb(s0[a, n], s1[a, n], sine)
                dZ[a, 0, n] += s2 * dA[a, 1 + i, n] * Z[a, 1 + i, n]
                dZ[a, 1 + i, n] = dA[a, 1 + i, n] * s1[a, n]
        for p in range(P):
            h = 1 + d + p
            i = 1 + pi[p]
            j = 1 + pj[p]
            for n in range(N):
                s2, s3 = _derivs_nb(s0[a, n], s1[a, n], sine)
                dh = dA[a, h, n]
                zi = Z[a, i, n]
                zj = Z[a, j, n]
                dZ[a, 0, n] += dh * (s3 * zi * zj + s2 * Z[a, h, n])
                t = s2 * dh
                dZ[a, i, n] += t * zj
                dZ[a, j, n] += t * zi
                dZ[a, h, n] = dh * s1[a, n]


if njit is not None:
    _derivs_nb = njit(inline="always")(_derivs)
    activate_kernel = njit(cache=True, nogil=True)(_activate_loop)
    activate_vjp_kernel = njit(cache=True, nogil=True)(_activate_vjp_loop)
else:  # pragma: no cover
    _derivs_nb = _derivs
    activate_kernel = activate_vjp_kernel = None
