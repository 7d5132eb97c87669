"""Stable evaluation of spherical Bessel functions j_n(z), n = 0..N, for
real and complex arguments.

Strategy: closed-form j_0, j_1 plus upward three-term recurrence where it
is stable (|z| large compared to the top order), Miller-style downward
recurrence normalized through j_0 otherwise, and the power series for tiny
arguments.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

from .errors import LimitError

__all__ = ["spherical_j_sequence"]

#: highest supported order
N_CAP = 120

#: |Im z| guard: sinh-type growth of j_n overflows float64 beyond this
IM_CAP = 700.0

_TINY_Z = 1e-8
_RENORM_LIMIT = 1e250


def _j01(z: complex) -> tuple[complex, complex]:
    if abs(z) < 0.1:
        # the closed form for j_1 cancels two O(1/z) terms; the power
        # series keeps full relative accuracy at small argument
        w = -0.5 * z * z
        j0 = term = 1.0
        for k in range(1, 12):
            term *= w / (k * (2 * k + 1))
            j0 += term
            if abs(term) < 1e-20:
                break
        j1 = term = 1.0 / 3.0
        for k in range(1, 12):
            term *= w / (k * (2 * k + 3))
            j1 += term
            if abs(term) < 1e-20:
                break
        return j0, z * j1
    if isinstance(z, complex):
        s, c = cmath.sin(z), cmath.cos(z)
    else:
        s, c = math.sin(z), math.cos(z)
    return s / z, s / (z * z) - c / z


def spherical_j_sequence(N: int, z: complex) -> np.ndarray:
    """Values j_0(z) .. j_N(z) as a length N+1 array.

    Parameters
    ----------
    N : int
        Highest order, at most 120.
    z : real or complex
        Argument; |Im z| must not exceed 700.

    Returns
    -------
    np.ndarray
        float64 for real z, complex128 for complex z.

    Notes
    -----
    For |z| > N the upward recurrence from closed-form j_0, j_1 is used
    directly.  Otherwise the sequence comes from downward (Miller)
    recurrence started at order N + ceil(15 + |z|) with an arbitrary seed
    and normalized by matching j_0(z) = sin(z)/z.  For |z| < 1e-8 the
    series j_n(z) = z^n/(2n+1)!! (1 - z^2/(2(2n+3))) is used instead.
    """
    if N < 0:
        raise LimitError(f"order must be non-negative, got {N}")
    if N > N_CAP:
        raise LimitError(f"order {N} exceeds the supported cap {N_CAP}")

    is_complex = isinstance(z, complex) and z.imag != 0.0
    if is_complex and abs(z.imag) > IM_CAP:
        raise LimitError(
            f"|Im z| = {abs(z.imag):.3g} exceeds the overflow guard {IM_CAP}"
        )
    dtype = np.complex128 if is_complex else np.float64
    z = complex(z) if is_complex else float(z)
    az = abs(z)

    out = np.zeros(N + 1, dtype=dtype)
    if az == 0.0:
        out[0] = 1.0
        return out

    if az < _TINY_Z:
        # z^n / (2n+1)!! with the first correction term
        term = 1.0 + 0.0j if is_complex else 1.0
        z2 = z * z
        for n in range(N + 1):
            out[n] = term * (1.0 - z2 / (2.0 * (2 * n + 3)))
            term = term * z / (2 * n + 3)
        return out

    if az > N:
        # upward recurrence is stable while the order stays below |z|
        j0, j1 = _j01(z)
        out[0] = j0
        if N >= 1:
            out[1] = j1
        jm, jc = j0, j1
        for n in range(1, N):
            jm, jc = jc, (2 * n + 1) / z * jc - jm
            out[n + 1] = jc
        return out

    # Miller downward recurrence, normalized through the closed-form j_0
    # (or j_1 near a zero of j_0; the two have no common zeros)
    start = N + int(math.ceil(15.0 + az))
    above = 0.0j if is_complex else 0.0
    cur = 1e-30 * (1.0 + 0.0j) if is_complex else 1e-30
    for n in range(start, 0, -1):
        below = (2 * n + 1) / z * cur - above
        if n - 1 <= N:
            out[n - 1] = below
        if abs(below) > _RENORM_LIMIT:
            scale = 1.0 / abs(below)
            below *= scale
            cur *= scale
            out *= scale
        above, cur = cur, below
    j0, j1 = _j01(z)
    # cur / above now hold the unnormalized order-0 / order-1 values
    if abs(j0) >= abs(j1):
        out *= j0 / cur
    else:
        out *= j1 / above
    # the recurrence cannot resolve j_0, j_1 near their zeros; the closed
    # forms can, so they always win
    out[0] = j0
    if N >= 1:
        out[1] = j1
    return out
