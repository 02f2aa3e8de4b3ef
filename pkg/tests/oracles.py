"""Independent reference computations shared by the test modules."""

from __future__ import annotations

from fractions import Fraction

import mpmath
import numpy as np

from roofnail.trajectory import QuinticSegment


def boundary_residual(seg: QuinticSegment, bc) -> float:
    r0, v0, a0, rf, vf, af = bc
    p0, q0, s0 = seg.eval(seg.t0)
    p1, q1, s1 = seg.eval(seg.tf)
    got = np.array([p0, q0, s0, p1, q1, s1], dtype=float)
    return float(np.max(np.abs(got - np.array([r0, v0, a0, rf, vf, af]))))


def exact_hermite(t0, tf, bc) -> list[float]:
    """Solve the boundary system in rational arithmetic (Gauss-Jordan)."""
    t0, tf = Fraction(t0), Fraction(tf)

    def rows(t):
        return [
            [t**j for j in range(6)],
            [j * t ** (j - 1) if j else Fraction(0) for j in range(6)],
            [j * (j - 1) * t ** (j - 2) if j > 1 else Fraction(0) for j in range(6)],
        ]

    A = rows(t0) + rows(tf)
    A = [r + [Fraction(b)] for r, b in zip(A, bc)]
    for c in range(6):
        piv = next(r for r in range(c, 6) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        A[c] = [x / A[c][c] for x in A[c]]
        for r in range(6):
            if r != c and A[r][c] != 0:
                f = A[r][c]
                A[r] = [x - f * y for x, y in zip(A[r], A[c])]
    return [float(A[r][6]) for r in range(6)]


def lstsq_fit(seg: QuinticSegment, n: int = 6) -> list[float]:
    """Degree-5 least-squares fit to ``n`` samples, in 40-digit arithmetic."""
    with mpmath.workdps(40):
        c = [mpmath.mpf(float(x)) for x in seg.coeffs]
        ts = [mpmath.mpf(seg.t0) + (mpmath.mpf(seg.tf) - seg.t0) * k / (n - 1) for k in range(n)]
        V = mpmath.matrix([[t**j for j in range(6)] for t in ts])
        y = mpmath.matrix([sum(c[j] * t**j for j in range(6)) for t in ts])
        x, _ = mpmath.qr_solve(V, y)
        return [float(v) for v in x]
