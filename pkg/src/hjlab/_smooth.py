"""Small C² blending helpers (smoothstep and quintic Hermite pieces)."""
import numpy as np


def smoothstep(x):
    """s(x) = 10x^3 - 15x^4 + 6x^5 clipped to [0, 1], with s', s''."""
    x = np.clip(x, 0.0, 1.0)
    s = x**3 * (10.0 - 15.0 * x + 6.0 * x * x)
    ds = 30.0 * x * x * (1.0 - x) ** 2
    d2s = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
    return s, ds, d2s


def quintic_hermite(x0, x1, left, right):
    """Coefficients (low to high, in powers of x - x0) of the quintic that
    matches (value, first, second derivative) at x0 and x1."""
    h = x1 - x0
    M = np.zeros((6, 6))
    rhs = np.zeros(6)
    for k in range(3):
        # derivative k at 0
        M[k, k] = np.prod(np.arange(1, k + 1))
        rhs[k] = left[k]
        # derivative k at h
        for j in range(k, 6):
            M[3 + k, j] = np.prod(np.arange(j - k + 1, j + 1)) * h ** (j - k)
        rhs[3 + k] = right[k]
    return np.linalg.solve(M, rhs)


def poly_eval(c, x):
    """Value, first and second derivative of sum c[j] x^j (one Horner pass)."""
    c = np.asarray(c, dtype=float)
    x = np.asarray(x, dtype=float)
    v = np.full(x.shape, c[-1])
    d1 = np.zeros(x.shape)
    d2 = np.zeros(x.shape)
    for a in c[-2::-1]:
        d2 = d2 * x + 2.0 * d1
        d1 = d1 * x + v
        v = v * x + a
    return v, d1, d2
