"""Chebyshev and square-root-branch plumbing shared by all modules.

Conventions used throughout the package:

* An interval [a, b] is parameterized by lambda = c + d*cos(theta), where
  c = (a+b)/2, d = (b-a)/2 and theta runs over [0, pi].
* A "smooth series" on [a, b] is a vector of coefficients f_k with
  f(lambda) = sum_k f_k T_k(x), x = (lambda - c)/d.
* A "weighted mode" on [a, b] is e_k(lambda) = T_k(x) / (pi sqrt(|W(lambda)|))
  with W(lambda) = (lambda-a)(lambda-b); e_0 integrates to one.
* sqrt_shifted(z) denotes the branch of prod_a (z - a_j)^(1/2)... see
  `sqrt_quadratic` / `sqrt_multicut`: the branch that behaves like z^q at
  +infinity, with a cut along the interval(s).
"""

from __future__ import annotations

import numpy as np
from scipy.fft import dct


# ---------------------------------------------------------------------------
# Chebyshev transforms (Chebyshev-Gauss-Lobatto grid, DCT-I)

def lobatto_theta(M: int) -> np.ndarray:
    """Angles theta_j = pi*j/M, j = 0..M, of the M+1 Lobatto points."""
    return np.pi * np.arange(M + 1) / M


def lobatto_x(M: int) -> np.ndarray:
    """Lobatto points cos(theta_j) in decreasing order from +1 to -1."""
    return np.cos(lobatto_theta(M))


def cheb_coeffs(values: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients from values on the Lobatto grid.

    `values[j] = f(cos(pi*j/M))`; returns c with f(x) = sum c_k T_k(x),
    exactly for polynomials of degree <= M.  Works along the last axis.
    """
    M = values.shape[-1] - 1
    c = dct(values, type=1, axis=-1) / M
    c[..., 0] /= 2.0
    c[..., M] /= 2.0
    return c


def cheb_values(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`cheb_coeffs`: values on the Lobatto grid."""
    c = np.array(coeffs, dtype=float, copy=True)
    M = c.shape[-1] - 1
    c[..., 1:M] /= 2.0
    return dct(c, type=1, axis=-1)


def cheb_eval(coeffs: np.ndarray, x) -> np.ndarray:
    """Evaluate sum_k coeffs[k] T_k(x) (Clenshaw via numpy)."""
    return np.polynomial.chebyshev.chebval(x, coeffs)


def cos_eval(coeffs: np.ndarray, theta) -> np.ndarray:
    """Evaluate sum_k coeffs[k] cos(k*theta)."""
    k = np.arange(len(coeffs))
    theta = np.asarray(theta, dtype=float)
    return np.cos(np.multiply.outer(theta, k)) @ np.asarray(coeffs)


def cheb_tail_ratio(coeffs: np.ndarray) -> float:
    """|last coefficient| / max|coefficients| - spectral-decay diagnostic."""
    c = np.abs(np.asarray(coeffs))
    m = c.max()
    return float(c[-1] / m) if m > 0 else 0.0


# ---------------------------------------------------------------------------
# Interval helper

class Interval:
    """Closed interval [a, b] with its Chebyshev parameterization."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a: float, b: float):
        if not b > a:
            raise ValueError(f"interval endpoints out of order: [{a}, {b}]")
        self.a = float(a)
        self.b = float(b)
        self.c = 0.5 * (a + b)
        self.d = 0.5 * (b - a)

    def to_x(self, lam):
        return (np.asarray(lam) - self.c) / self.d

    def to_lambda(self, x):
        return self.c + self.d * np.asarray(x)

    def lambda_of_theta(self, theta):
        return self.c + self.d * np.cos(theta)

    def contains(self, lam, tol: float = 0.0):
        lam = np.asarray(lam)
        return (lam >= self.a - tol) & (lam <= self.b + tol)

    def __repr__(self):
        return f"Interval({self.a!r}, {self.b!r})"


# ---------------------------------------------------------------------------
# Square-root branches

def sqrt_quadratic(z, iv: Interval):
    """sqrt((z-a)(z-b)) with cut on [a, b], ~ (z-c) at +infinity.

    Values on the cut approached from above have positive imaginary part.
    Accepts real or complex z (broadcasting).
    """
    u = (np.asarray(z, dtype=complex) - iv.c) / iv.d
    return iv.d * np.sqrt(u - 1.0) * np.sqrt(u + 1.0)


def sqrt_multicut(z, intervals) -> np.ndarray:
    """Product of the per-interval branches: ~ z^q at +infinity."""
    out = np.ones_like(np.asarray(z, dtype=complex))
    for iv in intervals:
        out = out * sqrt_quadratic(z, iv)
    return out


def abs_sqrtX_on(lam, intervals) -> np.ndarray:
    """|X(lam)|^(1/2) for real lam, X = prod (lam-a)(lam-b)."""
    lam = np.asarray(lam, dtype=float)
    X = np.ones_like(lam)
    for iv in intervals:
        X = X * (lam - iv.a) * (lam - iv.b)
    return np.sqrt(np.abs(X))


def signed_sqrt(z):
    """sqrt(z^2-1) with the branch making z - sqrt(z^2-1) small for |z|>1.

    For real z this is sign(z)*sqrt(z^2-1); defined so that
    zeta(z) = z - signed_sqrt(z) satisfies |zeta| < 1 off [-1, 1].
    """
    z = np.asarray(z, dtype=complex)
    s = np.sqrt(z - 1.0) * np.sqrt(z + 1.0)
    return s


def joukowski_zeta(z):
    """zeta(z) = z - sqrt(z^2-1), the root of smaller modulus."""
    z = np.asarray(z, dtype=complex)
    s = signed_sqrt(z)
    zeta = z - s
    # enforce |zeta| <= 1 by flipping the sheet where needed
    flip = np.abs(zeta) > 1.0
    if np.any(flip):
        zeta = np.where(flip, z + s, zeta)
        s = np.where(flip, -s, s)
    return zeta, s


# ---------------------------------------------------------------------------
# Laurent series of X^{-1/2} at infinity

def poly_from_roots(roots) -> np.ndarray:
    """Monic polynomial coefficients (descending) with the given roots."""
    c = np.array([1.0])
    for r in roots:
        c = np.convolve(c, np.array([1.0, -float(r)]))
    return c


def inv_sqrtX_series(intervals, K: int) -> np.ndarray:
    """Coefficients t_j of X^{-1/2}(z) = z^{-q} * sum_{j=0..K} t_j z^{-j}.

    X(z) = prod over intervals of (z-a)(z-b); the branch is the one that
    behaves like z^q at +infinity.  Computed by Newton iteration on the
    power series in w = 1/z.
    """
    roots = []
    for iv in intervals:
        roots.extend([iv.a, iv.b])
    e = poly_from_roots(roots)          # X = z^{2q} * S(1/z)
    S = np.zeros(K + 1)
    m = min(K + 1, len(e))
    S[:m] = e[:m]
    t = np.zeros(K + 1)
    t[0] = 1.0
    three = np.zeros(K + 1)
    three[0] = 3.0
    for _ in range(8 + K):
        St2 = np.convolve(S, np.convolve(t, t)[: K + 1])[: K + 1]
        tn = np.convolve(t, three - St2)[: K + 1] / 2.0
        if np.array_equal(tn, t):
            break
        t = tn
    return t


# ---------------------------------------------------------------------------
# Exact log/trig integrals

def logsin_cos_integral(k: int) -> float:
    """I_k = integral over [0, pi] of log(sin(theta)) * cos(k*theta).

    I_0 = -pi log 2, I_k = -pi/k for even k >= 2, and 0 for odd k.
    """
    if k == 0:
        return -np.pi * np.log(2.0)
    if k % 2 == 0:
        return -np.pi / k
    return 0.0


def logsin_weights(M: int) -> np.ndarray:
    """Vector [I_0, ..., I_M] of :func:`logsin_cos_integral` values."""
    w = np.zeros(M + 1)
    w[0] = -np.pi * np.log(2.0)
    k = np.arange(2, M + 1, 2)
    w[k] = -np.pi / k
    return w


def cross_log_kernel(lam, iv: Interval, kmax: int) -> np.ndarray:
    """Integrals over [a,b] of log|lam-mu| T_k(y) / |W(mu)|^(1/2) dmu.

    Here y = (mu-c)/d, W(mu) = (mu-a)(mu-b), and lam lies strictly outside
    [a, b].  Returns an array of shape lam.shape + (kmax+1,):

        k = 0:   pi*(log(d/2) + log|w(z)|),  w(z) = z + sqrt(z^2-1)
        k >= 1:  -pi*(zeta^{k-1} - zeta^{k+1}) / (2 k sqrt(z^2-1))

    with z = (lam-c)/d and zeta = z - sqrt(z^2-1), |zeta| < 1.
    """
    lam = np.asarray(lam, dtype=float)
    z = iv.to_x(lam).astype(complex)
    zeta, s = joukowski_zeta(z)
    out = np.empty(lam.shape + (kmax + 1,), dtype=float)
    out[..., 0] = np.pi * (np.log(iv.d / 2.0) + np.log(np.abs(z + s)))
    if kmax >= 1:
        k = np.arange(1, kmax + 1)
        zk = zeta[..., None] ** (k - 1)
        num = zk - zk * zeta[..., None] ** 2
        out[..., 1:] = np.real(-np.pi * num / (2.0 * k * s[..., None]))
    return out


# ---------------------------------------------------------------------------
# Series utilities on the theta grid

def theta_quad_midpoint(M: int):
    """Midpoint rule on [0, pi]: nodes and the common weight pi/M.

    Spectrally accurate for integrands that extend to smooth even periodic
    functions of theta.
    """
    theta = np.pi * (np.arange(M) + 0.5) / M
    return theta, np.pi / M
