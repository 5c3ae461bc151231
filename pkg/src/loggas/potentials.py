"""Confining potentials, test functions, and quadrature primitives.

Potentials are restricted to real polynomials of even degree with positive
leading coefficient, which guarantees confinement and makes every contour
integral of V'/X^(1/2) computable exactly from the Laurent expansion at
infinity.  Test functions may be polynomials or per-interval Chebyshev data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .basis import Interval, cheb_coeffs, lobatto_theta
from .errors import AccuracyError, DomainError


# ---------------------------------------------------------------------------
# Potential

@dataclass(frozen=True)
class Potential:
    """Real polynomial confining potential V(lambda) = sum c_k lambda^k.

    `coeffs` are ascending.  `analyticity_margin` is the half-width of the
    strip around the real axis in which evaluation is permitted (polynomials
    are entire, but the contract is enforced so that callers cannot silently
    rely on values outside the trusted region).
    """

    coeffs: tuple
    analyticity_margin: float = np.inf
    growth_check: bool = field(default=True)

    def __post_init__(self):
        c = tuple(float(x) for x in self.coeffs)
        object.__setattr__(self, "coeffs", c)
        deg = self.degree
        if deg < 2 or deg % 2 != 0 or c[-1] <= 0:
            raise ValueError(
                "potential must be an even-degree polynomial with positive "
                f"leading coefficient, got degree {deg}"
            )

    @property
    def degree(self) -> int:
        c = self.coeffs
        deg = len(c) - 1
        while deg > 0 and c[deg] == 0.0:
            deg -= 1
        return deg

    @property
    def deriv_coeffs(self) -> np.ndarray:
        """Ascending coefficients of V'."""
        c = np.asarray(self.coeffs)
        return c[1:] * np.arange(1, len(c))

    def __call__(self, z):
        return eval_potential(self, z)

    def deriv(self, z):
        """V'(z), subject to the same strip contract as evaluation."""
        _check_strip(self, z)
        return np.polynomial.polynomial.polyval(z, self.deriv_coeffs)

    def confinement_margin(self, support_scale: float, eps: float = 0.05) -> float:
        """min over |lambda| <= 10*scale of V - 2(1+eps)log(1+|lambda|).

        Positive values certify the logarithmic growth condition on the
        sampled range; `growth_check` is meant to record that this was
        verified for the scale of interest.
        """
        lam = np.linspace(-10.0 * support_scale, 10.0 * support_scale, 4001)
        v = np.polynomial.polynomial.polyval(lam, np.asarray(self.coeffs))
        return float(np.min(v - 2.0 * (1.0 + eps) * np.log1p(np.abs(lam))))

    def shifted_scaled(self, s: float, t: float) -> "Potential":
        """The potential W(x) = V((x - t)/s) of the variable x = s*lambda + t."""
        p = np.polynomial.polynomial.Polynomial(np.asarray(self.coeffs))
        q = p(np.polynomial.polynomial.Polynomial([-t / s, 1.0 / s]))
        return Potential(tuple(q.coef), self.analyticity_margin, self.growth_check)


def _check_strip(p: Potential, z):
    im = np.abs(np.imag(np.asarray(z, dtype=complex)))
    if np.any(im > p.analyticity_margin):
        raise DomainError(
            f"evaluation point leaves the analyticity strip "
            f"(|Im z| up to {im.max():g} > margin {p.analyticity_margin:g})"
        )


def eval_potential(p: Potential, z):
    """V(z).  Real input gives a real result; complex input is allowed only
    inside the analyticity strip."""
    _check_strip(p, z)
    zc = np.asarray(z)
    val = np.polynomial.polynomial.polyval(zc, np.asarray(p.coeffs))
    if np.isrealobj(zc):
        return val if val.shape else float(val)
    return val


def gaussian_reference(iv: Interval) -> Potential:
    """The quadratic potential 2(lambda-c)^2/d^2 whose equilibrium measure
    occupies exactly [a, b]."""
    c, d = iv.c, iv.d
    return Potential((2.0 * c * c / d**2, -4.0 * c / d**2, 2.0 / d**2))


# ---------------------------------------------------------------------------
# Test functions

class TestFunction:
    """Smooth test function h for linear eigenvalue statistics.

    Either a global polynomial (ascending `coeffs`) or an arbitrary callable
    sampled per interval.  Smoothness norms (sup of derivatives up to order
    6 on a slightly enlarged support) are computed lazily and cached.
    """

    def __init__(self, coeffs: Sequence[float] | None = None,
                 func: Callable | None = None, label: str = "h"):
        if (coeffs is None) == (func is None):
            raise ValueError("provide exactly one of coeffs / func")
        self.coeffs = None if coeffs is None else np.asarray(coeffs, dtype=float)
        self.func = func
        self.label = label
        self._norms: dict = {}

    @classmethod
    def polynomial(cls, coeffs, label: str = "h") -> "TestFunction":
        return cls(coeffs=coeffs, label=label)

    def __call__(self, lam):
        if self.coeffs is not None:
            return np.polynomial.polynomial.polyval(np.asarray(lam, dtype=float),
                                                    self.coeffs)
        return self.func(np.asarray(lam, dtype=float))

    def shifted_scaled(self, s: float, t: float) -> "TestFunction":
        """h expressed in the variable x = s*lambda + t."""
        if self.coeffs is not None:
            p = np.polynomial.polynomial.Polynomial(self.coeffs)
            q = p(np.polynomial.polynomial.Polynomial([-t / s, 1.0 / s]))
            return TestFunction(coeffs=q.coef, label=self.label)
        f = self.func
        return TestFunction(func=lambda x: f((x - t) / s), label=self.label)

    def smoothness_norms(self, intervals, eps: float = 0.05, order: int = 6):
        """Cached sup-norms of h^(j), j = 0..order, on the enlarged support."""
        key = (tuple((iv.a, iv.b) for iv in intervals), eps, order)
        if key in self._norms:
            return self._norms[key]
        norms = np.zeros(order + 1)
        for iv in intervals:
            grid = Interval(iv.a - eps, iv.b + eps)
            M = 128
            vals = self(grid.lambda_of_theta(lobatto_theta(M)))
            c = cheb_coeffs(vals)
            for j in range(order + 1):
                cj = c if j == 0 else np.polynomial.chebyshev.chebder(c, j) / grid.d**j
                xs = np.linspace(-1.0, 1.0, 257)
                norms[j] = max(norms[j],
                               float(np.max(np.abs(np.polynomial.chebyshev.chebval(xs, cj)))))
        self._norms[key] = norms
        return norms


# ---------------------------------------------------------------------------
# Quadrature rules

@dataclass(frozen=True)
class GaussChebRule:
    """Gauss-Chebyshev (first kind) rule on an interval.

    Integrates f(lambda)/sqrt(|W(lambda)|) dlambda exactly for polynomial f
    of degree <= 2n-1, W(lambda) = (lambda-a)(lambda-b).
    """

    interval: Interval
    n: int

    @property
    def nodes(self) -> np.ndarray:
        theta = np.pi * (np.arange(self.n) + 0.5) / self.n
        return self.interval.lambda_of_theta(theta)

    @property
    def weight(self) -> float:
        return np.pi / self.n

    def integrate_weighted(self, f) -> float:
        """integral of f(lambda) / sqrt(|W(lambda)|) dlambda."""
        return float(self.weight * np.sum(f(self.nodes)))


@dataclass(frozen=True)
class EllipseContour:
    """Bernstein-ellipse contour around an interval.

    The image of the circle |w| = rho under z = c + d*(w + 1/w)/2; rho > 1.
    `nodes` points, positively oriented, trapezoid weights included.
    """

    interval: Interval
    rho: float
    nodes: int = 512

    def points_and_weights(self, nodes: int | None = None):
        m = self.nodes if nodes is None else nodes
        phi = 2.0 * np.pi * (np.arange(m) + 0.5) / m
        w = self.rho * np.exp(1j * phi)
        c, d = self.interval.c, self.interval.d
        z = c + 0.5 * d * (w + 1.0 / w)
        dz = 0.5 * d * (w - 1.0 / w) * 1j * (2.0 * np.pi / m)
        return z, dz

    def semi_axes(self):
        rx = 0.5 * self.interval.d * (self.rho + 1.0 / self.rho)
        ry = 0.5 * self.interval.d * (self.rho - 1.0 / self.rho)
        return rx, ry


def default_contour(intervals, factor: float = 1.5, nodes: int = 512) -> EllipseContour:
    """Ellipse with semi-axes `factor` times the support half-length,
    enclosing every interval of the support."""
    lo = min(iv.a for iv in intervals)
    hi = max(iv.b for iv in intervals)
    hull = Interval(lo, hi)
    # rho such that the major semi-axis is factor * half-length
    rho = factor + np.sqrt(factor**2 - 1.0)
    return EllipseContour(hull, rho, nodes)


def contour_integral(g, contour: EllipseContour, rtol: float = 1e-10,
                     check: bool = True) -> complex:
    """Closed contour integral of g by the trapezoid rule.

    With `check`, the node count is doubled once and the two values must
    agree to `rtol` relative (plus a small absolute floor), otherwise an
    :class:`AccuracyError` reports the achieved residual.
    """
    z, dz = contour.points_and_weights()
    val = np.sum(g(z) * dz)
    if not check:
        return complex(val)
    z2, dz2 = contour.points_and_weights(2 * contour.nodes)
    val2 = np.sum(g(z2) * dz2)
    err = abs(val2 - val)
    if err > rtol * max(1.0, abs(val2)):
        raise AccuracyError(
            f"contour integral not converged under node doubling "
            f"(residual {err:.3e})", residual=err)
    return complex(val2)


def pv_integral(f, interval: Interval, lam0: float, n: int = 256) -> float:
    """Principal value of integral f(mu)/(lam0-mu) dmu over [a, b].

    Computed spectrally: with mu = c + d cos(theta), lam0 = c + d cos(phi),

        PV int f(mu)/(lam0-mu) dmu = sum_k g_k * (-pi sin(k phi)/sin(phi)),

    where g_k are the cosine coefficients of f(mu(theta)) sin(theta).  The
    endpoint-singular Glauert kernels make this exact for polynomial f up
    to the grid resolution; `lam0` must be strictly interior.
    """
    a, b = interval.a, interval.b
    if not (a < lam0 < b):
        raise DomainError(f"principal-value point {lam0} not interior to [{a}, {b}]")
    theta = lobatto_theta(n)
    mu = interval.lambda_of_theta(theta)
    g = cheb_coeffs(np.asarray(f(mu), dtype=float) * np.sin(theta))
    phi = float(np.arccos(np.clip(interval.to_x(lam0), -1.0, 1.0)))
    k = np.arange(n + 1)
    sphi = np.sin(phi)
    if sphi < 1e-14:
        raise DomainError("principal-value point too close to an endpoint")
    kernel = -np.pi * np.sin(k * phi) / sphi
    return float(g @ kernel)
