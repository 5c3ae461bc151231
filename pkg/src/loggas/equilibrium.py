"""Equilibrium measures of polynomial log-gas potentials.

The density on a q-interval support sigma is rho = P * sqrt|X| / (2 pi) up
to the per-interval sign of Im X^(1/2) on the upper edge, where X(z) is the
monic polynomial vanishing at the 2q endpoints.  The endpoints solve

    m_k := (1/2 pi i) * contour integral of V'(z) z^k / X^(1/2)(z) dz = 0,
           k = 0..q-1,
    m_q = 2,
    integral over each gap of P(lambda) X^(1/2)(lambda) dlambda = 0,

and all m_k are read off exactly from the Laurent expansion of X^(-1/2) at
infinity, so only the q-1 gap conditions need numerical quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import (Interval, cheb_coeffs, cheb_eval, cross_log_kernel,
                    inv_sqrtX_series, lobatto_theta, sqrt_multicut)
from .errors import ConsistencyError, DegeneracyError, NoConvergenceError
from .potentials import Potential, gaussian_reference


# ---------------------------------------------------------------------------
# Support and scale map

@dataclass(frozen=True)
class Support:
    """Ordered disjoint union of closed intervals [a_1,b_1], ..., [a_q,b_q]."""

    intervals: tuple

    def __post_init__(self):
        ivs = tuple(
            iv if isinstance(iv, Interval) else Interval(iv[0], iv[1])
            for iv in self.intervals
        )
        ends = [x for iv in ivs for x in (iv.a, iv.b)]
        if any(e2 <= e1 for e1, e2 in zip(ends, ends[1:])):
            raise ValueError(f"support intervals must be strictly ordered: {ends}")
        object.__setattr__(self, "intervals", ivs)

    @property
    def q(self) -> int:
        return len(self.intervals)

    @property
    def endpoints(self) -> np.ndarray:
        return np.array([x for iv in self.intervals for x in (iv.a, iv.b)])

    def sign(self, alpha: int) -> float:
        """Sign of Im X^(1/2)(lambda + i0) on interval alpha: (-1)^(q-1-alpha)."""
        return -1.0 if (self.q - 1 - alpha) % 2 else 1.0

    def locate(self, lam: float, tol: float = 0.0):
        for alpha, iv in enumerate(self.intervals):
            if iv.a - tol <= lam <= iv.b + tol:
                return alpha
        return None

    def in_support(self, lam) -> np.ndarray:
        lam = np.asarray(lam)
        hit = np.zeros(lam.shape, dtype=bool)
        for iv in self.intervals:
            hit |= (lam >= iv.a) & (lam <= iv.b)
        return hit

    def envelope(self) -> Interval:
        return Interval(self.intervals[0].a, self.intervals[-1].b)

    def gaps(self):
        return [Interval(self.intervals[i].b, self.intervals[i + 1].a)
                for i in range(self.q - 1)]


@dataclass(frozen=True)
class ScaleMap:
    """Affine change of variables x = s*lambda + t."""

    s: float = 1.0
    t: float = 0.0

    @property
    def is_identity(self) -> bool:
        return self.s == 1.0 and self.t == 0.0

    def forward(self, lam):
        return self.s * np.asarray(lam) + self.t

    def backward(self, x):
        return (np.asarray(x) - self.t) / self.s

    def log_partition_shift(self, n: int, beta: float) -> float:
        """log Q[V] - log Q[W] for W the rescaled potential: changing
        variables multiplies the integrand by s^(-n - beta n(n-1)/2)."""
        return -(n + beta * n * (n - 1) / 2.0) * np.log(self.s)


# ---------------------------------------------------------------------------
# Equilibrium measure

@dataclass
class EquilibriumMeasure:
    """Solved equilibrium data.  Treated as immutable after construction."""

    support: Support
    P_coeffs: np.ndarray          # ascending
    masses: np.ndarray
    v_star: float
    energy: float
    scale: ScaleMap = field(default_factory=ScaleMap)
    _rho_modes: dict = field(default_factory=dict, repr=False)

    @property
    def q(self) -> int:
        return self.support.q

    def P(self, z):
        return np.polynomial.polynomial.polyval(z, self.P_coeffs)

    def sqrtX(self, z):
        return sqrt_multicut(z, self.support.intervals)

    def other_factor(self, alpha: int, lam):
        """R_alpha(lam) = |X(lam)|^(1/2) / |W_alpha(lam)|^(1/2) on interval
        alpha: the square root of the product of the other intervals'
        quadratic factors, positive on interval alpha."""
        lam = np.asarray(lam, dtype=float)
        prod = np.ones_like(lam)
        for j, iv in enumerate(self.support.intervals):
            if j != alpha:
                prod = prod * np.abs((lam - iv.a) * (lam - iv.b))
        return np.sqrt(prod)

    def rho_modes(self, M: int = 96) -> list:
        """Weighted-mode coefficients r^(alpha): rho restricted to interval
        alpha equals sum_k r_k T_k(x)/(pi sqrt|W_alpha|).  Cached per M."""
        if M not in self._rho_modes:
            out = []
            for alpha, iv in enumerate(self.support.intervals):
                theta = lobatto_theta(M)
                lam = iv.lambda_of_theta(theta)
                # pi * d * sin(theta) * rho(lam); sqrt|W| = d sin(theta)
                vals = (0.5 * iv.d**2 * np.sin(theta) ** 2
                        * self.support.sign(alpha) * self.P(lam)
                        * self.other_factor(alpha, lam))
                out.append(cheb_coeffs(vals))
            self._rho_modes[M] = out
        return self._rho_modes[M]


def density(eq: EquilibriumMeasure, lam) -> np.ndarray:
    """Equilibrium density; zero off the support and at endpoints."""
    lam = np.asarray(lam, dtype=float)
    scalar = lam.ndim == 0
    lam = np.atleast_1d(lam)
    out = np.zeros_like(lam)
    for alpha, iv in enumerate(eq.support.intervals):
        m = (lam >= iv.a) & (lam <= iv.b)
        if np.any(m):
            w = np.abs((lam[m] - iv.a) * (lam[m] - iv.b))
            out[m] = (eq.support.sign(alpha) * eq.P(lam[m])
                      * np.sqrt(w) * eq.other_factor(alpha, lam[m])) / (2.0 * np.pi)
    return float(out[0]) if scalar else out


def masses(eq: EquilibriumMeasure, M: int = 96) -> np.ndarray:
    """Per-interval masses; the zeroth weighted-mode coefficients."""
    mu = np.array([r[0] for r in eq.rho_modes(M)])
    if abs(mu.sum() - 1.0) > 1e-8:
        raise ConsistencyError(
            f"equilibrium masses sum to {mu.sum():.12f}, expected 1")
    return mu


# ---------------------------------------------------------------------------
# Endpoint equations

def _moments(Vp: np.ndarray, intervals, q: int) -> np.ndarray:
    """m_k = [z^(-1)] V'(z) z^k X^(-1/2)(z) for k = 0..q, exactly."""
    deg = len(Vp) - 1
    K = deg + q + 2
    t = inv_sqrtX_series(intervals, K)
    out = np.zeros(q + 1)
    for k in range(q + 1):
        s = 0.0
        for m in range(deg + 1):
            j = m + k - q + 1
            if 0 <= j <= K:
                s += Vp[m] * t[j]
        out[k] = s
    return out


def compute_P(V: Potential, support: Support) -> np.ndarray:
    """Polynomial factor of the density, ascending coefficients.

    P(z) = (1/2 pi i) * contour integral of (V'(z)-V'(zeta)) /
    ((z-zeta) X^(1/2)(zeta)) d zeta, evaluated exactly through the Laurent
    coefficients of X^(-1/2); degree = deg V' - q.
    """
    Vp = V.deriv_coeffs
    deg = len(Vp) - 1
    q = support.q
    K = deg + 2
    t = inv_sqrtX_series(support.intervals, K)
    Pc = np.zeros(max(deg - q + 1, 1))
    for i in range(deg - q + 1):
        s = 0.0
        for m in range(i + 1, deg + 1):
            j = m - i - q
            if 0 <= j <= K:
                s += Vp[m] * t[j]
        Pc[i] = s
    return Pc


def _gap_integrals(Pc: np.ndarray, support: Support, n: int = 96) -> np.ndarray:
    """integral over each gap of P(lambda) X^(1/2)(lambda) dlambda (real
    branch; overall sign irrelevant for the root condition)."""
    x, w = np.polynomial.legendre.leggauss(n)
    out = np.zeros(support.q - 1)
    ends = support.endpoints
    for i, gap in enumerate(support.gaps()):
        lam = gap.c + gap.d * x
        X = np.ones_like(lam)
        for e in ends:
            X = X * (lam - e)
        out[i] = gap.d * np.sum(
            w * np.polynomial.polynomial.polyval(lam, Pc) * np.sqrt(np.abs(X)))
    return out


def endpoint_residuals(V: Potential, support: Support) -> np.ndarray:
    """The 2q-vector of endpoint-equation residuals (zero at a solution)."""
    q = support.q
    m = _moments(V.deriv_coeffs, support.intervals, q)
    res = np.concatenate([m[:q], [m[q] - 2.0]])
    if q > 1:
        Pc = compute_P(V, support)
        res = np.concatenate([res, _gap_integrals(Pc, support)])
    return res


def solve_support(V: Potential, q: int, init: Support,
                  tol: float = 1e-12, max_iter: int = 120) -> Support:
    """Damped Newton iteration on the endpoint equations.

    The caller supplies the cut count and an ordered initial guess; the
    solver reports divergence rather than searching globally, and rejects
    solutions whose density factor P nearly vanishes on the support.
    """
    if init.q != q:
        raise ValueError(f"initial guess has {init.q} intervals, expected {q}")
    x = init.endpoints.astype(float)

    def resid(e):
        return endpoint_residuals(V, Support(tuple(zip(e[0::2], e[1::2]))))

    r = resid(x)
    rn = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if rn < tol:
            break
        J = np.zeros((2 * q, 2 * q))
        for j in range(2 * q):
            h = 1e-7 * max(1.0, abs(x[j]))
            x2 = x.copy()
            x2[j] += h
            J[:, j] = (resid(x2) - r) / h
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise NoConvergenceError(
                f"singular Jacobian in endpoint solve (residual {rn:.3e})",
                residual=rn) from exc
        lam_damp = 1.0
        while True:
            xn = x + lam_damp * step
            if np.all(np.diff(xn) > 0):
                r2 = resid(xn)
                rn2 = float(np.max(np.abs(r2)))
                if rn2 < rn or lam_damp <= 1e-4:
                    break
            lam_damp /= 2.0
            if lam_damp < 1e-6:
                raise NoConvergenceError(
                    f"endpoint Newton stalled (residual {rn:.3e})", residual=rn)
        x, r, rn = xn, r2, rn2
    else:
        raise NoConvergenceError(
            f"endpoint Newton did not converge (residual {rn:.3e})", residual=rn)

    sup = Support(tuple(zip(x[0::2], x[1::2])))
    _check_genericity(V, sup)
    return sup


def _check_genericity(V: Potential, support: Support):
    """Reject critical/non-generic solutions: P must keep a fixed sign and
    stay away from zero on each interval (matching the density sign)."""
    Pc = compute_P(V, support)
    pmax = 0.0
    pmin = np.inf
    for alpha, iv in enumerate(support.intervals):
        lam = iv.lambda_of_theta(np.linspace(0.0, np.pi, 201))
        vals = support.sign(alpha) * np.polynomial.polynomial.polyval(lam, Pc)
        pmin = min(pmin, float(vals.min()))
        pmax = max(pmax, float(np.abs(vals).max()))
    if pmin <= 1e-8 * pmax:
        raise DegeneracyError(
            f"density factor P nearly vanishes on the support "
            f"(min {pmin:.3e} vs max {pmax:.3e}): non-generic potential")


# ---------------------------------------------------------------------------
# Log-potential, effective potential, energy

def log_potential(eq: EquilibriumMeasure, lam, M: int = 96) -> np.ndarray:
    """L[rho](lambda) = integral of log|lambda - mu| rho(mu) dmu.

    Same-interval contributions use the exact log-kernel action on weighted
    modes (log(d/2) for the mass mode, -T_k/k above); contributions from the
    other intervals and all exterior points use the closed-form kernels, so
    the result is spectrally accurate everywhere on the real line.
    """
    lam = np.asarray(lam, dtype=float)
    scalar = lam.ndim == 0
    lam = np.atleast_1d(lam)
    out = np.zeros_like(lam)
    modes = eq.rho_modes(M)
    for alpha, iv in enumerate(eq.support.intervals):
        r = modes[alpha]
        inside = (lam >= iv.a) & (lam <= iv.b)
        if np.any(inside):
            x = iv.to_x(lam[inside])
            k = np.arange(1, M + 1)
            Tk = np.cos(np.multiply.outer(np.arccos(np.clip(x, -1, 1)), k))
            out[inside] += r[0] * np.log(iv.d / 2.0) - Tk @ (r[1:] / k)
        outside = ~inside
        if np.any(outside):
            ker = cross_log_kernel(lam[outside], iv, M)
            out[outside] += (ker @ r) / np.pi
    return float(out[0]) if scalar else out


def effective_potential(eq: EquilibriumMeasure, V: Potential, lam) -> np.ndarray:
    """v(lambda) - v* with v = 2 L[rho] - V; zero on the support, negative
    strictly outside for an admissible model."""
    return 2.0 * log_potential(eq, lam) - V(lam) - eq.v_star


def _v_star(eq_like: EquilibriumMeasure, V: Potential) -> float:
    iv = eq_like.support.intervals[0]
    return float(2.0 * log_potential(eq_like, iv.c) - V(iv.c))


def energy(eq: EquilibriumMeasure, V: Potential, M: int = 96) -> float:
    """E[V] = L[rho, rho] - integral of V rho, by per-interval quadrature of
    the spectrally evaluated log-potential."""
    total = 0.0
    for iv in eq.support.intervals:
        theta = np.pi * (np.arange(2 * M) + 0.5) / (2 * M)
        lam = iv.lambda_of_theta(theta)
        rho_dlam = density(eq, lam) * iv.d * np.sin(theta) * (np.pi / (2 * M))
        total += float(np.sum((log_potential(eq, lam, M) - V(lam)) * rho_dlam))
    return total


def solve_equilibrium(V: Potential, q: int, init: Support, M: int = 96,
                      tol: float = 1e-12) -> EquilibriumMeasure:
    """Full pipeline: endpoints, P, masses, v*, energy."""
    sup = solve_support(V, q, init, tol=tol)
    Pc = compute_P(V, sup)
    eq = EquilibriumMeasure(sup, Pc, np.zeros(q), 0.0, 0.0)
    eq.masses = masses(eq, M)
    eq.v_star = _v_star(eq, V)
    eq.energy = energy(eq, V, M)
    return eq


def stieltjes(eq: EquilibriumMeasure, V: Potential, z):
    """g(z) = (V'(z) - P(z) X^(1/2)(z)) / 2, the Stieltjes transform of the
    equilibrium density off the support."""
    return 0.5 * (V.deriv(z) - eq.P(z) * eq.sqrtX(z))


# ---------------------------------------------------------------------------
# Rescaling

def rescale(eq: EquilibriumMeasure, V: Potential, margin: float = 0.05):
    """Affine map taking the support into (-1, 1) with the given margin.

    Returns (eq', V', scale) with every derived quantity transformed in
    closed form (no re-solve).  If the support already fits, the identity
    map is returned unchanged.
    """
    hull = eq.support.envelope()
    lo, hi = hull.a, hull.b
    if lo >= -1.0 + margin and hi <= 1.0 - margin:
        return eq, V, ScaleMap()
    s = 2.0 * (1.0 - margin) / (hi - lo)
    t = -s * (hi + lo) / 2.0
    sc = ScaleMap(s, t)
    sup2 = Support(tuple((sc.forward(iv.a), sc.forward(iv.b))
                         for iv in eq.support.intervals))
    q = eq.q
    # rho'(x) = rho(lam)/s  =>  P'(x) = P((x-t)/s) / s^(q+1)
    p = np.polynomial.polynomial.Polynomial(eq.P_coeffs)
    pc = p(np.polynomial.polynomial.Polynomial([-t / s, 1.0 / s])).coef / s ** (q + 1)
    eq2 = EquilibriumMeasure(
        support=sup2,
        P_coeffs=np.asarray(pc, dtype=float),
        masses=eq.masses.copy(),
        v_star=eq.v_star + 2.0 * np.log(s),
        energy=eq.energy + np.log(s),
        scale=sc,
    )
    return eq2, V.shifted_scaled(s, t), sc


def gaussian_equilibrium(iv: Interval | None = None) -> tuple:
    """Reference model: V = 2(lambda-c)^2/d^2 on [a, b] (default [-2, 2],
    i.e. V = lambda^2/2), solved in closed form for convenience in tests."""
    if iv is None:
        iv = Interval(-2.0, 2.0)
    V = gaussian_reference(iv)
    sup = Support(((iv.a, iv.b),))
    Pc = np.array([4.0 / iv.d**2])
    eq = EquilibriumMeasure(sup, Pc, np.array([1.0]), 0.0, 0.0)
    eq.v_star = _v_star(eq, V)
    eq.energy = energy(eq, V)
    return eq, V
