"""Asymptotic expansion of the log partition function.

For the Gaussian reference potential the partition function has the exact
product form (Mehta's integral after rescaling), and its expansion defines

    F(n; beta) = n(g-1) log(n g) + n(2g-1) log(2 pi) - n log Gamma(g)
                 + c_beta log n + c1(beta),        g = beta/2,
    c_beta = beta/24 - 1/4 + 1/(6 beta),

with c1(2) = zeta'(-1).  (The n-linear and log-n coefficients are pinned
numerically against the exact product; see tests.)  A general one-cut
model adds the energy term, an entropy term linear in n, and an O(1)
correction r computed from a double contour integral over an interpolation
between the model and its Gaussian reference:

    r = -(1/2 pi i) * int_0^1 dt * contour integral of dV(z) u1(z,t) dz,
    u1 = K_t[ u0^2 - (2/beta - 1) u0' + d^2/(2 beta) X^(-2) ],

where K_t is the Cauchy-type transform weighted by 1/P_t and u0 collects
the first-order resolvent correction.  The d^2/(2 beta) coefficient of the
two-point term is fixed by the variance form (D-bar phi_z, phi_z) =
(d^2/2) X^(-2); at beta = 2 and half-width 2 it reduces to the bare X^(-2).
Multi-cut models assemble per-interval r values plus a Fredholm
determinant, a cross-interval energy of the mean-shift measure, and the
lattice-sum constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import gammaln

from .basis import Interval, cheb_coeffs, lobatto_theta, sqrt_quadratic
from .chebops import MultiCutModel, entropy_integral
from .equilibrium import EquilibriumMeasure
from .errors import AccuracyError
from .fluctuation import ThetaParams, fractional_offsets, theta_log
from .potentials import Potential, gaussian_reference


# ---------------------------------------------------------------------------
# Gaussian reference: exact product and expansion coefficients

GAUSSIAN_ENERGY = -0.75                      # E for V = lambda^2/2 on [-2, 2]
GAUSSIAN_ENTROPY = 0.5 - np.log(2.0 * np.pi)  # (log rho, rho) of the semicircle
ZETA_PRIME_MINUS_ONE = -0.1654211437004509


def selberg_log_partition(n: int, beta: float) -> float:
    """Exact log of the Gaussian partition integral for V = lambda^2/2:
    the Mehta product after the n-dependent rescaling of variables."""
    g = beta / 2.0
    j = np.arange(1, n + 1)
    return float(
        -(beta * n * (n - 1) / 4.0 + n / 2.0) * np.log(n * beta / 2.0)
        + (n / 2.0) * np.log(2.0 * np.pi)
        + np.sum(gammaln(1.0 + g * j)) - n * gammaln(1.0 + g)
    )


def c_beta(beta: float) -> float:
    return beta / 24.0 - 0.25 + 1.0 / (6.0 * beta)


def F_beta(n: int, beta: float) -> tuple:
    """(F(n; beta) without its additive constant, c_beta).

    The constant c1(beta) is not known in closed form except beta = 2; use
    :func:`fit_c1` to pin it from the exact Gaussian product.
    """
    g = beta / 2.0
    val = (n * (g - 1.0) * np.log(n * g)
           + n * (2.0 * g - 1.0) * np.log(2.0 * np.pi)
           - n * gammaln(g)
           + c_beta(beta) * np.log(n))
    return float(val), c_beta(beta)


_C1_CACHE: dict = {2.0: ZETA_PRIME_MINUS_ONE}


def gaussian_residual(n: int, beta: float) -> float:
    """log(Q*/n!) minus all n-dependent expansion terms: converges to the
    additive constant c1(beta) at rate O(1/n)."""
    g = beta / 2.0
    F, _ = F_beta(n, beta)
    return (selberg_log_partition(n, beta) - gammaln(n + 1)
            - g * n * n * GAUSSIAN_ENERGY
            - n * (g - 1.0) * (GAUSSIAN_ENTROPY - 1.0 - np.log(2.0 * np.pi))
            - F)


def fit_c1(beta: float, n: int = 16384) -> float:
    """Additive constant of F, fitted once per beta from the exact Gaussian
    sequence with one Richardson step, and cached."""
    key = float(beta)
    if key not in _C1_CACHE:
        _C1_CACHE[key] = 2.0 * gaussian_residual(2 * n, beta) - gaussian_residual(n, beta)
    return _C1_CACHE[key]


# ---------------------------------------------------------------------------
# One-cut contour machinery

@dataclass
class OneCutLocal:
    """Analytic data of a one-cut model (possibly an effective per-interval
    model of a multi-cut measure) needed by the contour integrals."""

    iv: Interval
    P: Callable                    # analytic near iv
    Pprime: Callable               # dP/dlambda on the real interval
    dV: Callable                   # V - Gaussian reference, analytic in the annulus
    P0: float
    rho_max: float = 4.0           # largest usable Bernstein radius
    P_roots: Callable | None = None  # roots of P_t for polynomial P


def bernstein_radius(z, iv: Interval) -> np.ndarray:
    """|w| >= 1 of the Joukowski preimage: level curves of the ellipse
    family around the interval."""
    u = (np.asarray(z, dtype=complex) - iv.c) / iv.d
    s = np.sqrt(u - 1.0) * np.sqrt(u + 1.0)
    return np.maximum(np.abs(u + s), np.abs(u - s))


def onecut_local(eq: EquilibriumMeasure, V: Potential) -> OneCutLocal:
    """Local data for a plain one-cut polynomial model."""
    if eq.q != 1:
        raise ValueError("onecut_local requires q = 1")
    iv = eq.support.intervals[0]
    Pc = eq.P_coeffs
    Ppc = np.polynomial.polynomial.polyder(Pc) if len(Pc) > 1 else np.zeros(1)
    V0 = gaussian_reference(iv)
    dVc = np.zeros(max(len(V.coeffs), len(V0.coeffs)))
    dVc[:len(V.coeffs)] += V.coeffs
    dVc[:len(V0.coeffs)] -= V0.coeffs

    def roots_of_Pt(t):
        if len(Pc) == 1:
            return np.zeros(0, dtype=complex)
        ct = np.array(Pc, dtype=float) * t
        ct[0] += (1.0 - t) * 4.0 / iv.d**2
        return np.polynomial.polynomial.polyroots(ct)

    return OneCutLocal(
        iv=iv,
        P=lambda z: np.polynomial.polynomial.polyval(z, Pc),
        Pprime=lambda z: np.polynomial.polynomial.polyval(z, Ppc),
        dV=lambda z: np.polynomial.polynomial.polyval(z, dVc),
        P0=4.0 / iv.d**2,
        P_roots=roots_of_Pt,
    )


def effective_locals(model: MultiCutModel) -> list:
    """Per-interval effective one-cut data for a multi-cut model.

    The effective potential of interval alpha is, up to an irrelevant
    constant, V minus twice the log potentials of the other cuts, scaled by
    the inverse mass; the branch of each log points away from interval
    alpha so the continuation is analytic in the working annulus.
    """
    eq, V = model.eq, model.V
    sup = eq.support
    out = []
    modes_M = 128
    for alpha, iv in enumerate(sup.intervals):
        mu = eq.masses[alpha]
        sgn = sup.sign(alpha)
        others = [(ap, sup.intervals[ap]) for ap in range(sup.q) if ap != alpha]

        def Pfun(z, alpha=alpha, sgn=sgn, mu=mu, others=others):
            val = np.asarray(np.polynomial.polynomial.polyval(z, eq.P_coeffs),
                             dtype=complex)
            for ap, ivp in others:
                f = sqrt_quadratic(z, ivp)
                val = val * (f if ivp.b < sup.intervals[alpha].a else -f)
            return sgn * val / mu

        theta = lobatto_theta(modes_M)
        lam = iv.lambda_of_theta(theta)
        Pvals = np.real(Pfun(lam + 0j))
        Pder = np.polynomial.chebyshev.chebder(cheb_coeffs(Pvals)) / iv.d

        def Pprime(lamr, iv=iv, Pder=Pder):
            return np.polynomial.chebyshev.chebval(iv.to_x(lamr), Pder)

        # quadrature data of the other cuts' densities for the log potentials
        pools = []
        for ap, ivp in others:
            th, w = np.pi * (np.arange(160) + 0.5) / 160, np.pi / 160
            mup = ivp.lambda_of_theta(th)
            dens = (sup.sign(ap) * eq.P(mup) * eq.other_factor(ap, mup)
                    * 0.5 / np.pi * ivp.d**2 * np.sin(th) ** 2)
            side = 1.0 if ivp.b < iv.a else -1.0   # branch away from interval alpha
            pools.append((mup, dens * w, side))

        def dV(z, mu=mu, pools=pools, iv=iv):
            z = np.asarray(z, dtype=complex)
            val = np.asarray(V(z), dtype=complex)
            for mup, dw, side in pools:
                val = val - 2.0 * np.log(side * (z[..., None] - mup)) @ dw
            return val / mu - gaussian_reference(iv)(z)

        gapdist = min(abs(iv.a - ivp.b) if ivp.b < iv.a else abs(ivp.a - iv.b)
                      for _, ivp in others)
        reach = 1.0 + 0.85 * gapdist / iv.d
        out.append(OneCutLocal(iv=iv, P=Pfun, Pprime=Pprime, dV=dV,
                               P0=4.0 / iv.d**2,
                               rho_max=reach + np.sqrt(max(reach**2 - 1.0, 1e-12))))
    return out


def _sigma_grid(iv: Interval, m: int):
    theta = np.pi * (np.arange(m) + 0.5) / m
    return iv.lambda_of_theta(theta), theta, np.pi / m


def u0(z, t: float, loc: OneCutLocal, beta: float, m: int = 256):
    """First resolvent correction of the t-interpolated model, closed form:

    u0(z) = (2/beta - 1) [ -W^(-1/2)(z)/(2 pi) * A_t(z)
                           - (z-c)/(2 W(z)) + 1/(2 W^(1/2)(z)) ],
    A_t(z) = integral over the cut of (log P_t)'(lam) |W(lam)|^(1/2) / (z-lam).
    """
    pref = 2.0 / beta - 1.0
    if pref == 0.0:
        return np.zeros_like(np.asarray(z, dtype=complex))
    z = np.asarray(z, dtype=complex)
    iv = loc.iv
    lam, theta, w = _sigma_grid(iv, m)
    Pt = loc.P0 + t * (np.real(loc.P(lam + 0j)) - loc.P0)
    f = t * loc.Pprime(lam) / Pt
    ker = (np.sin(theta) ** 2 * f)[None, :] / (z.reshape(-1, 1) - lam[None, :])
    A = iv.d**2 * w * ker.sum(axis=1)
    sW = sqrt_quadratic(z.ravel(), iv)
    X = (z.ravel() - iv.a) * (z.ravel() - iv.b)
    out = pref * (-A / (2.0 * np.pi) / sW - (z.ravel() - iv.c) / (2.0 * X)
                  + 0.5 / sW)
    return out.reshape(z.shape)


def u0_deriv(z, t: float, loc: OneCutLocal, beta: float, m: int = 256):
    """d/dz of :func:`u0`, differentiated analytically term by term."""
    pref = 2.0 / beta - 1.0
    if pref == 0.0:
        return np.zeros_like(np.asarray(z, dtype=complex))
    z = np.asarray(z, dtype=complex)
    iv = loc.iv
    lam, theta, w = _sigma_grid(iv, m)
    Pt = loc.P0 + t * (np.real(loc.P(lam + 0j)) - loc.P0)
    f = t * loc.Pprime(lam) / Pt
    zs = z.reshape(-1, 1)
    base = (np.sin(theta) ** 2 * f)[None, :]
    A = iv.d**2 * w * (base / (zs - lam[None, :])).sum(axis=1)
    dA = -iv.d**2 * w * (base / (zs - lam[None, :]) ** 2).sum(axis=1)
    zf = z.ravel()
    sW = sqrt_quadratic(zf, iv)
    X = (zf - iv.a) * (zf - iv.b)
    zc = zf - iv.c
    d_invsW = -zc / (X * sW)
    term1 = -(dA / sW + A * d_invsW) / (2.0 * np.pi)
    term2 = -0.5 / X + zc * zc / X**2
    term3 = 0.5 * d_invsW
    return (pref * (term1 + term2 + term3)).reshape(z.shape)


def _ellipse(iv: Interval, rho: float, m: int):
    phi = 2.0 * np.pi * (np.arange(m) + 0.5) / m
    wphi = rho * np.exp(1j * phi)
    z = iv.c + 0.5 * iv.d * (wphi + 1.0 / wphi)
    dz = 0.5 * iv.d * (wphi - 1.0 / wphi) * 1j * (2.0 * np.pi / m)
    return z, dz


def _r_beta_pass(loc: OneCutLocal, beta: float, nt: int, m_in: int, m_out: int,
                 rho_in: float, rho_out: float, m_sigma: int) -> float:
    iv = loc.iv
    zeta, wz = _ellipse(iv, rho_in, m_in)
    zz, wzz = _ellipse(iv, rho_out, m_out)
    Xz = (zeta - iv.a) * (zeta - iv.b)
    dV = loc.dV(zz)
    sX = sqrt_quadratic(zz, iv)
    delta_term = (iv.d**2 / (2.0 * beta)) / Xz**2
    Pz = loc.P(zeta)
    ts = np.linspace(0.0, 1.0, nt)
    vals = np.empty(nt)
    for i, t in enumerate(ts):
        Pt = loc.P0 + t * (Pz - loc.P0)
        if np.abs(Pt).min() < 1e-9 * max(np.abs(Pt).max(), 1.0):
            raise AccuracyError(f"interpolated density factor nearly vanishes "
                                f"on the inner contour at t = {t:.4f}")
        if loc.P_roots is not None:
            roots = loc.P_roots(t)
            if len(roots) and np.min(bernstein_radius(roots, iv)) <= rho_out * 1.02:
                raise AccuracyError(
                    f"zero of the interpolated density factor inside the outer "
                    f"contour at t = {t:.4f}")
        if beta == 2.0:
            N = delta_term
        else:
            u0v = u0(zeta, t, loc, beta, m_sigma)
            N = u0v**2 - (2.0 / beta - 1.0) * u0_deriv(zeta, t, loc, beta, m_sigma) \
                + delta_term
        inner = (N / Pt)[None, :] / (zz[:, None] - zeta[None, :])
        u1 = (inner * wz[None, :]).sum(axis=1) / (2j * np.pi * sX)
        vals[i] = np.real((dV * u1 * wzz).sum() / (-2j * np.pi))
    coarse = np.trapezoid(vals[::2], ts[::2])
    fine = np.trapezoid(vals, ts)
    return float((4.0 * fine - coarse) / 3.0)


def u1(z, t: float, loc: OneCutLocal, beta: float, rho_in: float = 1.35,
       m_in: int = 512, m_sigma: int = 256):
    """Second resolvent correction by contour quadrature of the weighted
    Cauchy transform; `z` must lie outside the inner contour."""
    z = np.asarray(z, dtype=complex)
    iv = loc.iv
    if np.any(bernstein_radius(z, iv) <= rho_in):
        raise AccuracyError("evaluation point inside the transform contour")
    zeta, wz = _ellipse(iv, rho_in, m_in)
    Xz = (zeta - iv.a) * (zeta - iv.b)
    Pt = loc.P0 + t * (loc.P(zeta) - loc.P0)
    N = (iv.d**2 / (2.0 * beta)) / Xz**2
    if beta != 2.0:
        N = N + u0(zeta, t, loc, beta, m_sigma)**2 \
            - (2.0 / beta - 1.0) * u0_deriv(zeta, t, loc, beta, m_sigma)
    inner = (N / Pt)[None, :] / (z.reshape(-1, 1) - zeta[None, :])
    vals = (inner * wz[None, :]).sum(axis=1) / (2j * np.pi * sqrt_quadratic(z.ravel(), iv))
    return vals.reshape(z.shape)


def r_beta(loc: OneCutLocal, beta: float, nt: int = 33,
           rho_in: float | None = None, rho_out: float | None = None,
           m_in: int = 256, m_out: int = 384, m_sigma: int = 256,
           refine_tol: float = 5e-7) -> float:
    """O(1) correction of the one-cut expansion, with node-doubling control.

    Contours are Bernstein ellipses (inner for the transform, outer for the
    final integral) chosen inside `loc.rho_max`; the result must be stable
    under doubling all node counts.
    """
    top = min(loc.rho_max, 2.4)
    if rho_out is None:
        rho_out = 1.0 + 0.80 * (top - 1.0)
    if rho_in is None:
        rho_in = 1.0 + 0.45 * (top - 1.0)
    val = _r_beta_pass(loc, beta, nt, m_in, m_out, rho_in, rho_out, m_sigma)
    fine = _r_beta_pass(loc, beta, 2 * nt - 1, 2 * m_in, 2 * m_out,
                        rho_in, rho_out, 2 * m_sigma)
    if abs(fine - val) > refine_tol * max(1.0, abs(fine)):
        raise AccuracyError(
            f"contour refinement drift {abs(fine - val):.3e} in r",
            residual=abs(fine - val))
    return fine


def b2_closed_forms(eq: EquilibriumMeasure) -> dict:
    """Candidate closed forms of the beta = 2 correction for a one-cut model:
    the scale-invariant -(1/24) log(P(a)P(b)/P0^2) and the printed variant
    with prefactor 2/(3 (b-a)^2) (they coincide at half-width 2)."""
    iv = eq.support.intervals[0]
    Pa = float(eq.P(iv.a))
    Pb = float(eq.P(iv.b))
    P0 = 4.0 / iv.d**2
    logterm = np.log(Pa * Pb / P0**2)
    return {
        "corrected": float(-logterm / 24.0),
        "printed": float(-2.0 / (3.0 * (iv.b - iv.a) ** 2) * logterm),
        "P_edge": [Pa, Pb],
        "P0": P0,
    }


# ---------------------------------------------------------------------------
# Report assembly

@dataclass
class ExpansionReport:
    """Term-by-term expansion of log(Q/n!) for the solved model."""

    n: int
    beta: float
    q: int
    term_n2: float
    term_F: float
    c1: float
    c_beta: float
    term_n: float
    term_logn: float
    term_r: list
    term_r_mass: float
    term_c1_extra: float
    term_det: float
    term_nu: float
    term_theta: float
    entropy: float
    energy: float

    @property
    def total(self) -> float:
        return (self.term_n2 + self.term_F + self.c1 + self.term_n
                + self.term_logn + sum(self.term_r) + self.term_r_mass
                + self.term_c1_extra + self.term_det + self.term_nu
                + self.term_theta)

    def as_dict(self) -> dict:
        d = {
            "n": self.n, "beta": self.beta, "q": self.q,
            "terms": {
                "energy_n2": self.term_n2,
                "gaussian_reference": self.term_F,
                "c1_constant": self.c1,
                "entropy_linear": self.term_n,
                "log_n_multicut": self.term_logn,
                "r_per_cut": list(self.term_r),
                "r_mass_logs": self.term_r_mass,
                "c1_per_extra_cut": self.term_c1_extra,
                "fredholm_det": self.term_det,
                "nu_cross_energy": self.term_nu,
                "theta_offset": self.term_theta,
            },
            "log_n_coefficient": self.c_beta,
            "entropy": self.entropy,
            "energy": self.energy,
            "total": self.total,
        }
        return d


def log_partition(model: MultiCutModel, n: int, beta: float,
                  with_r: bool = True) -> ExpansionReport:
    """Assemble the expansion of log(Q/n!) at size n.

    Scale-dependent terms use the original-frame energy and entropy; the
    determinant, lattice, and r terms are scale-invariant and evaluated on
    the normalized model, so the total refers to the original potential.
    """
    eq0 = model.eq_original
    q = model.q
    g = beta / 2.0
    ent = entropy_integral(eq0, max(model.M, 128))
    F, cb = F_beta(n, beta)
    c1 = fit_c1(beta)
    mu = model.eq.masses
    term_r = []
    if with_r:
        if q == 1:
            term_r = [r_beta(onecut_local(model.eq, model.V), beta)]
        else:
            term_r = [r_beta(loc, beta) for loc in effective_locals(model)]
    else:
        term_r = [0.0] * q
    if q > 1:
        e = fractional_offsets(mu, n)
        p0 = ThetaParams(Q=model.Q, beta=beta, e=e, x=np.zeros(q), t=model.tilt)
        term_theta = theta_log(p0, scale_x=0.0)
        term_nu = (2.0 / beta) * (g - 1.0) ** 2 * model.nu_cross_energy()
        term_det = -0.5 * model.logdet
    else:
        term_theta = term_nu = term_det = 0.0
    return ExpansionReport(
        n=n, beta=beta, q=q,
        term_n2=g * n * n * eq0.energy,
        term_F=F, c1=c1, c_beta=cb,
        term_n=n * (g - 1.0) * (ent - 1.0 - np.log(2.0 * np.pi)),
        term_logn=cb * (q - 1) * np.log(n),
        term_r=term_r,
        term_r_mass=cb * float(np.sum(np.log(mu))),
        term_c1_extra=(q - 1) * c1,
        term_det=term_det,
        term_nu=term_nu,
        term_theta=term_theta,
        entropy=ent,
        energy=eq0.energy,
    )
