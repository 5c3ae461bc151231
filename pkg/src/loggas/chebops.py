"""Chebyshev-spectral realization of the log-kernel operator algebra.

Two coefficient spaces per support interval [a, b] (half-width d):

* smooth series: f = sum_k f_k T_k(x), for test functions and images of the
  log kernel;
* weighted series: u = sum_k u_k e_k, e_k = T_k(x)/(pi sqrt|W|), for
  densities and images of the finite-Hilbert-transform operator.

In these bases the operators are nearly explicit:

    D:  smooth -> weighted,  (D f)_k = k f_k                 (per interval)
    L on its own interval:   L e_0 = log(d/2),  L e_k = -T_k/k
    L across intervals:      closed-form kernels (joukowski map), so the
                             cross blocks decay like exp(-(k+k') log rho).

The symmetrized D enters only through quadratic forms and through its
action on smooth functions, where it coincides with D, so a single mode
multiplier serves everywhere.  The resolvent (1 - D L~)^(-1) and its
adjoint (1 - L~ D)^(-1) are truncated dense matrices over the stacked
coefficient vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .basis import (cheb_coeffs, cheb_eval, cross_log_kernel, lobatto_theta,
                    logsin_weights)
from .equilibrium import EquilibriumMeasure, Support, rescale
from .errors import DegeneracyError, AccuracyError
from .potentials import Potential, TestFunction


# ---------------------------------------------------------------------------
# Series container

@dataclass(frozen=True)
class ChebSeries:
    """Per-interval Chebyshev coefficients over a support.

    `weighted` distinguishes densities (coefficients of the weighted modes
    e_k) from plain T_k series; mixing the two in arithmetic is an error.
    """

    support: Support
    coeffs: tuple
    weighted: bool = False

    def __post_init__(self):
        object.__setattr__(self, "coeffs",
                           tuple(np.asarray(c, dtype=float) for c in self.coeffs))
        if len(self.coeffs) != self.support.q:
            raise ValueError("one coefficient vector per support interval required")

    @property
    def M(self) -> int:
        return len(self.coeffs[0]) - 1

    def stacked(self) -> np.ndarray:
        return np.concatenate(self.coeffs)

    def tail_ratio(self) -> float:
        return max(
            float(np.abs(c[-1]) / max(np.abs(c).max(), 1e-300)) for c in self.coeffs)

    def eval(self, lam) -> np.ndarray:
        """Pointwise values; zero off the support."""
        lam = np.asarray(lam, dtype=float)
        scalar = lam.ndim == 0
        lam = np.atleast_1d(lam)
        out = np.zeros_like(lam)
        for iv, c in zip(self.support.intervals, self.coeffs):
            m = (lam >= iv.a) & (lam <= iv.b)
            if np.any(m):
                vals = cheb_eval(c, iv.to_x(lam[m]))
                if self.weighted:
                    w = np.abs((lam[m] - iv.a) * (lam[m] - iv.b))
                    vals = vals / (np.pi * np.sqrt(np.maximum(w, 1e-300)))
                out[m] = vals
        return float(out[0]) if scalar else out

    def __add__(self, other: "ChebSeries") -> "ChebSeries":
        if self.weighted != other.weighted:
            raise ValueError("cannot add weighted and smooth series")
        return ChebSeries(self.support,
                          tuple(a + b for a, b in zip(self.coeffs, other.coeffs)),
                          self.weighted)

    def __rmul__(self, s: float) -> "ChebSeries":
        return ChebSeries(self.support, tuple(s * c for c in self.coeffs),
                          self.weighted)


def _from_stacked(support: Support, vec: np.ndarray, M: int,
                  weighted: bool) -> ChebSeries:
    parts = tuple(vec[alpha * (M + 1):(alpha + 1) * (M + 1)]
                  for alpha in range(support.q))
    return ChebSeries(support, parts, weighted)


def cheb_transform(f, support: Support, M: int,
                   tail_tol: float = 1e-10) -> ChebSeries:
    """Smooth series of a function via the cosine transform on M+1 Lobatto
    nodes per interval.  A non-decaying tail sets `tail_warning` on the
    result rather than raising."""
    coeffs = []
    for iv in support.intervals:
        vals = np.asarray(f(iv.lambda_of_theta(lobatto_theta(M))), dtype=float)
        coeffs.append(cheb_coeffs(vals))
    s = ChebSeries(support, tuple(coeffs))
    object.__setattr__(s, "tail_warning", s.tail_ratio() > tail_tol)
    return s


# ---------------------------------------------------------------------------
# Elementary operator actions

def apply_D(h: ChebSeries, alpha: int | None = None) -> ChebSeries:
    """Finite-Hilbert-transform operator on a smooth series: mode k of
    interval alpha maps to k times the weighted mode k.  With `alpha`, only
    that interval's block is kept."""
    if h.weighted:
        raise ValueError("apply_D expects a smooth series")
    k = np.arange(h.M + 1, dtype=float)
    out = []
    for j, c in enumerate(h.coeffs):
        if alpha is None or j == alpha:
            out.append(k * c)
        else:
            out.append(np.zeros_like(c))
    return ChebSeries(h.support, tuple(out), weighted=True)


def apply_L(u: ChebSeries, mode: str = "full") -> ChebSeries:
    """Log-kernel operator on a weighted series, returning a smooth series.

    mode = 'diag' keeps only same-interval blocks (the block-diagonal
    operator), 'off' only the cross blocks, 'full' their sum.
    """
    if not u.weighted:
        raise ValueError("apply_L expects a weighted (density-type) series")
    M = u.M
    sup = u.support
    out = [np.zeros(M + 1) for _ in range(sup.q)]
    if mode in ("diag", "full"):
        for alpha, iv in enumerate(sup.intervals):
            c = u.coeffs[alpha]
            o = np.zeros(M + 1)
            o[0] = np.log(iv.d / 2.0) * c[0]
            k = np.arange(1, M + 1)
            o[1:] = -c[1:] / k
            out[alpha] += o
    if mode in ("off", "full") and sup.q > 1:
        theta = lobatto_theta(M)
        for alpha, iv in enumerate(sup.intervals):
            lam = iv.lambda_of_theta(theta)
            vals = np.zeros(M + 1)
            for ap, ivp in enumerate(sup.intervals):
                if ap == alpha:
                    continue
                ker = cross_log_kernel(lam, ivp, M)      # (nodes, k)
                vals = vals + (ker @ u.coeffs[ap]) / np.pi
            out[alpha] += cheb_coeffs(vals)
    return ChebSeries(sup, tuple(out))


def pair(f: ChebSeries, u: ChebSeries) -> float:
    """L2 inner product between a smooth series and a weighted series
    (either order): sum_k f_k u_k (1+delta_k0)/2 per interval."""
    if f.weighted == u.weighted:
        raise ValueError("pairing requires one smooth and one weighted series")
    total = 0.0
    for cf, cu in zip(f.coeffs, u.coeffs):
        w = np.full(len(cf), 0.5)
        w[0] = 1.0
        total += float(np.sum(w * cf * cu))
    return total


def quad_form_barD(h: ChebSeries) -> float:
    """(D-bar h, h) = (1/2) sum over intervals and k>=1 of k h_k^2."""
    if h.weighted:
        raise ValueError("quad_form_barD expects a smooth series")
    total = 0.0
    for c in h.coeffs:
        k = np.arange(len(c), dtype=float)
        total += 0.5 * float(np.sum(k * c * c))
    return total


# ---------------------------------------------------------------------------
# Log-density series (density has square-root edges, so log rho has an
# exactly known log(sin) part in the theta variable)

@dataclass(frozen=True)
class LogSinSeries:
    """Per-interval representation g_alpha(theta) + logsin_coeff*log(sin).

    Used for log rho, whose theta-pullback on interval alpha is
    log(d_alpha |P| R_alpha / (2 pi)) + log sin(theta).
    """

    support: Support
    smooth: tuple          # cosine coefficients of g_alpha
    logsin_coeff: float = 1.0

    def pair_weighted(self, u: ChebSeries) -> float:
        """integral over sigma of (this function) * u dlambda for weighted u:
        u dlambda pulls back to (1/pi) sum u_k cos(k theta) dtheta."""
        lsw = logsin_weights(u.M)
        total = 0.0
        for g, cu in zip(self.smooth, u.coeffs):
            w = np.full(len(cu), 0.5)
            w[0] = 1.0
            n = min(len(g), len(cu))
            total += float(np.sum(w[:n] * g[:n] * cu[:n]))
            total += self.logsin_coeff / np.pi * float(np.sum(lsw * cu))
        return total

    def shifted(self, consts) -> "LogSinSeries":
        """Add a per-interval constant (e.g. -log mu_alpha)."""
        sm = []
        for g, c in zip(self.smooth, consts):
            g2 = np.array(g, copy=True)
            g2[0] += c
            sm.append(g2)
        return LogSinSeries(self.support, tuple(sm), self.logsin_coeff)


def log_density_series(eq: EquilibriumMeasure, M: int) -> LogSinSeries:
    """log rho on each interval as smooth-plus-log(sin) data."""
    sm = []
    for alpha, iv in enumerate(eq.support.intervals):
        theta = lobatto_theta(M)
        lam = iv.lambda_of_theta(theta)
        body = (eq.support.sign(alpha) * eq.P(lam) * eq.other_factor(alpha, lam)
                * iv.d / (2.0 * np.pi))
        sm.append(cheb_coeffs(np.log(body)))
    return LogSinSeries(eq.support, tuple(sm))


def entropy_integral(eq: EquilibriumMeasure, M: int = 128) -> float:
    """(log rho, rho): quadrature with the edge log singularities integrated
    exactly through the log(sin) cosine integrals."""
    logrho = log_density_series(eq, M)
    lsw = logsin_weights(M)
    total = 0.0
    for alpha, iv in enumerate(eq.support.intervals):
        theta = lobatto_theta(M)
        lam = iv.lambda_of_theta(theta)
        # rho dlambda = F(theta) dtheta
        F = (0.5 * iv.d**2 / np.pi * eq.support.sign(alpha) * eq.P(lam)
             * eq.other_factor(alpha, lam) * np.sin(theta) ** 2)
        gvals = np.cos(np.outer(theta, np.arange(M + 1))) @ logrho.smooth[alpha]
        Fc = cheb_coeffs(F * gvals)
        total += np.pi * Fc[0]
        total += float(cheb_coeffs(F) @ lsw)
    return total


# ---------------------------------------------------------------------------
# The nu functional

@dataclass(frozen=True)
class NuFunctional:
    """Per-interval signed measure: quarter masses at the endpoints, minus
    half the normalized arcsine density, minus half D log P-effective.

    On smooth series the pairing reduces to explicit mode weights:
    (nu_alpha, f) = (1/2) sum_{k>=2 even} f_k - (1/4) sum_{k>=1} k p_k f_k,
    p = coefficients of log P-effective on interval alpha.
    """

    support: Support
    logP_eff: tuple        # smooth T-coefficients of log(P R_alpha / mu_alpha)

    def weights(self, alpha: int, M: int) -> np.ndarray:
        w = np.zeros(M + 1)
        w[2::2] = 0.5
        p = self.logP_eff[alpha]
        top = min(len(p), M + 1)
        k = np.arange(1, top)
        w[1:top] -= 0.25 * k * p[1:top]
        return w

    def pair(self, f: ChebSeries) -> float:
        if f.weighted:
            raise ValueError("nu pairs with smooth series")
        return float(sum(self.weights(alpha, f.M) @ f.coeffs[alpha]
                         for alpha in range(self.support.q)))

    def log_potential_from(self, alpha: int, lam) -> np.ndarray:
        """integral of log|lam - mu| d nu_alpha(mu) for lam outside interval
        alpha (used to seed the cross-interval operator on nu)."""
        iv = self.support.intervals[alpha]
        lam = np.asarray(lam, dtype=float)
        p = self.logP_eff[alpha]
        ker = cross_log_kernel(lam, iv, len(p) - 1)
        out = 0.25 * (np.log(np.abs(lam - iv.a)) + np.log(np.abs(lam - iv.b)))
        out = out - 0.5 * ker[..., 0] / np.pi
        k = np.arange(1, len(p))
        out = out - 0.5 * (ker[..., 1:] @ (k * p[1:])) / np.pi
        return out


def nu_functional(eq: EquilibriumMeasure, M: int = 96) -> NuFunctional:
    """Build the mean-shift functional from solved equilibrium data."""
    logP = []
    for alpha, iv in enumerate(eq.support.intervals):
        theta = lobatto_theta(M)
        lam = iv.lambda_of_theta(theta)
        vals = (eq.support.sign(alpha) * eq.P(lam) * eq.other_factor(alpha, lam)
                / eq.masses[alpha])
        if np.min(vals) <= 0:
            raise DegeneracyError("effective density factor not positive on support")
        logP.append(cheb_coeffs(np.log(vals)))
    return NuFunctional(eq.support, tuple(logP))


# ---------------------------------------------------------------------------
# Operator matrices and the multi-cut model

@dataclass(frozen=True)
class OperatorMatrix:
    """Dense truncation of an operator over stacked mode coefficients,
    indexed (alpha, k) with k = 0..M."""

    matrix: np.ndarray
    role: str
    support: Support
    M: int

    def block(self, alpha: int, alpha_p: int) -> np.ndarray:
        n = self.M + 1
        return self.matrix[alpha * n:(alpha + 1) * n,
                           alpha_p * n:(alpha_p + 1) * n]


def _cross_block_matrix(support: Support, M: int) -> np.ndarray:
    """Lambda: weighted -> smooth, cross blocks of the log kernel only."""
    q = support.q
    n = M + 1
    Lam = np.zeros((q * n, q * n))
    theta = lobatto_theta(M)
    for alpha, iv in enumerate(support.intervals):
        lam = iv.lambda_of_theta(theta)
        for ap, ivp in enumerate(support.intervals):
            if ap == alpha:
                continue
            ker = cross_log_kernel(lam, ivp, M) / np.pi   # (nodes, k')
            Lam[alpha * n:(alpha + 1) * n, ap * n:(ap + 1) * n] = cheb_coeffs(ker.T).T
    return Lam


@dataclass
class MultiCutModel:
    """Truncated operator data for a solved equilibrium measure, built in
    coordinates where the support lies inside (-1, 1).

    Exposes everything the fluctuation and partition layers need: the
    cross-block matrix, resolvent solves, the charge-redistribution basis
    psi with its period matrix Q, the mean-shift functional nu, and the
    log-density tilt vector.
    """

    eq: EquilibriumMeasure        # rescaled
    V: Potential                  # rescaled
    scale: "ScaleMap"
    M: int
    eq_original: EquilibriumMeasure
    Lam: np.ndarray               # cross blocks, weighted -> smooth
    kvec: np.ndarray              # D multiplier on stacked coefficients
    nu: NuFunctional
    _lu_smooth: tuple = field(repr=False, default=None)    # I - Lam D
    _lu_weighted: tuple = field(repr=False, default=None)  # I - D Lam
    logdet: float = 0.0           # log det(1 - D-bar L~)
    psi: list = field(default_factory=list)
    psi_basis_coeffs: np.ndarray | None = None
    Q: np.ndarray | None = None
    psi_residual: float = 0.0
    tilt: np.ndarray | None = None
    logrho: LogSinSeries | None = None

    # -- series ingestion ---------------------------------------------------

    @property
    def support(self) -> Support:
        return self.eq.support

    @property
    def q(self) -> int:
        return self.eq.q

    def series(self, h) -> ChebSeries:
        """Smooth series of a test function given in original coordinates."""
        if isinstance(h, ChebSeries):
            return h
        if isinstance(h, TestFunction):
            hs = h.shifted_scaled(self.scale.s, self.scale.t)
            return cheb_transform(hs, self.support, self.M)
        return cheb_transform(lambda x: h(self.scale.backward(x)),
                              self.support, self.M)

    # -- resolvent solves ---------------------------------------------------

    def co_resolvent(self, f: ChebSeries) -> ChebSeries:
        """(1 - L~ D)^(-1) f on smooth series (the adjoint resolvent)."""
        vec = lu_solve(self._lu_smooth, f.stacked())
        return _from_stacked(self.support, vec, self.M, weighted=False)

    def resolvent(self, u: ChebSeries) -> ChebSeries:
        """(1 - D-bar L~)^(-1) u on weighted series."""
        vec = lu_solve(self._lu_weighted, u.stacked())
        return _from_stacked(self.support, vec, self.M, weighted=True)

    def apply_Ltilde(self, u: ChebSeries) -> ChebSeries:
        vec = self.Lam @ u.stacked()
        return _from_stacked(self.support, vec, self.M, weighted=False)

    # -- derived forms -------------------------------------------------------

    def var_form(self, h: ChebSeries) -> float:
        """(G D-bar h, h) = (D-bar h, (1 - L~ D)^(-1) h)."""
        gh = self.co_resolvent(h)
        total = 0.0
        for ch, cg in zip(h.coeffs, gh.coeffs):
            k = np.arange(len(ch), dtype=float)
            total += 0.5 * float(np.sum(k * ch * cg))
        return total

    def nu_form(self, h: ChebSeries) -> float:
        """(G nu, h) = (nu, (1 - L~ D)^(-1) h)."""
        return self.nu.pair(self.co_resolvent(h))

    def psi_inner(self, h: ChebSeries) -> np.ndarray:
        """Vector of (h, psi^(alpha))."""
        return np.array([pair(h, p) for p in self.psi])

    def I_functional(self, h: ChebSeries) -> np.ndarray:
        """I[h] = Q^(-1) (h, psi^(alpha'))."""
        if self.q == 1:
            return np.zeros(1)
        return np.linalg.solve(self.Q, self.psi_inner(h))

    def nu_cross_energy(self) -> float:
        """(L~ G nu, nu): solve (1 - L~ D) m = L~ nu for the smooth function
        m = L~ G nu, then pair with nu."""
        if self.q == 1:
            return 0.0
        theta = lobatto_theta(self.M)
        vals = []
        for alpha, iv in enumerate(self.support.intervals):
            lam = iv.lambda_of_theta(theta)
            v = np.zeros(self.M + 1)
            for ap in range(self.q):
                if ap != alpha:
                    v = v + self.nu.log_potential_from(ap, lam)
            vals.append(cheb_coeffs(v))
        Lnu = ChebSeries(self.support, tuple(vals))
        m = self.co_resolvent(Lnu)
        return self.nu.pair(m)


def _eta_basis(eq: EquilibriumMeasure, M: int) -> list:
    """Weighted series of the functions sgn_alpha * lambda^j / |X|^(1/2),
    j = 0..q-1: the kernel of the multi-interval Hilbert transform, on which
    the log kernel acts as a piecewise constant."""
    sup = eq.support
    out = []
    theta = lobatto_theta(M)
    for j in range(sup.q):
        coeffs = []
        for alpha, iv in enumerate(sup.intervals):
            lam = iv.lambda_of_theta(theta)
            vals = (np.pi * sup.sign(alpha) * lam**j
                    / eq.other_factor(alpha, lam))
            coeffs.append(cheb_coeffs(vals))
        out.append(ChebSeries(sup, tuple(coeffs), weighted=True))
    return out


def solve_psi(eq: EquilibriumMeasure, M: int):
    """Solve for psi^(alpha): the unique kernel elements whose log-kernel
    image is -1 on interval alpha and 0 on the others.

    Returns (psi list, basis coefficient matrix, residual), the residual
    being the largest non-constant mode of L psi over all intervals.
    """
    sup = eq.support
    q = sup.q
    eta = _eta_basis(eq, M)
    Leta = [apply_L(e) for e in eta]
    B = np.zeros((q, q))        # B[alpha', j] = value of L eta_j on interval alpha'
    resid = 0.0
    for j in range(q):
        for ap in range(q):
            c = Leta[j].coeffs[ap]
            B[ap, j] = c[0]
            resid = max(resid, float(np.abs(c[1:]).max()))
    try:
        C = np.linalg.solve(B, -np.eye(q))
    except np.linalg.LinAlgError as exc:
        raise DegeneracyError("singular system for psi basis") from exc
    psi = []
    for alpha in range(q):
        coeffs = [np.zeros(M + 1) for _ in range(q)]
        for j in range(q):
            for ap in range(q):
                coeffs[ap] = coeffs[ap] + C[j, alpha] * eta[j].coeffs[ap]
        psi.append(ChebSeries(sup, tuple(coeffs), weighted=True))
    return psi, C, resid


def build_Q(psi: list, support: Support) -> np.ndarray:
    """Q_{alpha alpha'} = -(L psi^(alpha), psi^(alpha')); with the defining
    property of psi this is the mass of psi^(alpha') on interval alpha,
    which is the zeroth weighted coefficient.  Symmetrized; rejected if not
    positive definite."""
    q = support.q
    Q = np.zeros((q, q))
    for alpha in range(q):
        for ap in range(q):
            Q[alpha, ap] = psi[ap].coeffs[alpha][0]
    asym = float(np.abs(Q - Q.T).max())
    Q = 0.5 * (Q + Q.T)
    ev = np.linalg.eigvalsh(Q)
    if ev.min() <= 0:
        raise DegeneracyError(f"period matrix not positive definite: {ev}")
    if asym > 1e-8 * max(1.0, float(np.abs(Q).max())):
        raise DegeneracyError(f"period matrix asymmetry {asym:.3e}")
    return Q


def resolvent_G(model: MultiCutModel) -> OperatorMatrix:
    """Dense (1 - D-bar L~)^(-1) on stacked weighted coefficients."""
    n = model.q * (model.M + 1)
    A = np.eye(n) - model.kvec[:, None] * model.Lam
    return OperatorMatrix(np.linalg.inv(A), "G", model.support, model.M)


def _assemble(eq_r: EquilibriumMeasure, V_r: Potential, sc, eq0, M: int) -> MultiCutModel:
    sup = eq_r.support
    q = sup.q
    n = M + 1
    Lam = _cross_block_matrix(sup, M) if q > 1 else np.zeros((q * n, q * n))
    kvec = np.tile(np.arange(n, dtype=float), q)
    A_smooth = np.eye(q * n) - Lam * kvec[None, :]
    A_weighted = np.eye(q * n) - kvec[:, None] * Lam
    sign, logabs = np.linalg.slogdet(A_weighted)
    if sign <= 0:
        raise DegeneracyError("truncated resolvent has non-positive determinant")
    model = MultiCutModel(
        eq=eq_r, V=V_r, scale=sc, M=M, eq_original=eq0,
        Lam=Lam, kvec=kvec, nu=nu_functional(eq_r, M),
        logdet=float(logabs),
    )
    model._lu_smooth = lu_factor(A_smooth)
    model._lu_weighted = lu_factor(A_weighted)
    model.logrho = log_density_series(eq_r, M)
    if q > 1:
        model.psi, model.psi_basis_coeffs, model.psi_residual = solve_psi(eq_r, M)
        model.Q = build_Q(model.psi, sup)
        model.tilt = np.linalg.solve(
            model.Q,
            np.array([model.logrho.pair_weighted(p) for p in model.psi]))
    else:
        model.Q = np.zeros((1, 1))
        model.tilt = np.zeros(1)
    return model


def _eq_to_dict(eq: EquilibriumMeasure) -> dict:
    return {
        "support": [[iv.a, iv.b] for iv in eq.support.intervals],
        "P": [float(c) for c in eq.P_coeffs],
        "masses": [float(m) for m in eq.masses],
        "v_star": float(eq.v_star),
        "energy": float(eq.energy),
    }


def _eq_from_dict(d: dict, scale: "ScaleMap" = None) -> EquilibriumMeasure:
    from .equilibrium import ScaleMap
    return EquilibriumMeasure(
        support=Support(tuple(tuple(iv) for iv in d["support"])),
        P_coeffs=np.asarray(d["P"], dtype=float),
        masses=np.asarray(d["masses"], dtype=float),
        v_star=d["v_star"], energy=d["energy"],
        scale=scale if scale is not None else ScaleMap(),
    )


def model_to_json(model: MultiCutModel) -> dict:
    """Serializable snapshot of a built model (matrices row-major).

    Schema (versioned): truncation M, the affine scale map, both the
    normalized and original equilibrium data, the rescaled potential, the
    cross-block matrix, and the derived multi-cut objects.
    """
    return {
        "format": "loggas-model",
        "version": 1,
        "M": model.M,
        "scale": {"s": model.scale.s, "t": model.scale.t},
        "potential": [float(c) for c in model.V.coeffs],
        "equilibrium": _eq_to_dict(model.eq),
        "equilibrium_original": _eq_to_dict(model.eq_original),
        "cross_blocks": [float(x) for x in model.Lam.ravel()],
        "logdet": float(model.logdet),
        "Q": [[float(x) for x in row] for row in model.Q],
        "tilt": [float(x) for x in model.tilt],
        "psi": [[[float(x) for x in c] for c in p.coeffs] for p in model.psi],
        "psi_residual": float(model.psi_residual),
        "logP_eff": [[float(x) for x in c] for c in model.nu.logP_eff],
        "logrho_smooth": [[float(x) for x in c] for c in model.logrho.smooth],
    }


def model_from_json(d: dict) -> MultiCutModel:
    """Rebuild a model from :func:`model_to_json` output without re-solving."""
    from .equilibrium import ScaleMap
    if d.get("format") != "loggas-model" or d.get("version") != 1:
        raise ValueError("not a recognized model document")
    sc = ScaleMap(d["scale"]["s"], d["scale"]["t"])
    eq_r = _eq_from_dict(d["equilibrium"], sc)
    eq0 = _eq_from_dict(d["equilibrium_original"])
    M = int(d["M"])
    q = eq_r.q
    n = M + 1
    Lam = np.asarray(d["cross_blocks"], dtype=float).reshape(q * n, q * n)
    kvec = np.tile(np.arange(n, dtype=float), q)
    sup = eq_r.support
    model = MultiCutModel(
        eq=eq_r, V=Potential(tuple(d["potential"])), scale=sc, M=M,
        eq_original=eq0, Lam=Lam, kvec=kvec,
        nu=NuFunctional(sup, tuple(np.asarray(c, dtype=float)
                                   for c in d["logP_eff"])),
        logdet=float(d["logdet"]),
    )
    model._lu_smooth = lu_factor(np.eye(q * n) - Lam * kvec[None, :])
    model._lu_weighted = lu_factor(np.eye(q * n) - kvec[:, None] * Lam)
    model.logrho = LogSinSeries(sup, tuple(np.asarray(c, dtype=float)
                                           for c in d["logrho_smooth"]))
    model.Q = np.asarray(d["Q"], dtype=float)
    model.tilt = np.asarray(d["tilt"], dtype=float)
    model.psi = [ChebSeries(sup, tuple(np.asarray(c, dtype=float) for c in p),
                            weighted=True) for p in d["psi"]]
    model.psi_residual = float(d["psi_residual"])
    return model


def build_model(eq: EquilibriumMeasure, V: Potential, M: int = 64,
                drift_tol: float = 1e-8, max_M: int = 512) -> MultiCutModel:
    """Build the operator model, doubling the truncation until the period
    matrix, determinant, and resolvent elements are stable."""
    eq_r, V_r, sc = rescale(eq, V)
    model = _assemble(eq_r, V_r, sc, eq, M)
    while model.q > 1 and 2 * M <= max_M:
        finer = _assemble(eq_r, V_r, sc, eq, 2 * M)
        drift = abs(finer.logdet - model.logdet)
        drift = max(drift, float(np.abs(finer.Q - model.Q).max()))
        nf = 2 * M + 1
        G_c = resolvent_G(model).matrix
        G_f = resolvent_G(finer).matrix
        sub = np.concatenate([np.arange(a * nf, a * nf + M + 1)
                              for a in range(model.q)])
        drift = max(drift, float(np.abs(G_f[np.ix_(sub, sub)] - G_c).max()))
        model, M = finer, 2 * M
        if drift < drift_tol:
            return model
    if model.q > 1 and 2 * M > max_M and drift >= drift_tol:
        raise AccuracyError(
            f"operator truncation drift {drift:.3e} above {drift_tol:g} at M={M}",
            residual=drift)
    return model
