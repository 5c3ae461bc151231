"""Command-line driver: config ingestion, orchestration, artifact output.

Subcommands: equilibrium, predict, theta, partition, sample, verify,
lemmas.  All inputs come from a JSON config (flags override the common
fields); all reports are JSON with round-trip float formatting, sample
dumps are CSV.  Exit codes: 0 success, 1 malformed config, 2 accuracy or
insufficient-data failure, 3 model-assumption violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .basis import Interval
from .chebops import ChebSeries, MultiCutModel, build_model, pair
from .equilibrium import (EquilibriumMeasure, Support, effective_potential,
                          endpoint_residuals, solve_equilibrium)
from .errors import (AccuracyError, ConfigError, ConsistencyError,
                     DegeneracyError, InsufficientDataError, LogGasError,
                     NoConvergenceError)
from .fluctuation import (CLTPrediction, ThetaParams, fractional_offsets,
                          multicut_mean_var, onecut_predict, theta_log,
                          theta_moments)
from .lemmas import KernelA, certificate
from .partition import b2_closed_forms, log_partition, onecut_local, r_beta
from .potentials import Potential, TestFunction
from .sampler import ChainConfig, SampleBatch, empirical_stats, gbe_batch, mcmc_sample


# ---------------------------------------------------------------------------
# Config handling

def _canon(obj):
    """Round-trip-stable JSON payload: numpy scalars/arrays to plain types."""
    if isinstance(obj, dict):
        return {k: _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_canon(v) for v in obj.tolist()]
    return obj


def write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(_canon(payload), f, indent=1, sort_keys=True)
        f.write("\n")


def load_config(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: line {exc.lineno}, "
                          f"column {exc.colno}: {exc.msg}") from exc


def _require(cfg: dict, key: str, kind=None):
    if key not in cfg:
        raise ConfigError(f"missing config field: {key!r}")
    val = cfg[key]
    if kind is not None and not isinstance(val, kind):
        raise ConfigError(f"config field {key!r} has wrong type "
                          f"({type(val).__name__})")
    return val


def parse_potential(cfg: dict) -> Potential:
    spec = _require(cfg, "potential", dict)
    if spec.get("type", "polynomial") != "polynomial":
        raise ConfigError("only polynomial potentials are supported")
    coeffs = _require(spec, "coeffs", list)
    try:
        return Potential(tuple(coeffs))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def parse_test_function(cfg: dict) -> TestFunction:
    spec = cfg.get("h", {"type": "polynomial", "coeffs": [0.0, 1.0]})
    if spec.get("type", "polynomial") != "polynomial":
        raise ConfigError("only polynomial test functions are supported")
    return TestFunction.polynomial(spec["coeffs"])


def parse_support_guess(cfg: dict, q: int) -> Support:
    if "support_guess" in cfg:
        try:
            return Support(tuple(tuple(iv) for iv in cfg["support_guess"]))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad support_guess: {exc}") from exc
    if q == 1:
        return Support(((-2.0, 2.0),))
    raise ConfigError("multi-cut runs require an explicit support_guess")


def _n_list(cfg: dict) -> list:
    if "n_range" in cfg:
        a, b = cfg["n_range"]
        return list(range(int(a), int(b) + 1))
    return [int(cfg.get("n", 100))]


def solve_from_config(cfg: dict):
    V = parse_potential(cfg)
    q = int(cfg.get("q", 1))
    guess = parse_support_guess(cfg, q)
    eq = solve_equilibrium(V, q, guess)
    return eq, V


def model_from_config(cfg: dict) -> MultiCutModel:
    eq, V = solve_from_config(cfg)
    return build_model(eq, V, M=int(cfg.get("M", 64)))


# ---------------------------------------------------------------------------
# Commands

def cmd_equilibrium(cfg: dict, out: Path) -> int:
    eq, V = solve_from_config(cfg)
    res = endpoint_residuals(V, eq.support)
    grid = np.concatenate([iv.lambda_of_theta(np.linspace(0.1, np.pi - 0.1, 200))
                           for iv in eq.support.intervals])
    v_on = effective_potential(eq, V, grid)
    hull = eq.support.envelope()
    outside = np.concatenate([
        np.linspace(hull.a - 2.0, hull.a - 1e-3, 250),
        np.linspace(hull.b + 1e-3, hull.b + 2.0, 250),
    ])
    gaps = [np.linspace(g.a + 1e-3, g.b - 1e-3, 100)
            for g in eq.support.gaps()]
    v_out = effective_potential(eq, V, np.concatenate([outside] + gaps)
                                if gaps else outside)
    payload = {
        "support": [[iv.a, iv.b] for iv in eq.support.intervals],
        "P": [float(c) for c in eq.P_coeffs],
        "masses": [float(m) for m in eq.masses],
        "energy": eq.energy,
        "v_star": eq.v_star,
        "residuals": {
            "endpoint_equations": float(np.abs(res).max()),
            "v_constancy_on_support": float(np.abs(v_on).max()),
            "v_max_outside": float(v_out.max()),
            "mass_sum_minus_one": float(eq.masses.sum() - 1.0),
        },
    }
    write_json(out / "equilibrium.json", payload)
    print(f"support {payload['support']}  masses {payload['masses']}")
    return 0


def _prediction(model: MultiCutModel, h: TestFunction, n: int,
                beta: float) -> CLTPrediction:
    if model.q == 1:
        pred = onecut_predict(model, h, beta)
        pred.n = n
        return pred
    return multicut_mean_var(model, h, n, beta)


def cmd_predict(cfg: dict, out: Path) -> int:
    beta = float(_require(cfg, "beta", (int, float)))
    model = model_from_config(cfg)
    h = parse_test_function(cfg)
    ns = _n_list(cfg)
    rows = []
    for n in ns:
        p = _prediction(model, h, n, beta)
        rows.append((n, p))
    n0, p0 = rows[-1]
    payload = p0.as_dict()
    payload["n"] = n0
    write_json(out / "predict.json", payload)
    if len(rows) > 1:
        lines = ["n,mean_shift,mean_theta,var_smooth,var_theta,var_total"]
        for n, p in rows:
            lines.append(f"{n},{p.mean_shift!r},{p.mean_theta!r},"
                         f"{p.var_smooth!r},{p.var_theta!r},{p.var_total!r}")
        (out / "predict_sweep.csv").write_text("\n".join(lines) + "\n")
    print(f"n={n0} beta={beta} mean_shift={p0.mean_total:.6g} "
          f"variance={p0.var_total:.6g} gaussian={p0.gaussian}")
    return 0


def cmd_theta(cfg: dict, out: Path) -> int:
    beta = float(_require(cfg, "beta", (int, float)))
    model = model_from_config(cfg)
    h = parse_test_function(cfg)
    rows = []
    for n in _n_list(cfg):
        if model.q == 1:
            rows.append({"n": n, "log_theta0": 0.0, "mean": 0.0,
                         "variance": 0.0, "offsets": [0.0]})
            continue
        e = fractional_offsets(model.eq.masses, n)
        Ih = model.I_functional(model.series(h))
        p0 = ThetaParams(Q=model.Q, beta=beta, e=e, x=np.zeros(model.q),
                         t=model.tilt, radius=int(cfg.get("theta_radius", 8)))
        mean, var = theta_moments(p0, Ih)
        rows.append({"n": n, "log_theta0": theta_log(p0, scale_x=0.0),
                     "mean": mean, "variance": var, "offsets": list(e)})
    write_json(out / "theta.json", {"beta": beta, "rows": rows})
    print(f"theta rows: {len(rows)}")
    return 0


def cmd_partition(cfg: dict, out: Path) -> int:
    beta = float(_require(cfg, "beta", (int, float)))
    model = model_from_config(cfg)
    n = _n_list(cfg)[-1]
    rep = log_partition(model, n, beta, with_r=bool(cfg.get("with_r", True)))
    payload = rep.as_dict()
    if beta == 2.0 and model.q == 1 and cfg.get("with_r", True):
        num = rep.term_r[0]
        forms = b2_closed_forms(model.eq)
        payload["b2_check"] = {
            "numerical_r": num,
            "corrected_constant": forms["corrected"],
            "printed_constant": forms["printed"],
            "matches_corrected": bool(abs(num - forms["corrected"]) < 1e-4),
            "matches_printed": bool(abs(num - forms["printed"]) < 1e-4),
            "note": ("the two candidates coincide at reference half-width 2; "
                     "the scale-invariant corrected constant is "
                     "-(1/24) log(P(a)P(b)/P0^2)"),
        }
    write_json(out / "partition.json", payload)
    print(f"log(Q/n!) ~ {rep.total:.6f} at n={n}, beta={beta}")
    return 0


def _run_sampler(cfg: dict, eq, V: Potential, beta: float, n: int) -> SampleBatch:
    sp = cfg.get("sampler", {})
    kind = sp.get("kind", "tridiag" if _is_gaussian(V) else "mcmc")
    seed = int(cfg.get("seed", 0))
    if kind == "tridiag":
        if not _is_gaussian(V):
            raise ConfigError("tridiag sampler requires the quadratic potential")
        return gbe_batch(n, beta, int(sp.get("draws", 10000)), seed)
    chain = ChainConfig(
        n=n, beta=beta, potential=V,
        steps=int(sp.get("steps", 4000)),
        burn_in=int(sp.get("burn_in", 1000)),
        proposal_scale=float(sp.get("proposal_scale", 0.5)),
        seed=seed, chains=int(sp.get("chains", 4)),
        thin=sp.get("thin"))
    return mcmc_sample(chain)


def _is_gaussian(V: Potential) -> bool:
    c = np.asarray(V.coeffs)
    return len(c) <= 3 and abs(c[0]) < 1e-14 and (len(c) < 2 or abs(c[1]) < 1e-14)


def cmd_sample(cfg: dict, out: Path) -> int:
    beta = float(_require(cfg, "beta", (int, float)))
    eq, V = solve_from_config(cfg)
    n = _n_list(cfg)[-1]
    batch = _run_sampler(cfg, eq, V, beta, n)
    h = parse_test_function(cfg)
    stats = empirical_stats(batch, h, beta)
    out.mkdir(parents=True, exist_ok=True)
    np.savetxt(out / "samples.csv", batch.configs, delimiter=",")
    payload = stats.as_dict()
    payload.update({"kind": batch.kind, "seed": batch.seed,
                    "acceptance_rate": batch.acceptance_rate,
                    "n": n, "beta": beta})
    write_json(out / "stats.json", payload)
    print(f"{batch.kept} configurations ({batch.kind}), "
          f"N[h] mean {stats.mean:.5f} var {stats.var:.5f}")
    return 0


def cmd_verify(cfg: dict, out: Path) -> int:
    beta = float(_require(cfg, "beta", (int, float)))
    model = model_from_config(cfg)
    h = parse_test_function(cfg)
    n = _n_list(cfg)[-1]
    pred = _prediction(model, h, n, beta)
    batch = _run_sampler(cfg, model.eq_original, parse_potential(cfg), beta, n)
    stats = empirical_stats(batch, h, beta)
    hs = model.series(h)
    rho_w = model.eq.rho_modes(model.M)
    rho_series = ChebSeries(model.eq.support, tuple(rho_w), weighted=True)
    h_rho = pair(hs, rho_series)
    mean_pred = n * h_rho + pred.mean_total
    drift = 5.0 / n
    z_mean = (stats.mean - mean_pred) / max(stats.se_mean, 1e-12)
    z_var = (stats.var - pred.var_total) / max(stats.se_var, 1e-12)
    t = stats.t_grid
    mask = np.abs(t) <= 1.0
    logz = np.log(np.maximum(stats.z_hat[mask], 1e-300))
    A = np.stack([t[mask] ** 2, t[mask], np.ones(mask.sum())], axis=1)
    coef, *_ = np.linalg.lstsq(A, logz, rcond=None)
    fit_resid = float(np.sqrt(np.mean((logz - A @ coef) ** 2)))
    checks = {
        "mean": {"predicted": mean_pred, "empirical": stats.mean,
                 "se": stats.se_mean, "z": float(z_mean),
                 "tolerance": 3.0 + drift / max(stats.se_mean, 1e-12),
                 "pass": bool(abs(stats.mean - mean_pred)
                              <= 3.0 * stats.se_mean + drift)},
        "variance": {"predicted": pred.var_total, "empirical": stats.var,
                     "se": stats.se_var, "z": float(z_var),
                     "pass": bool(abs(z_var) <= 3.0)},
        "logZ_quadratic_fit": {"rms_residual": fit_resid,
                               "curvature": float(coef[0]),
                               "predicted_curvature":
                                   beta * beta * pred.var_total / 8.0,
                               "pass": bool(fit_resid < 0.02)},
    }
    ok = all(c["pass"] for c in checks.values())
    payload = {"n": n, "beta": beta, "prediction": pred.as_dict(),
               "empirical": stats.as_dict(), "checks": checks,
               "pass": bool(ok)}
    write_json(out / "verify.json", payload)
    for name, c in checks.items():
        print(f"{'PASS' if c['pass'] else 'FAIL'} {name}: "
              + ", ".join(f"{k}={v:.5g}" for k, v in c.items()
                          if isinstance(v, (int, float)) and k != "pass"))
    if not ok:
        raise AccuracyError("verification failed; see verify.json")
    return 0


def cmd_lemmas(cfg: dict, out: Path) -> int:
    sp = cfg.get("lemmas", {})
    ka = KernelA(float(sp.get("d", 0.5)))
    ivs = sp.get("intervals", [[-0.9, -0.3], [0.2, 0.8]])
    cert = certificate(ka, Interval(*ivs[0]), Interval(*ivs[1]),
                       kmax=int(sp.get("kmax", 30)))
    write_json(out / "lemmas.json", cert)
    print(f"delta1 = {cert['delta1']:.4f}, decay slope {cert['decay_slope']:.3f}, "
          f"R^2 {cert['decay_r2']:.4f}")
    if cert["delta1"] <= 0:
        raise AccuracyError("spectral gap certificate failed")
    return 0


COMMANDS = {
    "equilibrium": cmd_equilibrium,
    "predict": cmd_predict,
    "theta": cmd_theta,
    "partition": cmd_partition,
    "sample": cmd_sample,
    "verify": cmd_verify,
    "lemmas": cmd_lemmas,
}


def run(config: dict, out_dir: str | Path = "out", mode: str | None = None) -> int:
    """Programmatic entry point: dispatch a config dict to a command."""
    mode = mode or config.get("mode")
    if mode not in COMMANDS:
        raise ConfigError(f"unknown mode {mode!r}; "
                          f"expected one of {sorted(COMMANDS)}")
    return COMMANDS[mode](config, Path(out_dir))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="loggas",
        description="log-gas equilibrium, fluctuation predictions, and "
                    "Monte Carlo verification")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default="out")
        p.add_argument("--seed", type=int)
        p.add_argument("--n", type=str,
                       help="particle count, or a range like 100..140")
        p.add_argument("--beta", type=float)
        p.add_argument("--tol", type=float)
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if not isinstance(cfg, dict) or not cfg:
            raise ConfigError("config must be a non-empty JSON object")
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.beta is not None:
            cfg["beta"] = args.beta
        if args.tol is not None:
            cfg["tol"] = args.tol
        if args.n is not None:
            if ".." in args.n:
                a, b = args.n.split("..")
                cfg["n_range"] = [int(a), int(b)]
            else:
                cfg["n"] = int(args.n)
        return run(cfg, args.out, args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (AccuracyError, NoConvergenceError, InsufficientDataError) as exc:
        print(f"accuracy error: {exc}", file=sys.stderr)
        return 2
    except (DegeneracyError, ConsistencyError) as exc:
        print(f"model assumption violated: {exc}", file=sys.stderr)
        return 3
    except LogGasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
