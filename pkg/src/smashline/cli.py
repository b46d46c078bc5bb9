"""Command line front-end: ``smashline moments|coproduct|diffusion|verify``.

Every command writes its data file plus a JSON run summary. Parameters can
come from ``--config file.json`` (keys are the long flag names with dashes
replaced by underscores); explicit flags override the file.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .diffusion import (
    NONSTATIONARY,
    STATIONARY,
    DiffusionParams,
    diffusion_residual,
    gaussian_solution,
    xi_closed_form,
    xi_sector_oracle,
)
from .matrices import VARIANTS
from .matrix_realization import (
    CRANK_NICOLSON,
    RK4,
    BoundaryMassError,
    GaussianMixture,
    GridSpec,
    NumericalInstability,
    duhamel_oracle,
    initial_state,
    relative_l2,
    solve_system,
)
from .qcalculus import Deformation
from .random_walk import OracleGuardExceeded, StepDensity, WalkSpec, moment, moment_oracle
from .smash_algebra import coproduct_power
from .verification import run_all, worker_count

EXIT_OK, EXIT_VALIDATION, EXIT_INVARIANT, EXIT_INSTABILITY = 0, 2, 3, 4

DECISIONS = {
    "q": "exp(2*pi*i/N)",
    "gaussian_prefactor_exponent": -0.5,
    "coproduct_xi_composition": "j_1+...+j_n = l",
    "xi_closed_form": "evaluated as displayed; exact nilpotent exponential is authoritative",
}

DEFAULTS = {
    "moments": dict(
        N=2, n=[3], k_max=2, l_max=1, a=1.0, p1=0.5, theta=1.0, p2=0.5, Q=1.0, oracle=False,
        out="moments.csv", format="csv", summary=None,
    ),
    "coproduct": dict(k=1, l=1, n=2, N=3, out="coproduct.json", summary=None),
    "diffusion": dict(
        N=2, c1=0.5, alpha1=0.5, c2=1.0, alpha2=0.5, lambda_=0.0, lambda_tilde=0.0, t=1.0,
        t_end=1.0, x_min=-10.0, x_max=10.0, dx=0.01, dt=None, scheme=CRANK_NICOLSON, stride=0,
        upwind=False, variant="printed", equation=STATIONARY, sigma0=0.05, init_mean=0.0,
        theta=[0.0, 0.5, 1.0], t_min=0.5, t_max=2.0, n_times=16, time_step=1e-4,
        exponent=-0.5, x_stride=10, out=None, summary=None, no_boundary_check=False,
    ),
    "verify": dict(N=[2, 3, 4], no_solver=False, out="verify.json", summary=None),
}
ACTION_DEFAULTS = {
    "solve": dict(out="solution.csv"),
    "closed-form": dict(out="closed_form.csv"),
    "residual": dict(out="residual.csv", dx=1e-3, x_min=-5.0, x_max=5.0),
}


class ValidationError(ValueError):
    pass


def _flag(p, name, **kw):
    p.add_argument("--" + name.replace("_", "-"), dest=name, default=argparse.SUPPRESS, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smashline", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="JSON file of parameters; flags override it")
        _flag(p, "out", help="output data file")
        _flag(p, "summary", help="run summary JSON (default: <out>.summary.json)")

    m = sub.add_parser("moments", help="exact n-step moment table")
    common(m)
    _flag(m, "N", type=int, help="nilpotency order of xi")
    _flag(m, "n", type=int, nargs="+", help="step count(s)")
    _flag(m, "k_max", type=int)
    _flag(m, "l_max", type=int)
    for name in ("a", "p1", "theta", "p2", "Q"):
        _flag(m, name, type=float)
    _flag(m, "oracle", action="store_true", help="also compute the braided brute-force oracle")
    _flag(m, "format", choices=["csv", "json"])

    c = sub.add_parser("coproduct", help="n-fold coproduct of x^k xi^l as JSON")
    common(c)
    for name in ("k", "l", "n", "N"):
        _flag(c, name, type=int)

    d = sub.add_parser("diffusion", help="solve / closed-form / residual for the diffusion system")
    d.add_argument("action", choices=["solve", "closed-form", "residual"])
    common(d)
    _flag(d, "N", type=int)
    for name in ("c1", "alpha1", "c2", "alpha2", "lambda_tilde", "t", "t_end", "x_min", "x_max", "dx",
                 "dt", "sigma0", "init_mean", "t_min", "t_max", "time_step", "exponent"):
        _flag(d, name, type=float)
    d.add_argument("--lambda", dest="lambda_", type=float, default=argparse.SUPPRESS)
    _flag(d, "theta", type=float, nargs="+")
    _flag(d, "scheme", choices=[CRANK_NICOLSON, RK4])
    _flag(d, "stride", type=int)
    _flag(d, "n_times", type=int)
    _flag(d, "x_stride", type=int)
    _flag(d, "upwind", action="store_true")
    _flag(d, "no_boundary_check", action="store_true")
    _flag(d, "variant", choices=list(VARIANTS), help="D* realisation")
    _flag(d, "equation", choices=[STATIONARY, NONSTATIONARY])

    v = sub.add_parser("verify", help="run invariant suites and the discrepancy ledger")
    common(v)
    _flag(v, "N", type=int, nargs="+")
    _flag(v, "no_solver", action="store_true")
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS[args.command])
    cfg.update(ACTION_DEFAULTS.get(getattr(args, "action", None), {}))
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key, value in vars(args).items():
        if key in cfg:
            cfg[key] = value
    return cfg


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _pair(z):
    z = complex(z)
    return [z.real, z.imag]


def _write_summary(cfg, command, results, started, extra_path=None):
    path = Path(cfg.get("summary") or (str(cfg["out"]) + ".summary.json"))
    echo = {k: v for k, v in cfg.items() if k not in ("summary",)}
    payload = {
        "command": command,
        "version": __version__,
        "config": echo,
        "decisions": DECISIONS,
        "results": results,
        "wall_time_s": round(time.perf_counter() - started, 3),
    }
    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=_pair) + "\n")
    return path


# -- commands -----------------------------------------------------------------


def cmd_moments(cfg: dict) -> int:
    started = time.perf_counter()
    try:
        d = Deformation(int(cfg["N"]))
        step = StepDensity(a=cfg["a"], p1=cfg["p1"], theta=cfg["theta"], p2=cfg["p2"])
        ns = sorted(cfg["n"] if isinstance(cfg["n"], list) else [cfg["n"]])
        walks = [WalkSpec(step, n, d, cfg["Q"]) for n in ns]
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from None
    if cfg["l_max"] >= d.N:
        raise ValidationError(
            f"l_max={cfg['l_max']} violates the nilpotency bound l <= N-1 = {d.N - 1} (xi^N = 0)"
        )
    if cfg["k_max"] < 0 or cfg["l_max"] < 0:
        raise ValidationError("k_max and l_max must be >= 0")
    cells = [(w, k, l) for w in walks for k in range(cfg["k_max"] + 1) for l in range(cfg["l_max"] + 1)]

    def compute(cell):
        w, k, l = cell
        value = moment(k, l, w)
        return value, (moment_oracle(k, l, w) if cfg["oracle"] else None)

    try:
        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            values = list(pool.map(compute, cells))
    except OracleGuardExceeded as exc:
        raise ValidationError(str(exc)) from None

    rows = [(w.n, k, l, v.real, v.imag) for (w, k, l), (v, _) in zip(cells, values)]
    out = Path(cfg["out"])
    if cfg["format"] == "csv":
        out.write_text(_csv_text(["k", "l", "n", "re", "im"], [(k, l, n, re, im) for n, k, l, re, im in rows]))
    else:
        out.write_text(
            json.dumps([{"n": n, "k": k, "l": l, "re": re, "im": im} for n, k, l, re, im in rows], indent=1) + "\n"
        )
    results = {"rows": len(rows)}
    # symmetry forces real moments when l = 0 (no q-phases)
    residue = [(n, k, l, im) for n, k, l, _, im in rows if l == 0 and abs(im) > 1e-12]
    results["imaginary_residue_flags"] = [{"n": n, "k": k, "l": l, "im": im} for n, k, l, im in residue]
    if cfg["oracle"]:
        devs = [abs(v - o) for v, o in values]
        results["oracle_values"] = [
            {"n": w.n, "k": k, "l": l, "re": o.real, "im": o.imag} for (w, k, l), (_, o) in zip(cells, values)
        ]
        results["oracle_max_abs_deviation"] = max(devs, default=0.0)
    _write_summary(cfg, "moments", results, started)
    return EXIT_OK


def cmd_coproduct(cfg: dict) -> int:
    started = time.perf_counter()
    try:
        d = Deformation(int(cfg["N"]))
        e = coproduct_power(int(cfg["k"]), int(cfg["l"]), int(cfg["n"]), d)
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from None
    Path(cfg["out"]).write_text(json.dumps(e.to_json(), sort_keys=True) + "\n")
    _write_summary(cfg, "coproduct", {"terms": len(e.terms)}, started)
    return EXIT_OK


def _diffusion_params(cfg) -> DiffusionParams:
    return DiffusionParams(
        c1=cfg["c1"], alpha1=cfg["alpha1"], c2=cfg["c2"], alpha2=cfg["alpha2"],
        lambda_=cfg["lambda_"], lambda_tilde=cfg["lambda_tilde"], t=cfg["t"],
    )


def cmd_diffusion(cfg: dict, action: str) -> int:
    started = time.perf_counter()
    try:
        d = Deformation(int(cfg["N"]))
        p = _diffusion_params(cfg)
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from None
    if action == "solve":
        results = _diffusion_solve(cfg, d, p)
    elif action == "closed-form":
        results = _diffusion_closed_form(cfg, d, p)
    else:
        results = _diffusion_residual(cfg, d, p)
    _write_summary(cfg, f"diffusion {action}", results, started)
    return EXIT_OK


def _diffusion_solve(cfg, d, p):
    try:
        g = GridSpec(
            x_min=cfg["x_min"], x_max=cfg["x_max"], dx=cfg["dx"], dt=cfg["dt"], t_end=cfg["t_end"],
            scheme=cfg["scheme"], stride=cfg["stride"], upwind=cfg["upwind"],
        )
        if not cfg["sigma0"] > 0:
            raise ValueError("sigma0 must be > 0")
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from None
    if cfg["equation"] == NONSTATIONARY:
        # constant Hamiltonian drifts just shift the first-order coefficients
        solve_p = DiffusionParams(
            c1=p.c1 - p.lambda_ * p.d1, alpha1=p.alpha1, c2=p.c2 - p.lambda_tilde * p.d2, alpha2=p.alpha2, t=p.t
        )
    else:
        solve_p = p
    var0 = cfg["sigma0"] ** 2
    mixtures = [GaussianMixture.single(1.0, cfg["init_mean"], var0) for _ in range(d.N)]
    sol = solve_system(g, solve_p, initial_state(g.x, mixtures), cfg["variant"],
                       check_boundary=not cfg["no_boundary_check"])
    Path(cfg["out"]).write_text(_csv_text(["x", "t", "k", "re", "im"], sol.rows()))
    final = sol.states[-1]
    results = {
        "solver": sol.info,
        "all_components_equal": bool(all(np.array_equal(final[0], c) for c in final[1:])),
        "mass": [_pair(m) for m in sol.final().mass()],
    }
    # rho_{N-1} evolves freely: compare with the heat kernel started at t0 = sigma0^2 / (2 alpha1)
    t0 = var0 / (2.0 * solve_p.alpha1)
    kernel = gaussian_solution(g.x - cfg["init_mean"] + solve_p.c1 * t0, t0 + sol.times[-1], solve_p)
    results["last_component_vs_gaussian_rel_l2"] = relative_l2(final[-1], kernel)
    if d.N <= 3:
        orc = duhamel_oracle(solve_p, mixtures, float(sol.times[-1]), g.x, cfg["variant"])
        results["oracle_rel_l2"] = relative_l2(final, orc.components)
        results["oracle_rel_l2_per_component"] = [
            relative_l2(final[k], orc.components[k]) for k in range(d.N)
        ]
    return results


def _diffusion_closed_form(cfg, d, p):
    if not p.t > 0:
        raise ValidationError("closed-form evaluation needs t > 0")
    x = np.arange(cfg["x_min"], cfg["x_max"] + 0.5 * cfg["dx"], cfg["dx"])
    xp = DiffusionParams(c1=p.c1, alpha1=p.alpha1, t=p.t)
    values = gaussian_solution(x, p.t, xp, cfg["exponent"])
    _, field = diffusion_residual(
        lambda xx, tt: gaussian_solution(xx, tt, xp, cfg["exponent"]), x, [p.t], xp, d,
        dt=min(cfg["time_step"], 0.5 * p.t), return_field=True,
    )
    res = np.zeros_like(x)
    res[1:-1] = np.abs(field[0, 0])
    rows = [(xv, p.t, v, 0.0, r) for xv, v, r in zip(x, values, res)]
    Path(cfg["out"]).write_text(_csv_text(["x", "t", "value_re", "value_im", "residual"], rows))
    xi = []
    for th in cfg["theta"]:
        oracle = xi_sector_oracle(p.t, p, d, variant=cfg["variant"])(th)
        try:
            printed = xi_closed_form(th, p.t, p, d)
        except ValueError as exc:
            xi.append({"check": "xi closed form", "theta": th, "error": str(exc), "oracle_value": _pair(oracle)})
            continue
        xi.append({
            "check": "xi closed form",
            "theta": th,
            "printed_value": _pair(printed),
            "oracle_value": _pair(oracle),
            "abs_diff": abs(printed - oracle),
        })
    return {"gaussian_max_residual": float(res.max()), "xi_sector": xi}


def _diffusion_residual(cfg, d, p):
    if not cfg["dx"] > 0 or not cfg["x_max"] > cfg["x_min"]:
        raise ValidationError("residual grid needs dx > 0 and x_max > x_min")
    x = np.arange(cfg["x_min"], cfg["x_max"] + 0.5 * cfg["dx"], cfg["dx"])
    if not 0 < cfg["t_min"] <= cfg["t_max"] or cfg["n_times"] < 1:
        raise ValidationError("need 0 < t_min <= t_max and n_times >= 1")
    ts = np.linspace(cfg["t_min"], cfg["t_max"], cfg["n_times"])
    xp = DiffusionParams(c1=p.c1, alpha1=p.alpha1, lambda_=p.lambda_, lambda_tilde=p.lambda_tilde)

    def rho(xx, tt):
        return gaussian_solution(xx, tt, xp, cfg["exponent"])

    worst, field = diffusion_residual(
        rho, x, ts, xp, d, variant=cfg["equation"], dt=cfg["time_step"], return_field=True
    )
    stride = max(1, int(cfg["x_stride"]))
    rows = []
    for ti, t in enumerate(ts):
        vals = rho(x, t)
        for i in range(1, x.size - 1, stride):
            rows.append((x[i], t, vals[i], 0.0, abs(field[ti, 0, i - 1])))
    Path(cfg["out"]).write_text(_csv_text(["x", "t", "value_re", "value_im", "residual"], rows))
    return {"max_residual": worst, "exponent": cfg["exponent"], "equation": cfg["equation"]}


def cmd_verify(cfg: dict) -> int:
    started = time.perf_counter()
    Ns = cfg["N"] if isinstance(cfg["N"], list) else [cfg["N"]]
    try:
        Ns = [int(Deformation(int(N)).N) for N in Ns]
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from None
    ledger = run_all(Ns, include_solver=not cfg["no_solver"])
    failures = [e for e in ledger if e["hard"] and not e["passed"]]
    Path(cfg["out"]).write_text(json.dumps({"entries": ledger, "hard_failures": len(failures)},
                                           indent=1, sort_keys=True, default=_pair) + "\n")
    _write_summary(cfg, "verify", {"entries": len(ledger), "hard_failures": len(failures)}, started)
    for e in ledger:
        status = "PASS" if e["passed"] else "FAIL"
        kind = "hard" if e["hard"] else "info"
        print(f"[{status}:{kind}] {e['check']} N={e.get('N', '-')} abs_diff={e['abs_diff']:.3e}")
    return EXIT_INVARIANT if failures else EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "moments":
            return cmd_moments(cfg)
        if args.command == "coproduct":
            return cmd_coproduct(cfg)
        if args.command == "diffusion":
            return cmd_diffusion(cfg, args.action)
        return cmd_verify(cfg)
    except ValidationError as exc:
        print(f"smashline: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalInstability, BoundaryMassError) as exc:
        print(f"smashline: numerical failure: {exc}", file=sys.stderr)
        return EXIT_INSTABILITY
    except ValueError as exc:
        print(f"smashline: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
