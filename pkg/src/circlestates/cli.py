"""circlestates command line: figure data, protocol plans, Wigner grids, validation."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys

import numpy as np
from scipy.optimize import minimize_scalar

from . import coherence, phasespace, protocol, validation
from .config import apply_overrides, resolve
from .errors import DegenerateStateError, UsageError
from .phasespace import _json_default, atomic_write, grid_eval
from .states import SuperpositionSpec, normalization_constant


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    atomic_write(path, buf.getvalue().encode())


def write_json(path, payload):
    atomic_write(path, (json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n").encode())


def _outputs(cfg, stem):
    return os.path.join(cfg.out, stem + ".csv"), os.path.join(cfg.out, stem + ".json")


def _maximise(f, x, y):
    """Refine the grid maximum of y = f(x) with a bounded scalar search."""
    i = int(np.argmax(y))
    if i == 0:
        return {"beta": float(x[0]), "value": float(y[0]), "interior": False}
    lo, hi = x[max(i - 1, 0)], x[min(i + 1, len(x) - 1)]
    r = minimize_scalar(lambda b: -f(b), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return {"beta": float(r.x), "value": float(-r.fun), "interior": True}


def _interior_max(f, x, y):
    """Largest local maximum away from |beta| = 0, if any."""
    peaks = [i for i in range(1, len(y) - 1) if y[i] >= y[i - 1] and y[i] >= y[i + 1]]
    if not peaks:
        return None
    i = max(peaks, key=lambda k: y[k])
    return _maximise(f, x[i - 1 : i + 2], y[i - 1 : i + 2])


def cmd_fig1(cfg):
    betas = np.linspace(0.0, cfg.beta_max, cfg.beta_points)
    cols = {n: protocol.line_probability(n, betas) for n in (0, 1, 2)}
    csv_path, meta_path = _outputs(cfg, "fig1")
    write_csv(csv_path, ["beta_abs"] + [f"P_up_n{n}" for n in cols],
              zip(betas, *cols.values()))
    maxima = {f"n{n}": {"global": _maximise(lambda b, n=n: float(protocol.line_probability(n, b)), betas, y),
                        "interior": _interior_max(lambda b, n=n: float(protocol.line_probability(n, b)), betas, y)}
              for n, y in cols.items()}
    meta = {"command": "fig1", "config": cfg.to_dict(), "maxima": maxima}
    write_json(meta_path, meta)
    return meta


def cmd_fig2(cfg):
    betas = np.linspace(0.0, cfg.beta_max, cfg.beta_points)
    params = cfg.protocol()
    header, cols, maxima = ["beta_abs"], [], {}
    for ell in (1, 2):
        for n in (0, 1, 2):
            f = lambda b, n=n, ell=ell: protocol.circle_probability(n, ell, b)
            y = np.array([f(b) for b in betas])
            header.append(f"P_up_l{ell}_n{n}")
            cols.append(y)
            peak = _interior_max(f, betas, y)
            entry = {"interior": peak}
            if peak:
                plan = protocol.plan_sequence(params, n, ell, peak["beta"])
                entry.update(kappa=plan.kappa, T_us=plan.T, T_t_us=plan.T_t)
            maxima[f"l{ell}_n{n}"] = entry
    csv_path, meta_path = _outputs(cfg, "fig2")
    write_csv(csv_path, header, zip(betas, *cols))
    meta = {"command": "fig2", "config": cfg.to_dict(), "maxima": maxima,
            "spot_l2_n2_beta1.27": protocol.circle_probability(2, 2, 1.27)}
    write_json(meta_path, meta)
    return meta


def _save_grid(cfg, stem, f, extra):
    grid = grid_eval(f, cfg.grid.phase_grid(), workers=cfg.workers)
    path = os.path.join(cfg.out, stem + ".csv")
    meta = grid.save(path, {"config": cfg.to_dict(), **extra})
    return grid, meta


def cmd_fig3(cfg):
    spec, res = cfg.spec(), cfg.reservoir()
    times = {"t0": 0.0, f"gt{cfg.gamma_t:g}": cfg.gamma_t / res.gamma}
    summary = {}
    for label, t in times.items():
        for part in phasespace.PARTS:
            f = (lambda p, q, part=part: phasespace.wigner0_part(spec, p, q, part)) if t == 0 else \
                (lambda p, q, t=t, part=part: phasespace.wigner_t_part(spec, res, t, p, q, part))
            grid, _ = _save_grid(cfg, f"fig3_{label}_{part}", f,
                                 {"command": "fig3", "part": part, "t": t, "spec": spec.to_dict()})
            summary[f"{label}_{part}"] = {"max_abs": float(np.abs(grid.values).max()),
                                          "integral": grid.trapezoid()}
    meta = {"command": "fig3", "config": cfg.to_dict(), "grids": summary}
    write_json(os.path.join(cfg.out, "fig3.json"), meta)
    return meta


def _u_grid(cfg):
    us = np.linspace(0.0, 1.0, cfg.u_points, endpoint=False)
    return np.append(us, 1 - 1e-6)


def cmd_fig4(cfg):
    res = cfg.reservoir()
    rows = []
    at_02 = {}
    for n in (0, 1, 2):
        spec = SuperpositionSpec(n, cfg.components, cfg.beta, cfg.theta1)
        for u, t, mu, lam, C in coherence.coherence_sweep(spec, res, _u_grid(cfg), form=cfg.form):
            rows.append((n, u, t, mu, lam, C))
        at_02[f"n{n}"] = coherence.coherence_measure(spec, res, u=0.2, form=cfg.form).C
    csv_path, meta_path = _outputs(cfg, "fig4")
    write_csv(csv_path, ["n", "u", "t", "mu", "lambda", "C"], rows)
    meta = {"command": "fig4", "config": cfg.to_dict(), "form": cfg.form, "C_at_u0.2": at_02}
    write_json(meta_path, meta)
    return meta


def cmd_protocol(cfg):
    spec = cfg.spec()
    ell = spec.ell
    if ell is None:
        raise UsageError(f"components must be a power of two >= 2, got {spec.N}")
    params = cfg.protocol()
    beta = complex(1j * spec.beta_abs * np.exp(-1j * params.theta))
    plan = protocol.plan_sequence(params, spec.n, ell, beta)
    P_up = protocol.circle_probability(spec.n, ell, spec.beta_abs)
    ident = normalization_constant(spec) ** 2 * P_up - 2.0 ** (-2 * (ell + 1))
    target = SuperpositionSpec(spec.n, spec.N, spec.beta_abs, protocol.target_orientation(beta, ell))
    try:
        ratio = protocol.carrier_validity_ratio(target, plan.kappa)
    except UsageError as exc:
        ratio = None
        ratio_note = str(exc)
    else:
        ratio_note = None
    meta = {"command": "protocol", "config": cfg.to_dict(), "plan": plan.to_dict(),
            "protocol_params": params.to_dict(), "P_line": float(protocol.line_probability(spec.n, spec.beta_abs)),
            "P_up_T": P_up, "norm_identity_residual": ident,
            "carrier_validity_ratio": ratio, "carrier_validity_note": ratio_note,
            "T_minus_sum_tk": plan.T - plan.T_sum}
    write_json(os.path.join(cfg.out, "protocol.json"), meta)
    return meta


def cmd_wigner(cfg, part="total"):
    spec, res = cfg.spec(), cfg.reservoir()
    t = cfg.gamma_t / res.gamma
    grid, meta = _save_grid(cfg, f"wigner_{part}", lambda p, q: phasespace.wigner_t_part(spec, res, t, p, q, part),
                            {"command": "wigner", "part": part, "t": t, "spec": spec.to_dict()})
    return meta


def cmd_coherence(cfg):
    spec, res = cfg.spec(), cfg.reservoir()
    rows = coherence.coherence_sweep(spec, res, _u_grid(cfg), form=cfg.form)
    csv_path, meta_path = _outputs(cfg, "coherence")
    write_csv(csv_path, ["u", "t", "mu", "lambda", "C"], rows)
    report = coherence.coherence_measure(spec, res, u=cfg.u, form=cfg.form, with_phonon=True)
    meta = {"command": "coherence", "config": cfg.to_dict(), "report": report.to_dict()}
    write_json(meta_path, meta)
    return meta


def cmd_validate(cfg, stream=None):
    stream = stream or sys.stdout
    checks = validation.run_suite(cfg, extended=cfg.extended)
    for c in checks:
        print(c.row(), file=stream)
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed", file=stream)
    write_json(os.path.join(cfg.out, "validate.json"),
               {"command": "validate", "config": cfg.to_dict(),
                "checks": [dict(name=c.name, error=c.error, tol=c.tol, passed=c.passed, seconds=c.seconds)
                           for c in checks]})
    return 1 if failed else 0


def build_parser():
    ap = argparse.ArgumentParser(prog="circlestates", description=__doc__, allow_abbrev=False)
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", help="JSON file with RunConfig keys")
    common.add_argument("--excitation", type=int, help="number-state degree n")
    common.add_argument("--components", type=int, help="component count N = 2^(l+1)")
    common.add_argument("--beta", type=float, help="displacement modulus |beta|")
    common.add_argument("--nbar", type=float, help="reservoir mean thermal quanta")
    common.add_argument("--gamma-t", type=float, dest="gamma_t", help="dimensionless time gamma t")
    common.add_argument("--u", type=float, help="compact time for single-point reports")
    common.add_argument("--form", choices=coherence.FORMS, help="closed form for purities")
    common.add_argument("--grid", type=int, help="points per phase-space axis")
    common.add_argument("--workers", type=int, help="threads for grid evaluation")
    common.add_argument("--out", help="output directory")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [("fig1", "line-step success probability curves"),
                        ("fig2", "circle success probability curves"),
                        ("fig3", "Wigner grids at t=0 and gamma t"),
                        ("fig4", "coherence measure versus compact time"),
                        ("protocol", "pulse plan and timing for one state"),
                        ("coherence", "purity and coherence sweep for one state")]:
        sub.add_parser(name, parents=[common], help=help_)
    w = sub.add_parser("wigner", parents=[common], help="Wigner grid for one state")
    w.add_argument("--part", choices=phasespace.PARTS, default="total")
    v = sub.add_parser("validate", parents=[common], help="oracle cross-check suite")
    v.add_argument("--extended", action="store_true", default=None, help="run the full matrix")
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    flags = {k: getattr(args, k, None) for k in
             ("excitation", "components", "beta", "nbar", "gamma_t", "u", "form", "workers", "out", "extended")}
    try:
        cfg = resolve(args.config, flags)
        if args.grid is not None:
            cfg = apply_overrides(cfg, {"grid": {"points": args.grid}})
        os.makedirs(cfg.out, exist_ok=True)
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "wigner":
            result = cmd_wigner(cfg, args.part)
        else:
            result = globals()[f"cmd_{args.command}"](cfg)
    except (UsageError, DegenerateStateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps({k: v for k, v in result.items() if k != "config"}, indent=2,
                     default=_json_default, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
