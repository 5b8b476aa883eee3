"""Command-line front end.

Exit codes: 0 pass, 1 a check failed, 2 usage or domain error, 3 a
numerical accuracy estimate exceeded its tolerance.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import abel, funceq
from .ensemble import independence_witness, mix, witness_header
from .errors import AccuracyError, BuildError, DomainError, KurthBifError
from .io import dumps, read_json, write_csv
from .kurth import RHO0
from .orbit import PeriodicOrbit
from .params import GammaParam
from .quadrature import DEFAULT_SPEC, QuadratureSpec
from .sampling import StateSampler
from .steady import (
    ConstantProfileState,
    GammaState,
    KurthState,
    l1_distance_to_kurth,
    rho_f_gamma,
)
from .weakcheck import TestFunction, dynamic_residual, residual_batch, static_residual

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_ACCURACY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _emit(text: str, out) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _spec(args) -> QuadratureSpec:
    spec = DEFAULT_SPEC
    if getattr(args, "config", None):
        spec = QuadratureSpec.from_dict(read_json(args.config))
    return spec


def _gamma(k) -> GammaParam:
    return GammaParam.from_exponent(k)


def _line(name: str, value: float, tol: float) -> bool:
    ok = bool(value <= tol)
    print(f"{name}: {value:.3e} (tol {tol:.1e}) {'PASS' if ok else 'FAIL'}")
    return ok


# ------------------------------------------------------------------ build


def cmd_build(args) -> int:
    gamma = _gamma(args.gamma_exp)
    try:
        table = abel.build_profile(gamma, _spec(args))
    except BuildError as err:
        print(f"build failed: {err}")
        return EXIT_CHECK
    res = table.residuals
    print(f"Gamma = {gamma}")
    print(f"abel residual: {res['abel']:.3e}")
    print(f"functional residual: {res['functional']:.3e}")
    print(f"l_Gamma: {table.l_gamma():.17g}")
    if args.out:
        Path(args.out).write_text(table.to_json(), encoding="utf-8")
    return EXIT_OK


# ----------------------------------------------------------------- verify


def _verify_funceq(gamma, tol):
    s = np.linspace(0.0, 1.0, 10001)
    res = np.abs(
        np.asarray(funceq.psi(s, gamma))
        - np.asarray(funceq.psi(funceq.h(s, gamma), gamma))
        - s
    )
    return _line("max |psi(s) - psi(h(s)) - s|", float(np.max(res)), tol)


def _verify_abel(gamma, tol):
    nodes = abel.check_nodes(gamma, 256)
    res = float(np.max(np.abs(abel.abel_residual(nodes, gamma))))
    ok = _line("max Abel residual", res, tol)
    mesh, values = abel.volterra_profile(gamma)
    gap = float(np.max(np.abs(values - np.asarray(abel.phi(mesh, gamma)))))
    return _line("Volterra oracle gap", gap, max(tol, 1e-5)) and ok


def _verify_density(gamma, tol):
    radii = _density_radii(gamma, 64)
    rho = np.asarray(rho_f_gamma(radii, gamma))
    dev = float(np.max(np.abs(rho / RHO0 - 1.0)))
    outside = float(np.max(np.abs(np.asarray(rho_f_gamma(np.array([1.01, 1.5, 3.0]), gamma)))))
    ok = _line("max |(4 pi/3) rho - 1|", dev, tol)
    return _line("max rho beyond r = 1", outside, 0.0) and ok


def _density_radii(gamma: GammaParam, count: int) -> np.ndarray:
    seam = math.sqrt(gamma.gamma)
    base = np.linspace(0.0, 1.0, count - 4)
    extra = [seam, seam - 1e-7, seam + 1e-7, 1.0]
    return np.unique(np.concatenate([base, extra]))


def _verify_bounds(gamma, tol):
    a = gamma.one_minus_gamma
    s = a * np.linspace(0.0, 1.0, 1001)[:-1]
    val, d1, d2 = funceq.psi_tilde_derivatives(s, gamma)
    viol = int(np.sum(np.abs(val) > 4.0 * a ** (1 / 3)))
    viol += int(np.sum(np.abs(d1) > 16.0))
    viol += int(np.sum(np.abs(d2) > 64.0 / a ** (1 / 3)))
    print(f"psi~ bound violations: {viol}")
    t = (np.arange(1000) + 0.5) / 1000
    nodes = np.concatenate([a * t, a + (1.0 - a) * t])
    br = abel.phi_prime_brackets(nodes, gamma)
    bad = int(np.sum((br["value"] < br["lower"]) | (br["value"] > br["upper"])))
    print(f"phi' bracket violations: {bad}")
    ok = viol == 0 and bad == 0
    print("PASS" if ok else "FAIL")
    return ok


_VERIFY = {
    "funceq": (_verify_funceq, 1e-10),
    "abel": (_verify_abel, 1e-6),
    "density": (_verify_density, 1e-5),
    "bounds": (_verify_bounds, 0.0),
}


def cmd_verify(args) -> int:
    gamma = _gamma(args.gamma_exp)
    fn, default_tol = _VERIFY[args.suite]
    tol = default_tol if args.tol is None else args.tol
    return EXIT_OK if fn(gamma, tol) else EXIT_CHECK


# ------------------------------------------------------------------ sweep


def l1_sweep(kmin: int, kmax: int):
    rows = []
    for k in range(kmin, kmax + 1):
        g = _gamma(k)
        d = l1_distance_to_kurth(g)
        rows.append((k, g.gamma, g.one_minus_gamma, d, d / g.one_minus_gamma ** (1 / 6)))
    return rows


def cmd_sweep(args) -> int:
    if args.kmax < args.kmin:
        raise DomainError("kmax must not be below kmin")
    rows = l1_sweep(args.kmin, args.kmax)
    header = ("k", "gamma", "one_minus_gamma", "l1_distance", "ratio_to_a16")
    if args.out:
        write_csv(args.out, header, rows)
    for r in rows:
        print(f"k={r[0]:2d} l1={r[3]:.6e} ratio={r[4]:.6e}")
    dists = [r[3] for r in rows]
    ok = all(b < a for a, b in zip(dists, dists[1:]))
    print("strictly decreasing: " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_CHECK


# ------------------------------------------------------------------ orbit


def cmd_orbit(args) -> int:
    orbit = PeriodicOrbit(args.eps)
    periods = args.periods
    if periods < 1:
        raise DomainError("periods must be at least 1")
    traj = orbit.trajectory(periods)
    report = orbit.report(periods)
    if args.out:
        traj.to_csv(args.out)
    print(f"period: {report['period']:.10g}")
    print(f"period (quadrature): {report['period_quadrature']:.10g}")
    print(f"min: {report['phi_min_observed']:.10g} max: {report['phi_max_observed']:.10g}")
    print(f"return error: {report['return_error']:.3e}")
    print(f"energy drift: {report['energy_drift']:.3e}")
    ok = (
        abs(report["phi_min_observed"] - report["phi_min"]) <= 1e-8
        and abs(report["phi_max_observed"] - report["phi_max"]) <= 1e-8
        and abs(report["period"] - report["period_quadrature"]) <= 1e-10
        and report["return_error"] <= 1e-8
        and report["energy_drift"] <= 1e-9
    )
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CHECK


# --------------------------------------------------------------- residual


def _state_for(kind: str, k):
    if kind == "kurth":
        return KurthState(), "Gamma=1"
    gamma = _gamma(k)
    if kind == "constant":
        return ConstantProfileState(gamma), f"Gamma={gamma}"
    return GammaState(gamma), f"Gamma={gamma}"


def residual_reports(mode, state, label, tests, seed, samples, eps=0.0, window=(0.5, 4.0)):
    sampler = StateSampler(state)
    reports = []
    orbit = PeriodicOrbit(eps) if mode == "dynamic" else None
    for i in range(tests):
        tf_seed = seed * 100003 + i
        if mode == "static":
            tf = TestFunction.random(tf_seed)
            rep = static_residual(state, tf, samples, tf_seed + 7, sampler=sampler, label=label)
        else:
            tf = TestFunction.random(tf_seed, window=window)
            rep = dynamic_residual(
                state, orbit, tf, samples, tf_seed + 7, sampler=sampler, label=f"{label},eps={eps!r}"
            )
        reports.append(rep)
    return residual_batch(reports)


def cmd_residual(args) -> int:
    if args.gamma_exp is None and args.state != "kurth":
        raise DomainError("--gamma-exp is required unless --state kurth")
    if args.tests < 1:
        raise DomainError("--tests must be positive")
    state, label = _state_for(args.state, args.gamma_exp)
    samples = args.samples or _spec(args).mc_samples
    batch = residual_reports(
        args.mode, state, label, args.tests, args.seed, samples, eps=args.eps
    )
    doc = {
        "schema_version": 1,
        "mode": args.mode,
        "state": args.state,
        "seed": args.seed,
        "threshold": batch["threshold"],
        "passed": batch["passed"],
        "reports": [r.to_dict() for r in batch["reports"]],
    }
    _emit(dumps(doc), args.out)
    verdict = "PASS" if batch["passed"] else "FAIL"
    print(
        f"max |z| = {batch['max_z']:.3f} (gate {batch['threshold']:.3f}) {verdict}",
        file=sys.stderr,
    )
    return EXIT_OK if batch["passed"] else EXIT_CHECK


# -------------------------------------------------------------------- mix


def cmd_mix(args) -> int:
    cfg = read_json(args.spec)
    try:
        comps = [(int(c["gamma_exp"]), float(c["weight"])) for c in cfg["components"]]
    except (KeyError, TypeError, ValueError) as err:
        raise DomainError(f"malformed mixture spec: {err}") from err
    tests = int(cfg.get("tests", 20))
    seed = int(cfg.get("seed", 0))
    samples = int(cfg.get("samples", DEFAULT_SPEC.mc_samples))
    state = mix(comps)
    mass = state.mass()
    radii = np.linspace(0.05, 0.95, 10)
    rho = np.asarray(state.rho(radii))
    dev = float(np.max(np.abs(rho / RHO0 - 1.0)))
    batch = residual_reports("static", state, "mixture", tests, seed, samples)
    ok = abs(mass - 1.0) <= 1e-5 and dev <= 1e-5 and batch["passed"]
    doc = {
        "schema_version": 1,
        "components": [{"gamma_exp": k, "weight": w} for k, w in comps],
        "mass": mass,
        "density_max_deviation": dev,
        "residual_threshold": batch["threshold"],
        "residual_passed": batch["passed"],
        "reports": [r.to_dict() for r in batch["reports"]],
        "passed": ok,
    }
    _emit(dumps(doc), args.out)
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------- witness


def cmd_witness(args) -> int:
    try:
        ks = [int(x) for x in args.gammas.split(",") if x.strip()]
    except ValueError as err:
        raise DomainError(f"bad --gammas list: {err}") from err
    deltas = [4.0**-j for j in range(1, args.levels + 1)]
    rows = independence_witness(ks, deltas)
    header = witness_header(len(ks))
    if args.out:
        write_csv(args.out, header, [r.csv_row() for r in rows])
    smallest = [r.singular_values[-1] for r in rows]
    full = all(r.rank == len(ks) for r in rows)
    increasing = all(b > a for a, b in zip(smallest, smallest[1:]))
    for r in rows:
        print(f"delta={r.delta:.3e} min sv={r.singular_values[-1]:.6e} cond={r.condition:.3e}")
    ok = full and (increasing or len(ks) == 1)
    print("full rank, increasing: " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_CHECK


# ----------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kurthbif", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON file with quadrature settings")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("build", help="build and verify a profile table")
    b.add_argument("--gamma-exp", type=int, required=True)
    b.add_argument("--out")
    b.set_defaults(func=cmd_build)

    v = sub.add_parser("verify", help="run an invariant suite")
    v.add_argument("suite", choices=sorted(_VERIFY))
    v.add_argument("--gamma-exp", type=int, required=True)
    v.add_argument("--tol", type=float)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", help="parameter sweeps")
    s.add_argument("study", choices=["l1"])
    s.add_argument("--kmin", type=int, default=12)
    s.add_argument("--kmax", type=int, default=20)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    o = sub.add_parser("orbit", help="radial trajectory and invariants")
    o.add_argument("--eps", type=float, required=True)
    o.add_argument("--periods", type=int, default=1)
    o.add_argument("--out")
    o.set_defaults(func=cmd_orbit)

    r = sub.add_parser("residual", help="weak-solution residual reports")
    r.add_argument("mode", choices=["static", "dynamic"])
    r.add_argument("--gamma-exp", type=int)
    r.add_argument("--state", choices=["gamma", "kurth", "constant"], default="gamma")
    r.add_argument("--eps", type=float, default=0.0)
    r.add_argument("--tests", type=int, default=20)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--samples", type=int)
    r.add_argument("--out")
    r.set_defaults(func=cmd_residual)

    m = sub.add_parser("mix", help="mixture build and checks")
    m.add_argument("--spec", required=True)
    m.add_argument("--out")
    m.set_defaults(func=cmd_mix)

    w = sub.add_parser("witness", help="linear independence diagnostics")
    w.add_argument("--gammas", required=True, help="comma-separated exponents K")
    w.add_argument("--levels", type=int, default=8)
    w.add_argument("--out")
    w.set_defaults(func=cmd_witness)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except AccuracyError as err:
        print(f"accuracy failure: {err}", file=sys.stderr)
        return EXIT_ACCURACY
    except (KurthBifError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
