"""Experiment runner: dispatches the package's sweeps from a declarative
configuration and writes CSV tables plus JSON verdict summaries.

Every experiment emits a summary ``{claim, verdict, evidence, config,
config_hash, version}``; the process exits 0 iff all verdicts pass, 1 on a
failed verdict or numerical failure (with the failing cell identified), and 2
on configuration errors.  Outputs are deterministic for a fixed configuration:
sampling is seeded, rows are written in schedule order, and floats are
formatted to round-trip.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .apsidal import (calibration_integral, convergence_sweep,
                      default_paths, desingularized_factor,
                      integrand_envelope)
from .flow import continuity_experiment, diagonal_cells, poincare_section, transmission_extend
from .potentials import SmoothedPotential, classify, from_config
from .radial import (DropFromRest, InwardCrossing, RadialProblem, case_anchor,
                     collision_time, time_of_flight, turning_points)
from .simulator import PhaseState, conserved_drift, integrate, make_initial_data
from .tables import ConvergenceTable, format_value, is_decreasing
from .variational import delta_action, transmission_discrete_path


class ConfigError(Exception):
    pass


def _load_config(path: str | None, defaults: dict) -> dict:
    cfg = dict(defaults)
    if path is not None:
        try:
            with open(path) as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config root must be an object")
        cfg.update(user)
    return cfg


def _config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def _case_from(cfg: dict):
    c = cfg["case"]
    kind = c.get("type", "drop")
    if kind == "drop":
        return DropFromRest(float(c["energy"]), float(c.get("ball_radius", math.inf)))
    if kind == "entry":
        return InwardCrossing(float(c["energy"]), float(c["ball_radius"]))
    raise ConfigError(f"unknown case type {kind!r} (use 'drop' or 'entry')")


def _emit(out: Path, name: str, claim: str, verdict: bool, evidence: dict,
          cfg: dict) -> bool:
    summary = {
        "claim": claim,
        "verdict": bool(verdict),
        "evidence": evidence,
        "config": cfg,
        "config_hash": _config_hash(cfg),
        "version": __version__,
    }
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{name}_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_jsonable)
    print(json.dumps(summary, indent=2, sort_keys=True, default=_jsonable))
    return verdict


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return str(v)


# --- subcommands -------------------------------------------------------------

def cmd_check_potential(args, out: Path) -> bool:
    cfg = _load_config(args.config, {"potential": {"family": "logarithmic"}})
    report = classify(from_config(cfg["potential"]))
    evidence = {
        "admissible": report.admissible,
        "slowly_varying": report.slowly_varying,
        "weak_singularity": report.weak_singularity,
        "safe_radius": format_value(report.safe_radius),
        "monotone_radius": format_value(report.monotone_radius),
        "ratio_radius": format_value(report.ratio_radius),
        "slope_at_origin": report.slope_at_origin,
        "witness": report.witness,
        "notes": report.notes,
    }
    verdict = True
    expect = cfg.get("expect")
    if expect:
        verdict = all(evidence.get(k) == v for k, v in expect.items())
        evidence["expect"] = expect
    return _emit(out, "check_potential", "potential class certification",
                 verdict, evidence, cfg)


def cmd_pi_identity(args, out: Path) -> bool:
    cfg = _load_config(args.config, {"xi": [1.0001, 1.5, 2.0, 10.0, 1e6],
                                     "tol": 1e-8})
    xis = [float(args.xi)] if args.xi is not None else [float(x) for x in cfg["xi"]]
    tol = args.tol_quad if args.tol_quad is not None else cfg["tol"]
    table = ConvergenceTable(("xi", "value", "abs_error"))
    worst = 0.0
    for xi in xis:
        val = calibration_integral(xi)
        err = abs(val - math.pi)
        worst = max(worst, err)
        table.add(xi, val, err)
    table.write_csv(out_path(out, "pi_identity.csv"))
    return _emit(out, "pi_identity",
                 "the calibration integral equals pi for every xi > 1",
                 worst <= tol, {"worst_abs_error": worst, "tol": tol,
                                "cells": len(xis)}, cfg)


def cmd_apsidal_sweep(args, out: Path) -> bool:
    cfg = _load_config(args.config, {
        "potential": {"family": "logarithmic"},
        "case": {"type": "drop", "energy": 0.0},
        "exponents": [2, 3, 4, 5, 6],
        "strong_tol": 1e-2,
    })
    potential = from_config(cfg["potential"])
    case = _case_from(cfg)
    paths = default_paths(cfg["exponents"])
    tol = args.tol_quad if args.tol_quad is not None else 1e-10
    table = convergence_sweep(potential, case, paths, rel_tol=tol, jobs=args.jobs)
    table.write_csv(out_path(out, "apsidal_sweep.csv"))
    limits = table.meta.get("path_limits", {})
    est = {pid: v["estimate"] for pid, v in limits.items()}
    converged = all(v["converged"] for v in limits.values()) and bool(limits)
    strong = bool(est) and all(abs(e - math.pi / 2) <= cfg["strong_tol"] for e in est.values()) \
        and table.meta.get("uniform", False)
    evidence = {"path_limits": limits, "uniform": table.meta.get("uniform"),
                "strong_regularizable": strong,
                "cell_errors": table.meta.get("cell_errors", [])}
    return _emit(out, "apsidal_sweep",
                 "the apsidal angle converges along every (eps, l) path",
                 converged and not table.meta.get("cell_errors"), evidence, cfg)


def cmd_bounds_audit(args, out: Path) -> bool:
    cfg = _load_config(args.config, {
        "potential": {"family": "logarithmic"},
        "eps": [1e-2, 1e-4],
        "samples": 1000,
        "violation_tol": 1e-9,
        "energy": 0.0,
    })
    potential = from_config(cfg["potential"])
    rng = np.random.default_rng(args.seed)
    tol = float(cfg["violation_tol"])
    table = ConvergenceTable(("kind", "epsilon", "p1", "p2", "p3", "value", "margin"))
    violations = []
    for eps in cfg["eps"]:
        for _ in range(int(cfg["samples"])):
            r_outer = rng.uniform(0.05, 1.0)
            y = rng.uniform(1e-3, 0.999 * r_outer)
            x = rng.uniform(y * (1 + 1e-7), r_outer * (1 - 1e-7))
            val = integrand_envelope(potential, eps, y, x, r_outer)
            margin = val - r_outer
            table.add("envelope", eps, y, x, r_outer, val, margin)
            if margin < -tol:
                violations.append(("envelope", eps, y, x, r_outer, margin))
        sm = SmoothedPotential(potential, eps)
        l = eps
        rp = RadialProblem(sm, float(cfg["energy"]) + 0.5 * l * l, l)
        tp = turning_points(rp)
        beta = tp.apocenter
        for _ in range(int(cfg["samples"])):
            rho = 1.0 + (beta / tp.pericenter - 1.0) * rng.uniform(1e-9, 1.0 - 1e-9)
            val = desingularized_factor(rp, beta, 0.0, rho)
            margin = beta - val
            table.add("factor", eps, rho, tp.pericenter, beta, val, margin)
            if margin < -tol:
                violations.append(("factor", eps, rho, margin))
    table.write_csv(out_path(out, "bounds_audit.csv"))
    return _emit(out, "bounds_audit",
                 "envelope >= r_outer and factor <= beta on seeded samples",
                 not violations,
                 {"violations": violations, "samples_per_audit": cfg["samples"],
                  "seed": args.seed}, cfg)


def cmd_poincare_continuity(args, out: Path) -> bool:
    cfg = _load_config(args.config, {
        "potential": {"family": "logarithmic"},
        "case": {"type": "drop", "energy": 0.0},
        "T_factor": 1.5,
        "exponents": [2, 3, 4, 5, 6],
    })
    potential = from_config(cfg["potential"])
    case = _case_from(cfg)
    T = _scaled_T(potential, case, float(cfg["T_factor"]))
    cells = diagonal_cells(cfg["exponents"])
    rtol = args.tol_ode if args.tol_ode is not None else 1e-12
    table = continuity_experiment(potential, case, T, cells, rtol=rtol)
    table.write_csv(out_path(out, "poincare_continuity.csv"))
    meta = table.meta
    verdict = bool(meta.get("nonincreasing")) and bool(meta.get("theta_converged")) \
        and meta.get("decay_ratio", math.inf) < 1.0
    evidence = {k: meta[k] for k in
                ("T", "collision_time", "nonincreasing", "decay_ratio",
                 "theta_limit", "theta_converged") if k in meta}
    evidence["marked_cells"] = meta.get("marked_cells", [])
    return _emit(out, "poincare_continuity",
                 "the extended time-T map is continuous at the collision datum",
                 verdict, evidence, cfg)


def cmd_poincare_section(args, out: Path) -> bool:
    cfg = _load_config(args.config, {
        "potential": {"family": "logarithmic"},
        "case": {"type": "drop", "energy": 0.0},
        "T_factor": 1.5,
        "deltas": [1e-2, 1e-3, 1e-4],
        "samples": 50,
    })
    potential = from_config(cfg["potential"])
    case = _case_from(cfg)
    T = _scaled_T(potential, case, float(cfg["T_factor"]))
    rtol = args.tol_ode if args.tol_ode is not None else 1e-12
    tau_devs, trace_devs, found = [], [], []
    for j, delta in enumerate(cfg["deltas"]):
        table = poincare_section(potential, case, T, float(delta),
                                 sample_count=int(cfg["samples"]),
                                 seed=args.seed, rtol=rtol)
        table.write_csv(out_path(out, f"poincare_section_delta{j}.csv"))
        tau_devs.append(table.meta["max_tau_dev"])
        trace_devs.append(table.meta["max_trace_dev"])
        found.append((table.meta["crossings_found"], table.meta["samples"]))
    all_found = all(f == s for f, s in found)
    verdict = all_found and is_decreasing(tau_devs) and is_decreasing(trace_devs)
    return _emit(out, "poincare_section",
                 "every nearby datum crosses the section, with hitting data "
                 "shrinking toward the anchor as the neighbourhood shrinks",
                 verdict,
                 {"deltas": cfg["deltas"], "max_tau_dev": tau_devs,
                  "max_trace_dev": trace_devs, "crossings": found,
                  "seed": args.seed}, cfg)


def cmd_transmission_demo(args, out: Path) -> bool:
    cfg = _load_config(args.config, {
        "potential": {"family": "logarithmic"},
        "case": {"type": "drop", "energy": 0.0},
    })
    potential = from_config(cfg["potential"])
    case = _case_from(cfg)
    y0 = make_initial_data(case, potential)
    bare = SmoothedPotential(potential, 0.0)
    pre = integrate(y0, bare, horizon=100.0, ball_radius=case.ball_radius)
    path = transmission_extend(pre)
    T0 = path.collision_time
    end = path.state_at(2.0 * T0)
    table = ConvergenceTable(("t", "x", "y", "vx", "vy", "r"))
    for t in np.linspace(0.0, 2.0 * T0, 201):
        if abs(t - T0) < 1e-9:
            continue
        st = path.state_at(t)
        table.add(t, *st.as_vector().tolist(), st.r)
    table.write_csv(out_path(out, "transmission_path.csv"))
    end_ok = float(np.linalg.norm(end.position + y0.position)) < 1e-6 and \
        float(np.linalg.norm(end.velocity + y0.velocity)) < 1e-6 if isinstance(case, DropFromRest) \
        else True
    sym = []
    for s in np.linspace(0.1 * T0, 0.9 * T0, 7):
        sym.append(abs(path.state_at(T0 + s).r - path.state_at(T0 - s).r))
    verdict = end_ok and max(sym) < 1e-9
    return _emit(out, "transmission_demo",
                 "the transmission path reflects the fall through the centre",
                 verdict, {"collision_time": T0, "endpoint_reflected": end_ok,
                           "max_radius_asymmetry": max(sym)}, cfg)


def cmd_variational_probe(args, out: Path) -> bool:
    cfg = _load_config(args.config, {
        "potential": {"family": "logarithmic"},
        "energy": 0.0,
        "deltas": [1e-2, 1e-3, 1e-4],
        "T1_factor": 0.5,
        "n_cells": 2 ** 14,
    })
    potential = from_config(cfg["potential"])
    path = transmission_discrete_path(potential, float(cfg["energy"]),
                                      n_cells=int(cfg["n_cells"]))
    T1 = float(cfg["T1_factor"]) * path.half_span
    table = ConvergenceTable(("delta", "T1", "dK_closed", "dK_discrete",
                              "dV", "dA", "collision_cell_depth"))
    rows = []
    for delta in cfg["deltas"]:
        cmp_ = delta_action(path, float(delta), T1, potential)
        rows.append(cmp_)
        table.add(cmp_.delta, cmp_.T1, cmp_.dK_closed, cmp_.dK_discrete,
                  cmp_.dV, cmp_.dA, cmp_.collision_cell_depth)
    table.write_csv(out_path(out, "variational_probe.csv"))
    all_positive = all(r.dA > 0 for r in rows)
    kinetic_exact = max(abs(r.dK_discrete - r.dK_closed) for r in rows)
    ratios = [r.dV / r.delta**2 for r in rows]
    increasing = all(b > a for a, b in zip(ratios, ratios[1:]))
    verdict = all_positive and kinetic_exact < 1e-10 and increasing
    return _emit(out, "variational_probe",
                 "the transmission path is not a local action minimizer",
                 verdict, {"dA": [r.dA for r in rows],
                           "kinetic_mismatch": kinetic_exact,
                           "dV_over_delta_sq": ratios}, cfg)


def cmd_oracle_crosscheck(args, out: Path) -> bool:
    cfg = _load_config(args.config, {
        "potential": {"family": "logarithmic"},
        "orbits": 20,
        "period_tol": 1e-6,
        "drift_budget": 1e-8,
    })
    potential = from_config(cfg["potential"])
    rng = np.random.default_rng(args.seed)
    rtol = args.tol_ode if args.tol_ode is not None else 1e-12
    table = ConvergenceTable(("orbit", "E", "l", "period_ode", "period_quad",
                              "mismatch", "dE", "dl"))
    worst_period, worst_drift = 0.0, 0.0
    failing = None
    for i in range(int(cfg["orbits"])):
        E = rng.uniform(-0.5, 1.0)
        sm = SmoothedPotential(potential, 0.0)
        probe = RadialProblem(sm, E, 0.0)
        grid = np.geomspace(1e-6, 50.0, 4000)
        fmax = float(np.max(probe.f(grid)))
        l = math.sqrt(fmax) * rng.uniform(0.2, 0.9)
        rp = RadialProblem(sm, E, l)
        tp = turning_points(rp)
        half = time_of_flight(rp, tp.pericenter, tp.apocenter, tp)
        state = PhaseState((tp.apocenter, 0.0), (0.0, l / tp.apocenter))
        traj = integrate(state, sm, horizon=4.1 * half, rtol=rtol)
        peri = traj.events_of("pericenter")
        if len(peri) < 2:
            failing = (i, "fewer than two pericentre passages")
            continue
        period_ode = peri[1].time - peri[0].time
        mism = abs(period_ode - 2.0 * half)
        dE, dl = conserved_drift(traj)
        table.add(i, E, l, period_ode, 2.0 * half, mism, dE, dl)
        worst_period = max(worst_period, mism)
        worst_drift = max(worst_drift, dE, dl)
    table.write_csv(out_path(out, "oracle_crosscheck.csv"))
    verdict = failing is None and worst_period <= cfg["period_tol"] \
        and worst_drift <= cfg["drift_budget"]
    return _emit(out, "oracle_crosscheck",
                 "radial quadrature and plane integration agree on orbit periods",
                 verdict, {"worst_period_mismatch": worst_period,
                           "worst_drift": worst_drift, "failing": failing,
                           "seed": args.seed}, cfg)


def _scaled_T(potential, case, factor: float) -> float:
    """factor times the fall time of the case's nominal collision orbit."""
    anchor, v1 = case_anchor(case, potential)
    bare = SmoothedPotential(potential, 0.0)
    energy = 0.5 * v1 * v1 - bare.value(anchor)
    T0 = collision_time(RadialProblem(bare, energy, 0.0), anchor)
    return factor * T0


def out_path(out: Path, name: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    return out / name


COMMANDS = {
    "check-potential": cmd_check_potential,
    "pi-identity": cmd_pi_identity,
    "apsidal-sweep": cmd_apsidal_sweep,
    "bounds-audit": cmd_bounds_audit,
    "poincare-continuity": cmd_poincare_continuity,
    "poincare-section": cmd_poincare_section,
    "transmission-demo": cmd_transmission_demo,
    "variational-probe": cmd_variational_probe,
    "oracle-crosscheck": cmd_oracle_crosscheck,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="onecentre",
        description="experiment runner for the one-centre smoothing laboratory")
    parser.add_argument("subcommand", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="JSON configuration file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1)
    parser.add_argument("--tol-quad", type=float, default=None)
    parser.add_argument("--tol-ode", type=float, default=None)
    parser.add_argument("--xi", type=float, default=None,
                        help="single xi for pi-identity")
    args = parser.parse_args(argv)

    try:
        ok = COMMANDS[args.subcommand](args, Path(args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
