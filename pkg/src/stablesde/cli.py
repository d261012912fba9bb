"""Scenario-driven command line entry point.

Usage::

    stablesde <subcommand> --scenario scenario.json [--out DIR] [--seed N] [--threads N]

Every subcommand writes its CSV/JSON artifacts plus ``manifest.json``.
Exit codes: 0 success, 1 validation failure, 2 numerical budget exceeded,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy
from pydantic import ValidationError

from . import __version__
from .drift import check_admissible, radial_singular_norm
from .generator import QuadratureError, apply_A, fourier_mode
from .heat_kernel import (
    KernelBudgetError,
    build_kernel,
    density_at,
    generator_applied_to_kernel,
    invert_density,
)
from .lattice import Lattice, SpaceTimeField, write_slices
from .resolvent import (
    ResolventParams,
    apply_resolvent,
    constant_L,
    constant_M,
    constant_N,
    time_integral,
    time_integral_quadrature,
    verify_resolvent_equation,
)
from .scenario import Scenario, config_hash, load_scenario
from .series import SeriesBudgetError, evaluate_series, lambda_threshold, series_of_abs_drift
from .simulate import (
    QuarantineError,
    SimConfig,
    held_bump,
    mc_laplace_vs_series,
    same_law_control,
    uniqueness_probe,
)
from .stable_law import levy_radial_integral, radial_closed_form, validate

__all__ = ["main", "run", "SUBCOMMANDS"]


class ValidationFailure(Exception):
    """A scenario or invariant check failed (exit 1)."""


class BudgetFailure(Exception):
    """A numerical tolerance was exceeded (exit 2)."""


# -- artifact writers --------------------------------------------------------

def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17e}"
    return str(v)


class Run:
    """Output directory, format selection, and the artifact list."""

    def __init__(self, out: Path, formats, seed: int, threads: int, base: Path):
        self.out = out
        self.formats = set(formats)
        self.seed = seed
        self.threads = threads
        self.base = base
        self.artifacts = {}
        self.summary = {}
        out.mkdir(parents=True, exist_ok=True)

    def _record(self, path: Path):
        self.artifacts[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()

    def csv(self, name: str, header, rows):
        if "csv" not in self.formats:
            return
        path = self.out / name
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, delimiter=",", lineterminator="\n")
            w.writerow(header)
            for r in rows:
                w.writerow([_fmt(v) for v in r])
        self._record(path)

    def jsonl(self, name: str, records):
        if "json" not in self.formats:
            return
        path = self.out / name
        with open(path, "w") as fh:
            for rec in records:
                fh.write(json.dumps(_clean(rec), sort_keys=True) + "\n")
        self._record(path)

    def binary(self, name: str, writer):
        path = self.out / name
        writer(path)
        self._record(path)


# -- shared builders ---------------------------------------------------------

def _law(sc: Scenario):
    law = sc.law.build()
    rep = validate(law)
    if not rep.passed:
        raise ValidationFailure(
            f"law invariant violated: nondegenerate={rep.nondegenerate} (rank {rep.rank} < {rep.dim}) "
            f"or alpha in (1, 2) = {rep.alpha_ok}"
        )
    return law


def _gate(sc: Scenario):
    """Admissibility gate, evaluated before any heavy computation."""
    sc.require("drift")
    d = len(sc.law.center)
    rep = check_admissible(d, sc.law.alpha, sc.drift.p, sc.drift.q)
    if not rep.passed:
        raise ValidationFailure(
            f"drift violates d/p + alpha/q < alpha - 1: {rep.value:.6g} >= {rep.threshold:.6g} "
            f"(d={d}, alpha={sc.law.alpha}, p={sc.drift.p}, q={sc.drift.q})"
        )
    return rep


def _grid(sc: Scenario, law):
    return build_kernel(law, sc.grid.extent, sc.grid.points)


def _drift(sc: Scenario, run: Run):
    _gate(sc)
    return sc.drift.build(len(sc.law.center), run.base)


def _target(sc: Scenario, horizon: float):
    t = sc.target
    return held_bump(tuple(t.center), t.width, horizon, t.decay)


def _target_field(sc: Scenario, drift):
    tgt = _target(sc, drift.horizon)
    return tgt, SpaceTimeField.from_function(drift.lattice, tgt.func, drift.horizon, drift.dt, tail_rate=tgt.decay)


def _series_lambda(sc: Scenario, drift, grid) -> tuple[float, float]:
    lam0 = lambda_threshold(drift, grid, margin=sc.series.margin)
    return lam0, sc.series.lambda_factor * lam0


def _sim_config(sc: Scenario, run: Run, T_sim=None) -> SimConfig:
    s = sc.sim
    return SimConfig(
        h=s.h,
        T_sim=s.T_sim if T_sim is None else T_sim,
        paths=s.paths,
        seed=run.seed,
        start_s=s.start_s,
        start_x=tuple(s.start_x),
        block_size=s.block_size,
    )


# -- subcommands -------------------------------------------------------------

def cmd_validate_law(sc: Scenario, run: Run):
    law = sc.law.build()
    rep = validate(law)
    rows = []
    worst = 0.0
    for s in np.logspace(-3, 3, 50):
        exact = complex(radial_closed_form(law.alpha, s))
        quad = levy_radial_integral(law.alpha, float(s))
        rel = abs(quad.value - exact) / abs(exact)
        worst = max(worst, rel)
        rows.append([s, exact.real, exact.imag, quad.value.real, quad.value.imag, rel, quad.flagged])
    run.csv("psi_check.csv", ["s", "closed_re", "closed_im", "quad_re", "quad_im", "rel_err", "flagged"], rows)
    record = dict(rep.to_dict(), passed=rep.passed, symmetric=law.is_symmetric(), total_mass=law.total_mass,
                  psi_worst_rel_err=worst, law=law.to_dict())
    run.jsonl("law_report.jsonl", [record])
    run.summary["validate-law"] = {"passed": rep.passed, "psi_worst_rel_err": worst}
    if not rep.passed:
        raise ValidationFailure(f"law is degenerate: rank {rep.rank} < {rep.dim}")
    if worst > 1e-8:
        raise BudgetFailure(f"psi closed form vs quadrature: relative error {worst:.3e} > 1e-8")


def _kernel_checks(law, grid):
    lat = grid.lattice
    pts = lat.points_array()
    rows = []
    for t in (0.5, 2.0, 4.0):
        direct = invert_density(law, lat, t)
        scaled = density_at(grid, t, pts)
        rows.append([t, float(np.max(np.abs(direct - scaled)) / direct.max())])
    return rows


def cmd_kernel(sc: Scenario, run: Run):
    law = _law(sc)
    grid = _grid(sc, law)
    rows = _kernel_checks(law, grid)
    run.csv("kernel_scaling.csv", ["t", "sup_err_over_peak"], rows)
    rep = grid.truncation_report.to_dict()
    run.jsonl("kernel_report.jsonl", [rep])
    run.binary("p1.bin", lambda p: write_slices(p, grid.lattice, grid.values_p1, 1.0, alpha=law.alpha))
    run.summary["kernel"] = {"mass": rep["mass"], "scaling": [r[1] for r in rows]}
    if abs(rep["mass"] - 1.0) > 1e-3:
        raise BudgetFailure(f"kernel mass {rep['mass']:.6f} differs from 1 by more than 1e-3")
    bad = [r for r in rows if r[1] > 1e-4]
    if bad:
        raise BudgetFailure(f"scaled p_1 vs direct inversion exceeds 1e-4 of peak at t = {bad[0][0]}")


def heat_identity_residual(grid, window: float | None = None) -> dict:
    """d/dt p_t = A p_t at t = 1, with d/dt from the scaling law.

    ``p_t(x) = t^{-d/alpha} p_1(t^{-1/alpha} x + (1 - t^{1 - 1/alpha}) gamma)``
    gives ``d/dt p_1 = -(d/alpha) p_1 - grad p_1 . (x/alpha + (1 - 1/alpha) gamma)``.
    """
    law, lat = grid.law, grid.lattice
    a, d = law.alpha, lat.dim
    x = np.moveaxis(lat.points_array(), -1, 0)
    shift = x / a + ((1 - 1 / a) * law.gamma).reshape((d,) + (1,) * d)
    dt_p = -(d / a) * grid.values_p1 - np.sum(grid.values_grad_p1 * shift, axis=0)
    ap = generator_applied_to_kernel(grid, 1.0, variant="adjoint")
    window = lat.extent / 2 if window is None else window
    mask = np.ones(lat.shape, dtype=bool)
    for c in lat.coords():
        mask &= np.abs(c) <= window
    scale = float(np.max(np.abs(ap[mask])))
    res = float(np.max(np.abs(ap - dt_p)[mask]))
    return {"t": 1.0, "window": window, "sup_residual": res, "scale": scale, "relative": res / scale}


def cmd_generator_check(sc: Scenario, run: Run):
    law = _law(sc)
    rows = []
    worst = 0.0
    pts = np.asarray(sc.checks.generator_points, dtype=float)
    for u in sc.checks.generator_modes:
        f = fourier_mode(tuple(u), law=law)
        res = apply_A(law, f, pts)
        exact = f.generator(pts)
        scale = max(1.0, abs(complex(law.psi(np.asarray(u)))))
        for x, v, e, fl in zip(pts, res.value, exact, np.broadcast_to(res.flagged, exact.shape)):
            err = abs(v - e) / scale
            worst = max(worst, err)
            rows.append([*u, *x, v, e, err, bool(fl)])
    d = law.dim
    header = [f"u{k + 1}" for k in range(d)] + [f"x{k + 1}" for k in range(d)] + ["quadrature", "exact", "rel_err", "flagged"]
    run.csv("generator_modes.csv", header, rows)
    grid = _grid(sc, law)
    heat = heat_identity_residual(grid)
    run.jsonl("heat_identity.jsonl", [heat])
    run.summary["generator-check"] = {"mode_worst": worst, "heat_relative": heat["relative"]}
    if worst > 1e-8:
        raise BudgetFailure(f"quadrature generator vs exact symbol: relative error {worst:.3e} > 1e-8")
    if heat["relative"] > 1e-3:
        raise BudgetFailure(f"d/dt p_t = A p_t residual {heat['relative']:.3e} of scale exceeds 1e-3")


def cmd_drift_check(sc: Scenario, run: Run):
    rows = []
    for case in sc.checks.admissibility:
        d, alpha, p, q = int(case[0]), float(case[1]), float(case[2]), float(case[3])
        r = check_admissible(d, alpha, p, q)
        rows.append(["table", d, alpha, p, q, r.value, r.threshold, r.margin, "PASS" if r.passed else "FAIL"])
    gate = None
    if sc.drift is not None:
        d = len(sc.law.center)
        gate = check_admissible(d, sc.law.alpha, sc.drift.p, sc.drift.q)
        rows.append(["scenario", d, sc.law.alpha, sc.drift.p, sc.drift.q, gate.value, gate.threshold, gate.margin,
                     "PASS" if gate.passed else "FAIL"])
    run.csv("admissibility.csv", ["source", "d", "alpha", "p", "q", "value", "threshold", "margin", "verdict"], rows)
    run.summary["drift-check"] = {"rows": [r[-1] for r in rows]}
    if gate is None:
        return
    _gate(sc)
    drift = sc.drift.build(len(sc.law.center), run.base)
    rec = {"family": sc.drift.family, "M": drift.M, "b2_norm": drift.b2_norm, "p": drift.p, "q": drift.q,
           "horizon": drift.horizon, "dt": drift.dt}
    if sc.drift.family == "radial_singular":
        rec["b2_norm_exact"] = radial_singular_norm(
            sc.drift.amplitude, sc.drift.theta, sc.drift.radius, drift.p, drift.q, drift.horizon, drift.dim
        )
    run.jsonl("drift_report.jsonl", [rec])


def _smooth_test_field(lat: Lattice, horizon: float, dt: float, center=(0.2, 0.1), width=0.3):
    c = np.asarray(center, dtype=float)

    def g(t, x):
        u = t / horizon
        chi = math.exp(-0.25 / (u * (1 - u))) if 0 < u < 1 else 0.0
        return chi * np.exp(-np.sum((x - c) ** 2, axis=-1) / (2 * width * width))

    return SpaceTimeField.from_function(lat, g, horizon, dt)


def cmd_resolvent(sc: Scenario, run: Run):
    law = _law(sc)
    sc.require("drift")
    lat = Lattice(law.dim, sc.drift.lattice.extent, sc.drift.lattice.points)
    T, dt = sc.drift.horizon, sc.drift.dt
    one = SpaceTimeField.constant(lat, 1.0, T, dt, tail_rate=0.0)
    g = _smooth_test_field(lat, T, dt, tuple(sc.target.center), sc.target.width)
    g_fine = _smooth_test_field(lat, T, dt / 2, tuple(sc.target.center), sc.target.width) if sc.resolvent.refine_check else None
    rows = []
    failures = []
    for lam in sc.resolvent.lambdas:
        params = ResolventParams(lam, eps0=sc.resolvent.eps0)
        r1 = float(np.max(np.abs(apply_resolvent(params, law, one).values - 1.0 / lam))) * lam
        rep = verify_resolvent_equation(params, law, g)
        fine = verify_resolvent_equation(params, law, g_fine).relative_sup if g_fine is not None else float("nan")
        ratio = rep.relative_sup / fine if g_fine is not None and fine > 0 else float("nan")
        rows.append([lam, r1, rep.relative_sup, fine, ratio, rep.differencing_estimate, rep.contraction_ok])
        if r1 > 1e-6:
            failures.append(f"lambda R^lambda 1 differs from 1 by {r1:.3e} at lambda = {lam}")
        if rep.relative_sup > 2e-2:
            failures.append(f"resolvent residual {rep.relative_sup:.3e} > 2e-2 at lambda = {lam}")
        if g_fine is not None and not ratio >= 2.0:
            failures.append(f"residual does not halve under refinement at lambda = {lam} (ratio {ratio:.3g})")
    run.csv("resolvent.csv", ["lambda", "R1_rel_err", "residual_rel", "residual_rel_refined", "refine_ratio",
                              "differencing_estimate", "contraction_ok"], rows)
    if sc.series.probes:
        recs = []
        for lam in sc.resolvent.lambdas:
            f = apply_resolvent(ResolventParams(lam, eps0=sc.resolvent.eps0), law, g)
            for pr in sc.series.probes:
                recs.append({"lambda": lam, "s": pr[0], "x": pr[1:], "value": float(f.probe(pr[0], np.atleast_2d(pr[1:]))[0])})
        run.jsonl("resolvent_probes.jsonl", recs)
    run.summary["resolvent"] = {"rows": len(rows)}
    if failures:
        raise BudgetFailure("; ".join(failures))


def constants_table(lambdas, p, q, grid, M=None, b2_norm=None):
    rows = []
    alpha = grid.law.alpha
    for lam in lambdas:
        N, Nq = constant_N(lam, p, q, grid), constant_N(lam, p, q, grid, quadrature=True)
        Ml, Mq = constant_M(lam, p, q, grid), constant_M(lam, p, q, grid, quadrature=True)
        L = constant_L(lam, grid)
        Lq = L * time_integral_quadrature(lam, 1.0 / alpha) / time_integral(lam, 1.0 / alpha)
        kap = L * M + Ml * b2_norm if M is not None else float("nan")
        rows.append([lam, N, Ml, L, kap, abs(N - Nq) / N, abs(Ml - Mq) / Ml, abs(L - Lq) / L])
    return rows


def cmd_constants(sc: Scenario, run: Run):
    law = _law(sc)
    drift = _drift(sc, run)
    grid = _grid(sc, law)
    rows = constants_table(sc.resolvent.lambdas, drift.p, drift.q, grid, drift.M, drift.b2_norm)
    run.csv("constants.csv", ["lambda", "N", "M_lambda", "L", "kappa", "N_quad_rel", "M_quad_rel", "L_quad_rel"], rows)
    lam0 = lambda_threshold(drift, grid, margin=sc.series.margin)
    run.jsonl("lambda0.jsonl", [{"lambda0": lam0, "margin": sc.series.margin, "M": drift.M, "b2_norm": drift.b2_norm}])
    run.summary["constants"] = {"lambda0": lam0}
    lams = [r[0] for r in rows]
    order = np.argsort(lams)
    for col, name in ((1, "N"), (2, "M_lambda"), (3, "L")):
        vals = [rows[i][col] for i in order]
        if any(b >= a for a, b in zip(vals, vals[1:])):
            raise BudgetFailure(f"{name} is not strictly decreasing in lambda")
    worst = max(max(r[5:]) for r in rows)
    if worst > 1e-10:
        raise BudgetFailure(f"constants differ from their quadrature by {worst:.3e} > 1e-10")


def cmd_series(sc: Scenario, run: Run):
    law = _law(sc)
    drift = _drift(sc, run)
    if sc.sim.level is not None:
        from .drift import mollify

        drift = mollify(drift, sc.sim.level)
    grid = _grid(sc, law)
    lam0, lam = _series_lambda(sc, drift, grid)
    params = ResolventParams(lam, eps0=sc.resolvent.eps0)
    _, g = _target_field(sc, drift)
    res = evaluate_series(drift, params, grid, g, tol=sc.series.tol, max_terms=sc.series.max_terms, keep_terms=False)
    rows = [[r["k"], r["term_norm"], r["gradient_norm"], r["bound"], r["kappa"], r["tail_bound"]] for r in res.to_rows()]
    run.csv("series_terms.csv", ["k", "term_norm", "gradient_norm", "bound", "kappa", "tail_bound"], rows)
    probes = [{"s": pr[0], "x": pr[1:], "value": float(res.probe(pr[0], pr[1:])[0]), "tail_bound": res.tail_bound}
              for pr in sc.series.probes]
    run.jsonl("series_probes.jsonl", probes)
    _, sup_abs, bound_abs = series_of_abs_drift(drift, params, grid, tol=sc.series.tol)
    ratios = res.ratios
    summary = {"lambda0": lam0, "lambda": lam, "kappa": res.kappa, "order": res.order, "tail_bound": res.tail_bound,
               "violations": res.bound_violations, "max_ratio": max(ratios) if ratios else 0.0,
               "abs_drift_sup": sup_abs, "abs_drift_bound": bound_abs, "constants": res.consts.to_dict()}
    run.jsonl("series_summary.jsonl", [summary])
    run.summary["series"] = {"order": res.order, "violations": len(res.bound_violations)}
    if res.bound_violations:
        raise BudgetFailure(f"series terms {res.bound_violations} exceed their analytic bounds")
    if sup_abs > bound_abs:
        raise BudgetFailure("G^lambda(|b|) exceeds its analytic bound")


def cmd_mc_compare(sc: Scenario, run: Run):
    law = _law(sc)
    drift = _drift(sc, run)
    grid = _grid(sc, law)
    level = sc.sim.level
    from .drift import mollify

    series_drift = mollify(drift, level) if level is not None else drift
    lam0, lam = _series_lambda(sc, series_drift, grid)
    cfg = _sim_config(sc, run)
    tgt = _target(sc, drift.horizon)
    report, ens = mc_laplace_vs_series(
        cfg, law, drift, grid, ResolventParams(lam, eps0=sc.resolvent.eps0), tgt, level=level,
        tol=sc.series.tol, threads=run.threads, checkpoints=tuple(sc.sim.checkpoints), return_ensemble=True,
    )
    report = dict(report, lambda0=lam0, seed=cfg.seed, paths=cfg.paths, h=cfg.h, T_sim=cfg.T_sim,
                  abs_drift_max=float(np.max(ens.abs_drift)))
    run.jsonl("mc_compare.jsonl", [report])
    for t in sc.sim.checkpoints:
        m = ens.checkpoints[round(float(t), 12)]
        rows = [[i, *m[i]] for i in range(m.shape[0])]
        run.csv(f"marginal_t{t:g}.csv", ["path"] + [f"x{k + 1}" for k in range(law.dim)], rows)
    run.summary["mc-compare"] = {"z": report["z"], "passed": report["passed"]}
    if not report["passed"]:
        raise BudgetFailure(
            f"|MC - series| = {abs(report['mc'] - report['series']):.3e} exceeds 3 SE + tail bound + remainder"
        )


def cmd_uniqueness(sc: Scenario, run: Run):
    law = _law(sc)
    drift = _drift(sc, run)
    t = sc.sim.checkpoints[0]
    cfg = _sim_config(sc, run, T_sim=t)
    levels = tuple(sc.sim.levels)
    rep = uniqueness_probe(cfg, law, drift, levels, t, threads=run.threads)
    ctrl = same_law_control(cfg, law, drift, levels[0], t, threads=run.threads)
    run.jsonl("uniqueness.jsonl", [dict(rep, kind="levels"), dict(ctrl, kind="same_law_control", level=levels[0])])
    run.summary["uniqueness"] = {"decreasing": rep["decreasing"], "control": ctrl["passed"]}
    if not ctrl["passed"]:
        raise BudgetFailure("same-law control rejected by the two-sample KS test at 5%")


SUBCOMMANDS = {
    "validate-law": cmd_validate_law,
    "kernel": cmd_kernel,
    "generator-check": cmd_generator_check,
    "drift-check": cmd_drift_check,
    "resolvent": cmd_resolvent,
    "constants": cmd_constants,
    "series": cmd_series,
    "mc-compare": cmd_mc_compare,
    "uniqueness": cmd_uniqueness,
}
ALL_ORDER = list(SUBCOMMANDS)


# -- driver ------------------------------------------------------------------

def _versions() -> dict:
    return {"stablesde": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def run(subcommand: str, scenario_path, out=None, seed=None, threads: int = 1, stream=None) -> int:
    """Run one subcommand (or ``all``); returns the exit status."""
    stream = sys.stderr if stream is None else stream
    t0 = time.perf_counter()
    try:
        path = Path(scenario_path)
        sc, raw = load_scenario(path)
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=stream)
        return 3
    except (ValidationError, ValueError) as exc:
        print(f"error: scenario validation failed: {exc}", file=stream)
        return 1
    if seed is not None:
        raw = json.loads(json.dumps(raw))
        raw.setdefault("sim", {})["seed"] = int(seed)
        sc = Scenario.model_validate(raw)
    out_dir = Path(out) if out is not None else path.parent / sc.outputs.directory
    names = ALL_ORDER if subcommand == "all" else [subcommand]
    status = 0
    message = ""
    try:
        r = Run(out_dir, sc.outputs.formats, sc.sim.seed, threads, path.parent)
    except OSError as exc:
        print(f"error: cannot create output directory: {exc}", file=stream)
        return 3
    try:
        if subcommand not in SUBCOMMANDS and subcommand != "all":
            raise ValidationFailure(f"unknown subcommand {subcommand!r}")
        for name in names:
            if name in ("constants", "series", "mc-compare", "uniqueness", "resolvent") and sc.drift is None:
                if subcommand == "all":
                    continue
            SUBCOMMANDS[name](sc, r)
    except (ValidationFailure, ValidationError) as exc:
        status, message = 1, f"validation failure: {exc}"
    except (BudgetFailure, KernelBudgetError, SeriesBudgetError, QuarantineError, QuadratureError) as exc:
        status, message = 2, f"numerical budget failure: {exc}"
    except OSError as exc:
        status, message = 3, f"I/O error: {exc}"
    except ValueError as exc:
        status, message = 1, f"validation failure: {exc}"
    manifest = {
        "subcommand": subcommand,
        "config_hash": config_hash(raw),
        "config": raw,
        "seed": sc.sim.seed,
        "threads": threads,
        "versions": _versions(),
        "wall_time": time.perf_counter() - t0,
        "artifacts": r.artifacts,
        "summary": _clean(r.summary),
        "status": status,
        "message": message,
    }
    try:
        (out_dir / "manifest.json").write_text(json.dumps(_clean(manifest), sort_keys=True, indent=2) + "\n")
    except OSError as exc:
        print(f"error: cannot write manifest: {exc}", file=stream)
        return 3
    if message:
        print(f"error: {message}", file=stream)
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="stablesde", description=__doc__.splitlines()[0])
    parser.add_argument("subcommand", choices=ALL_ORDER + ["all"])
    parser.add_argument("--scenario", required=True, help="path to the JSON scenario file")
    parser.add_argument("--out", default=None, help="output directory (overrides outputs.directory)")
    parser.add_argument("--seed", type=int, default=None, help="override sim.seed (unsigned 64-bit)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for path simulation")
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        parser.error("--seed must be an unsigned 64-bit integer")
    if args.threads < 1:
        parser.error("--threads must be at least 1")
    return run(args.subcommand, args.scenario, args.out, args.seed, args.threads)


if __name__ == "__main__":
    sys.exit(main())
