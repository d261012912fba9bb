"""Drift perturbation series G^lambda g = sum_k R^lambda (B R^lambda)^k g.

``B f = b . grad f`` for a raw or mollified drift.  The contraction constant
``kappa = L_lambda M + M_lambda ||b2||`` controls every term:

    ||term_k|| <= L_lambda ||g|| kappa^{k-1} (M / lambda + N_lambda ||b2||),  k >= 1,

and the series stops once the geometric tail of these bounds drops below
``tol * ||g||``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .drift import DriftField, MollifiedDrift
from .heat_kernel import KernelGrid
from .lattice import SpaceTimeField
from .resolvent import ResolventParams, constant_L, constant_M, constant_N, resolvent_and_gradient

__all__ = [
    "SeriesResult",
    "SeriesBudgetError",
    "Constants",
    "constants",
    "kappa",
    "lambda_threshold",
    "apply_B",
    "evaluate_series",
    "series_of_abs_drift",
]

SEARCH_RANGE = (1e-3, 1e6)
DELTA_MARGIN = 0.01


class SeriesBudgetError(RuntimeError):
    """The series cannot be run within its analytic budget."""


def _b2_norm(drift) -> float:
    if isinstance(drift, MollifiedDrift):
        return drift.source_b2_norm
    return drift.b2_norm


@dataclass(frozen=True)
class Constants:
    lam: float
    N: float
    M_lam: float
    L: float
    kappa: float
    M: float
    b2_norm: float

    @property
    def term_scale(self) -> float:
        """M / lambda + N_lambda ||b2||."""
        return self.M / self.lam + self.N * self.b2_norm

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "N": self.N,
            "M_lambda": self.M_lam,
            "L": self.L,
            "kappa": self.kappa,
            "M": self.M,
            "b2_norm": self.b2_norm,
        }


def constants(lam: float, drift, grid: KernelGrid) -> Constants:
    """N_lambda, M_lambda, L_lambda and kappa_lambda for a drift."""
    adm = drift.admissibility(grid.law.alpha)
    if not adm.passed:
        raise ValueError(
            f"drift exponents violate d/p + alpha/q < alpha - 1 ({adm.value:.6g} >= {adm.threshold:.6g})"
        )
    b2n = _b2_norm(drift)
    N = constant_N(lam, drift.p, drift.q, grid)
    Ml = constant_M(lam, drift.p, drift.q, grid)
    L = constant_L(lam, grid)
    return Constants(lam, N, Ml, L, L * drift.M + Ml * b2n, drift.M, b2n)


def kappa(lam: float, drift, grid: KernelGrid) -> float:
    return constants(lam, drift, grid).kappa


def lambda_threshold(drift, grid: KernelGrid, margin: float = DELTA_MARGIN, search=SEARCH_RANGE) -> float:
    """Smallest lambda (to bisection accuracy) with kappa_lambda <= 1 - margin.

    Bisection runs on log lambda; kappa is a sum of decreasing power laws.
    """
    lo, hi = search
    target = 1.0 - margin
    if kappa(lo, drift, grid) <= target:
        return lo
    if kappa(hi, drift, grid) > target:
        raise SeriesBudgetError(
            f"kappa stays above {target} on [{lo:g}, {hi:g}]; drift too large for this budget"
        )
    a, b = math.log(lo), math.log(hi)
    for _ in range(200):
        mid = 0.5 * (a + b)
        if kappa(math.exp(mid), drift, grid) > target:
            a = mid
        else:
            b = mid
        if b - a < 1e-12:
            break
    return math.exp(b)


def _drift_values(drift, like: SpaceTimeField) -> np.ndarray:
    """Total drift on the slices of ``like``, zero beyond the drift horizon."""
    total = drift.total()
    if total.lattice != like.lattice:
        raise ValueError("drift and field use different lattices")
    if not math.isclose(total.dt, like.dt, rel_tol=1e-12):
        raise ValueError("drift and field use different time steps")
    return total.values


def apply_B(drift, params: ResolventParams, grid, f: SpaceTimeField) -> SpaceTimeField:
    """b . grad R^lambda f restricted to the drift's support [0, T]."""
    _, grad = resolvent_and_gradient(params, grid, f)
    return _dot_on_support(drift, grad)


def _dot_on_support(drift, grad: SpaceTimeField) -> SpaceTimeField:
    b = _drift_values(drift, grad)
    k = b.shape[0]
    if grad.n_slices < k:
        raise ValueError("field horizon is shorter than the drift support")
    vals = np.einsum("ik...,ik...->i...", b, grad.values[:k])
    return SpaceTimeField(grad.lattice, vals, grad.dt)


@dataclass(frozen=True)
class SeriesResult:
    terms: list
    partial_sum: SpaceTimeField
    kappa: float
    tail_bound: float
    order: int
    term_norms: list
    gradient_norms: list
    term_bounds: list
    bound_violations: list
    g_norm: float
    consts: Constants
    partial_norms: list = field(default_factory=list)

    @property
    def ratios(self) -> list:
        n = self.term_norms
        return [n[k + 1] / n[k] for k in range(len(n) - 1) if n[k] > 0]

    @property
    def gradient_ratios(self) -> list:
        n = self.gradient_norms
        return [n[k + 1] / n[k] for k in range(len(n) - 1) if n[k] > 0]

    def probe(self, s: float, x) -> np.ndarray:
        return self.partial_sum.probe(s, np.atleast_2d(x))

    def to_rows(self) -> list[dict]:
        rows = []
        for k, (nrm, gn) in enumerate(zip(self.term_norms, self.gradient_norms)):
            rows.append({
                "k": k,
                "term_norm": nrm,
                "gradient_norm": gn,
                "bound": self.term_bounds[k],
                "kappa": self.kappa,
                "tail_bound": self.tail_bound,
            })
        return rows


def evaluate_series(
    drift,
    params: ResolventParams,
    grid: KernelGrid,
    g: SpaceTimeField,
    tol: float = 1e-6,
    max_terms: int = 500,
    keep_terms: bool = True,
    bound_scale: float | None = None,
) -> SeriesResult:
    """Sum the perturbation series until the analytic tail bound is below ``tol * ||g||``.

    ``bound_scale`` overrides the analytic bound of the first correction
    term when a sharper one is known for the given ``g``.

    Raises
    ------
    SeriesBudgetError
        If ``kappa_lambda >= 1`` or more than ``max_terms`` terms are needed.
    """
    if g.is_vector:
        raise ValueError("g must be a scalar field")
    c = constants(params.lam, drift, grid)
    if c.kappa >= 1.0:
        raise SeriesBudgetError(f"lambda = {params.lam:g} is not above the threshold: kappa = {c.kappa:.4f} >= 1")
    g_norm = g.sup_norm()
    # bound of term 1; term k is bounded by scale * kappa^(k-1)
    scale = c.L * g_norm * c.term_scale if bound_scale is None else bound_scale

    def tail_after(k):
        # bounds of terms k+1, k+2, ... summed
        return scale * c.kappa**k / (1.0 - c.kappa) if scale > 0 else 0.0

    zero = drift.is_zero()
    term, grad = resolvent_and_gradient(params, grid, g)
    terms = [term] if keep_terms else []
    total_vals = np.array(term.values)
    norms = [term.sup_norm()]
    gnorms = [grad.sup_norm()]
    bounds = [g_norm / params.lam]
    violations = []
    partial = [float(np.max(np.abs(total_vals)))]
    k = 0
    while not zero and tail_after(k) > tol * g_norm:
        if k + 1 > max_terms:
            raise SeriesBudgetError(f"series needs more than {max_terms} terms at kappa = {c.kappa:.4f}")
        h = _dot_on_support(drift, grad)
        term, grad = resolvent_and_gradient(params, grid, h)
        k += 1
        nrm = term.sup_norm()
        bnd = scale * c.kappa ** (k - 1)
        if nrm > bnd * (1 + 1e-9):
            violations.append(k)
            warnings.warn(f"term {k} norm {nrm:.4e} exceeds its analytic bound {bnd:.4e}", RuntimeWarning)
        norms.append(nrm)
        gnorms.append(grad.sup_norm())
        bounds.append(bnd)
        if keep_terms:
            terms.append(term)
        n = term.n_slices
        total_vals[:n] += term.values
        partial.append(float(np.max(np.abs(total_vals))))
    total = SpaceTimeField(g.lattice, total_vals, g.dt, g.tail_rate)
    return SeriesResult(
        terms=terms,
        partial_sum=total,
        kappa=c.kappa,
        tail_bound=0.0 if zero else tail_after(k),
        order=k,
        term_norms=norms,
        gradient_norms=gnorms,
        term_bounds=bounds,
        bound_violations=violations,
        g_norm=g_norm,
        consts=c,
        partial_norms=partial,
    )


def series_of_abs_drift(drift, params: ResolventParams, grid: KernelGrid, tol: float = 1e-6) -> tuple[SeriesResult, float, float]:
    """G^lambda(|b|) with its sup and the bound (M/lambda + N ||b2||) / (1 - kappa).

    Since ``|grad R^lambda |b|| <= kappa`` and ``R^lambda |b| <= M/lambda + N ||b2||``,
    term k is bounded by ``(M/lambda + N ||b2||) kappa^k``.

    Returns ``(result, sup, bound)``.
    """
    mag = drift.total().magnitude()
    c = constants(params.lam, drift, grid)
    res = evaluate_series(drift, params, grid, mag, tol=tol, keep_terms=False, bound_scale=c.term_scale * c.kappa)
    bound = c.term_scale / (1.0 - c.kappa)
    sup = res.partial_sum.sup_norm()
    return res, sup, bound
