"""Projected subgradient solver for the relaxed hinge ERM.

The program is min over feasible G of (1/n) sum_i max{0, 1 - <G, U_i>}
(single negative), or with min_j <G, U_ij> inside the hinge for k
negatives. Feasible sets are the PSD trace ball or the PSD entrywise l1
ball, both of which admit cheap Euclidean projections, so plain projected
subgradient iterations G <- P(G - eta_t * dG) with eta_t = step0/sqrt(t+1)
apply. The best iterate seen is reported, which sidesteps the method's
non-monotone tail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput
from .linalg import (
    DYKSTRA_MAX_ITER,
    DYKSTRA_TOL,
    project_psd_l1,
    project_psd_trace_ball,
    symmetrize,
)


@dataclass(frozen=True)
class TraceBall:
    """Feasible set {G PSD, tr(G) <= radius}."""

    radius: float

    kind = "trace"

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidInput("constraint radius must be positive")

    def project(self, m: np.ndarray) -> np.ndarray:
        return project_psd_trace_ball(m, self.radius)

    def norm_value(self, m: np.ndarray) -> float:
        """The constrained norm of m (trace; equals the nuclear norm on PSD)."""
        return float(np.trace(m))

    def feasibility_residual(self, m: np.ndarray) -> float:
        lam_min = float(np.linalg.eigvalsh(m)[0])
        return max(0.0, -lam_min, float(np.trace(m)) - self.radius)


@dataclass(frozen=True)
class L1Ball:
    """Feasible set {G PSD, sum_ij |G_ij| <= radius}."""

    radius: float
    dykstra_max_iter: int = DYKSTRA_MAX_ITER
    dykstra_tol: float = DYKSTRA_TOL

    kind = "l1"

    def __post_init__(self):
        if self.radius <= 0:
            raise InvalidInput("constraint radius must be positive")

    def project(self, m: np.ndarray) -> np.ndarray:
        return project_psd_l1(m, self.radius, self.dykstra_max_iter, self.dykstra_tol)

    def norm_value(self, m: np.ndarray) -> float:
        return float(np.abs(m).sum())

    def feasibility_residual(self, m: np.ndarray) -> float:
        lam_min = float(np.linalg.eigvalsh(m)[0])
        return max(0.0, -lam_min, float(np.abs(m).sum()) - self.radius)


def constraint_from_name(kind: str, radius: float, **kwargs):
    if kind == "trace":
        return TraceBall(radius)
    if kind == "l1":
        return L1Ball(radius, **kwargs)
    raise InvalidInput(f'unknown constraint kind {kind!r} (expected "trace" or "l1")')


@dataclass
class SolverConfig:
    """Knobs of the projected subgradient loop.

    step0 = None picks radius / (1 + max_i ||U_i||_F). stall_window = 0
    disables the stall test; otherwise the loop stops once the running
    best objective has not improved by more than tol over that many
    iterations. seed only matters when perturb_init is set, which replaces
    the zero start by a tiny projected random symmetric matrix.
    """

    max_iters: int = 5000
    step0: float | None = None
    tol: float = 1e-3
    stall_window: int = 0
    seed: int = 0
    perturb_init: bool = False

    def __post_init__(self):
        if self.max_iters < 0:
            raise InvalidInput("max_iters must be nonnegative")
        if self.step0 is not None and self.step0 <= 0:
            raise InvalidInput("step0 must be positive")
        if self.tol <= 0:
            raise InvalidInput("tol must be positive")
        if self.stall_window < 0:
            raise InvalidInput("stall_window must be nonnegative")


@dataclass
class SolveReport:
    """Outcome of one solve: best iterate, its objective, and the trace."""

    g_hat: np.ndarray
    best_objective: float
    objective_trace: list = field(repr=False)
    iterations_run: int
    feasibility_residual: float

    def to_json_dict(self) -> dict:
        return {
            "best_objective": self.best_objective,
            "iterations": self.iterations_run,
            "feasibility_residual": self.feasibility_residual,
            "objective_trace": list(self.objective_trace),
            "g_hat": self.g_hat.tolist(),
        }


def _check_us(g, us, expected_ndim):
    try:
        us = np.asarray(us, dtype=float)
    except ValueError as exc:
        raise InvalidInput(f"ragged lift collection: {exc}") from exc
    if us.ndim != expected_ndim:
        raise InvalidInput(
            f"expected a {expected_ndim}-d lift array, got shape {us.shape}"
        )
    if us.shape[0] == 0:
        raise InvalidInput("at least one sample is required")
    g = np.asarray(g, dtype=float)
    d = us.shape[-1]
    if g.shape != (d, d) or us.shape[-2] != d:
        raise InvalidInput(f"shape mismatch: G is {g.shape}, lifts are {us.shape}")
    return g, us


def hinge_objective(g, us) -> float:
    """(1/n) sum_i max{0, 1 - <G, U_i>} over a (n, d, d) lift stack."""
    g, us = _check_us(g, us, 3)
    scores = np.einsum("ij,nij->n", g, us)
    return float(np.maximum(0.0, 1.0 - scores).mean())


def hinge_objective_multi(g, u_lists) -> float:
    """(1/n) sum_i max{0, 1 - min_j <G, U_ij>} over a (n, k, d, d) stack."""
    g, us = _check_us(g, u_lists, 4)
    scores = np.einsum("ij,nkij->nk", g, us).min(axis=1)
    return float(np.maximum(0.0, 1.0 - scores).mean())


def subgradient(g, us) -> np.ndarray:
    """A subgradient of hinge_objective at G.

    Samples with <G, U_i> exactly 1 sit on the hinge kink and contribute
    zero (any selection in [-U_i/n, 0] would be valid).
    """
    g, us = _check_us(g, us, 3)
    scores = np.einsum("ij,nij->n", g, us)
    active = scores < 1.0
    if not np.any(active):
        return np.zeros_like(g)
    return -us[active].sum(axis=0) / us.shape[0]


def subgradient_multi(g, u_lists) -> np.ndarray:
    """A subgradient of hinge_objective_multi at G.

    An active sample contributes the lift of the lowest-index negative
    attaining the per-sample minimum (deterministic tie-break).
    """
    g, us = _check_us(g, u_lists, 4)
    scores = np.einsum("ij,nkij->nk", g, us)
    j_star = scores.argmin(axis=1)
    mins = scores[np.arange(scores.shape[0]), j_star]
    active = mins < 1.0
    if not np.any(active):
        return np.zeros_like(g)
    picked = us[np.nonzero(active)[0], j_star[active]]
    return -picked.sum(axis=0) / us.shape[0]


def solve(us, constraint, cfg: SolverConfig | None = None) -> SolveReport:
    """Run projected subgradient descent from G_0 = 0.

    Accepts a (n, d, d) stack for single-negative data or a (n, k, d, d)
    stack for multi-negative data. Stops when the running best objective
    falls to cfg.tol, when the stall window (if enabled) elapses without
    improvement beyond tol, when a zero subgradient certifies optimality,
    or after max_iters steps. Every iterate is projected, so the reported
    matrix is feasible up to the projection tolerance.
    """
    cfg = cfg if cfg is not None else SolverConfig()
    try:
        us = np.asarray(us, dtype=float)
    except ValueError as exc:
        raise InvalidInput(f"ragged lift collection: {exc}") from exc
    if us.ndim == 3:
        objective, subgrad = hinge_objective, subgradient
    elif us.ndim == 4:
        objective, subgrad = hinge_objective_multi, subgradient_multi
    else:
        raise InvalidInput(f"lift array must be 3-d or 4-d, got shape {us.shape}")
    if us.shape[0] == 0:
        raise InvalidInput("at least one sample is required")
    d = us.shape[-1]

    step0 = cfg.step0
    if step0 is None:
        flat = us.reshape(us.shape[0], -1) if us.ndim == 3 else us.reshape(-1, d * d)
        max_fro = float(np.sqrt((flat**2).sum(axis=1)).max())
        step0 = constraint.radius / (1.0 + max_fro)

    if cfg.perturb_init:
        rng = np.random.default_rng(cfg.seed)
        g = constraint.project(1e-6 * constraint.radius * symmetrize(rng.standard_normal((d, d))))
    else:
        g = np.zeros((d, d))

    f = objective(g, us)
    trace = [f]
    best = f
    g_best = g.copy()
    ref_obj = f
    ref_iter = 0
    steps = 0
    for t in range(cfg.max_iters):
        if best <= cfg.tol:
            break
        if cfg.stall_window > 0 and t - ref_iter >= cfg.stall_window:
            break
        d_g = subgrad(g, us)
        if not d_g.any():
            break  # 0 in the subdifferential: g is a global minimizer
        g = constraint.project(g - (step0 / math.sqrt(t + 1.0)) * d_g)
        f = objective(g, us)
        trace.append(f)
        steps = t + 1
        if f < best:
            best = f
            g_best = g.copy()
        if ref_obj - best > cfg.tol:
            ref_obj = best
            ref_iter = t + 1
    return SolveReport(
        g_hat=g_best,
        best_objective=best,
        objective_trace=trace,
        iterations_run=steps,
        feasibility_residual=constraint.feasibility_residual(g_best),
    )
