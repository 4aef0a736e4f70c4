"""Minimizers for the weighted functional on the packed free unknowns.

An objective handle is any object with ``fg(v) -> (value, gradient)`` on a
real vector ``v``.  Both minimizers accept an optional metric, a callable
mapping a Euclidean gradient to the steepest-descent direction of another
inner product (see :func:`h2_metric`).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla

from .errors import OptimizerInputError
from .mesh import BoundaryConstraint

STEP_FLOOR = "step floor"
ITERATION_CAP = "iteration cap"


@dataclass(frozen=True)
class ScheduleParams:
    step0: float = 1e-7
    shrink: float = 10.0
    grow_every: int = 1000
    grow: float = 10.0
    max_iter: int = 15000
    min_step: float = 1e-14
    restart_every: int = 50

    def __post_init__(self):
        for name in ("step0", "shrink", "grow", "min_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iter < 1 or self.grow_every < 1 or self.restart_every < 1:
            raise ValueError("iteration counts must be >= 1")


@dataclass
class RunTrace:
    iterations: int = 0
    accepted: list = field(default_factory=list)   # objective after each accepted step
    rows: list = field(default_factory=list)       # (iter, J of current iterate, step)
    final_step: float = 0.0
    reason: str = ""

    @property
    def final_value(self) -> float:
        return self.accepted[-1]

    def is_monotone(self) -> bool:
        a = np.asarray(self.accepted)
        return bool(np.all(np.diff(a) <= 0.0))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh, lineterminator="\n")
            out.writerow(["iter", "J", "step"])
            for it, val, step in self.rows:
                out.writerow([it, f"{val:.17g}", f"{step:.17g}"])


Metric = Callable[[np.ndarray], np.ndarray]


def h2_metric(constraint: BoundaryConstraint) -> Metric:
    """Riesz map of the discrete H^2 inner product on the free unknowns.

    Turns the Euclidean gradient of the packed vector into the H^2 gradient,
    which removes the h^-4 stiffness of the second-difference term.
    """
    cho = sla.cho_factor(constraint.free_gram)
    shape = (2, constraint.n_free, constraint.n)

    def apply(g: np.ndarray) -> np.ndarray:
        g = g.reshape(shape)
        return np.stack([sla.cho_solve(cho, g[0]), sla.cho_solve(cho, g[1])]).ravel()

    return apply


def packed_h2_norm(v: np.ndarray, constraint: BoundaryConstraint) -> float:
    """||A z||_{H^2} for the packed free vector of a state with zero triple."""
    z = v.reshape(2, constraint.n_free, constraint.n)
    G = constraint.free_gram
    return float(np.sqrt(sum(np.sum(part * (G @ part)) for part in z)))


def _start(objective, v0) -> tuple[np.ndarray, float, np.ndarray]:
    v = np.array(v0, dtype=float)
    val, grad = objective.fg(v)
    if not np.isfinite(val) or not np.all(np.isfinite(grad)):
        raise OptimizerInputError("objective or gradient is not finite at the initial point")
    return v, val, grad


def minimize_cg(v0, objective, schedule: ScheduleParams = ScheduleParams(),
                metric: Metric | None = None, trace_rows: bool = False):
    """Polak-Ribiere conjugate gradients with a fixed step schedule.

    A candidate is accepted only if it strictly lowers the objective;
    otherwise the step is divided by ``shrink`` and the direction restarts
    from steepest descent.  Every ``grow_every`` iterations (accepted or not)
    the step is multiplied by ``grow``.  Returns the best state seen and
    its trace.
    """
    precond = metric if metric is not None else (lambda g: g)
    v, val, grad = _start(objective, v0)
    s = precond(grad)
    d = -s
    step = schedule.step0
    trace = RunTrace(accepted=[val])
    if trace_rows:
        trace.rows.append((0, val, step))
    since_restart = 0
    reason = ITERATION_CAP
    it = 0
    for it in range(1, schedule.max_iter + 1):
        cand = v + step * d
        cval, cgrad = objective.fg(cand)
        if np.isfinite(cval) and cval < val:
            cs = precond(cgrad)
            since_restart += 1
            if since_restart >= schedule.restart_every:
                beta, since_restart = 0.0, 0
            else:
                denom = float(grad @ s)
                beta = max(0.0, float(cgrad @ (cs - s)) / denom) if denom > 0 else 0.0
            v, val, grad, s = cand, cval, cgrad, cs
            d = -s + beta * d
            trace.accepted.append(val)
        else:
            step /= schedule.shrink
            d = -s
            since_restart = 0
        if it % schedule.grow_every == 0:
            step *= schedule.grow
        if trace_rows:
            trace.rows.append((it, val, step))
        if step < schedule.min_step:
            reason = STEP_FLOOR
            break
    trace.iterations = it
    trace.final_step = step
    trace.reason = reason
    return v, trace


def minimize_gradient_projection(p0, objective, R: float, gamma: float = 1e-7,
                                 max_iter: int = 1000,
                                 norm: Callable[[np.ndarray], float] | None = None,
                                 metric: Metric | None = None, trace_rows: bool = False):
    """p_n = P_R(p_{n-1} - gamma Phi'(p_{n-1})) with radial projection P_R.

    ``objective`` evaluates Phi on packed vectors of p (zero boundary
    triple); ``norm`` is the H^2 norm of such a vector.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if R <= 0:
        raise ValueError("R must be positive")
    norm = norm if norm is not None else (lambda v: float(np.linalg.norm(v)))
    precond = metric if metric is not None else (lambda g: g)
    p, val, grad = _start(objective, p0)
    if norm(p) > R * (1 + 1e-12):
        raise OptimizerInputError(f"initial point outside the ball of radius {R}")
    trace = RunTrace(accepted=[val])
    if trace_rows:
        trace.rows.append((0, val, gamma))
    for it in range(1, max_iter + 1):
        q = p - gamma * precond(grad)
        nq = norm(q)
        if nq > R:
            q = q * (R / nq)
        p = q
        val, grad = objective.fg(p)
        trace.accepted.append(val)
        if trace_rows:
            trace.rows.append((it, val, gamma))
    trace.iterations = max_iter
    trace.final_step = gamma
    trace.reason = ITERATION_CAP
    return p, trace


@dataclass(frozen=True)
class ShiftedObjective:
    """Phi(p) = J(p + f) on packed vectors: a constant shift of the argument."""

    objective: object
    shift: np.ndarray

    def fg(self, v):
        return self.objective.fg(np.asarray(v) + self.shift)
