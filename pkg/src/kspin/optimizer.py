"""Generic L1-regularized minimizer: accelerated proximal gradient with
backtracking line search and adaptive restart.

The smooth part is supplied as an oracle ``loss(x, need_grad=True)``
returning a :class:`~kspin.objectives.LossEval`; the solver adds the
lambda * ||x||_1 term.  The Lipschitz constant is never needed: the step is
halved until the quadratic upper bound holds, and momentum is reset
whenever it would increase the composite objective, which keeps the
objective trace non-increasing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidModelError
from .objectives import LossEval

__all__ = ["SolverConfig", "FitResult", "soft_threshold", "minimize_l1"]


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 5000
    tol_rel_objective: float = 1e-9
    tol_kkt: float = 1e-6
    initial_step: float = 1.0
    backtrack_factor: float = 0.5
    restart_on_nonmonotone: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tol_rel_objective <= 0 or self.tol_kkt <= 0 or self.initial_step <= 0:
            raise ValueError("tolerances and initial_step must be > 0")
        if not (0.0 < self.backtrack_factor < 1.0):
            raise ValueError("backtrack_factor must be in (0, 1)")


@dataclass
class FitResult:
    coeffs: np.ndarray
    objective_trace: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    kkt_residual: float = float("inf")
    overflow_seen: bool = False


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Entrywise sign(v) * max(|v| - t, 0), the prox of t * ||.||_1."""
    if t < 0:
        raise ValueError(f"threshold must be nonnegative, got {t}")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _kkt_residual(x: np.ndarray, grad: np.ndarray, lam: float) -> float:
    """Max over coordinates of the distance from -grad to the L1
    subdifferential lam * d||.||_1 at x."""
    on = x != 0.0
    res_on = np.abs(grad[on] + lam * np.sign(x[on]))
    res_off = np.maximum(np.abs(grad[~on]) - lam, 0.0)
    worst = 0.0
    if res_on.size:
        worst = max(worst, float(res_on.max()))
    if res_off.size:
        worst = max(worst, float(res_off.max()))
    return worst


def minimize_l1(
    loss,
    dim: int,
    lam: float,
    cfg: SolverConfig | None = None,
    warm_start: np.ndarray | None = None,
) -> FitResult:
    """Minimize loss(x) + lam * ||x||_1 over R^dim.

    ``loss`` must be convex and differentiable; it is called as
    ``loss(x, need_grad=True)`` and must return a LossEval.  Starts from
    ``warm_start`` when given, else from zero.  Convergence requires both a
    flat objective over a 5-iteration window and a KKT residual below
    tol_kkt.
    """
    cfg = cfg or SolverConfig()
    if lam < 0:
        raise ValueError(f"lambda must be nonnegative, got {lam}")
    if warm_start is not None:
        x = np.asarray(warm_start, dtype=np.float64).copy()
        if x.shape != (dim,):
            raise ValueError(f"warm_start has shape {x.shape}, expected ({dim},)")
    else:
        x = np.zeros(dim)

    ev = loss(x, True)
    overflow = ev.overflow
    if not np.isfinite(ev.value) or not np.all(np.isfinite(ev.gradient)):
        raise InvalidModelError("loss is non-finite at the starting point")
    fx, gx = ev.value, ev.gradient
    Fx = fx + lam * float(np.abs(x).sum())
    trace = [Fx]
    kkt = _kkt_residual(x, gx, lam)

    y, fy, gy = x, fx, gx
    t_mom = 1.0
    step = cfg.initial_step
    converged = False
    it = 0

    for it in range(1, cfg.max_iterations + 1):
        # let the step recover from transiently high curvature
        step = min(step / cfg.backtrack_factor, cfg.initial_step)
        restarted = False
        while True:
            # backtracked prox step from y
            while True:
                z = soft_threshold(y - step * gy, step * lam)
                evz = loss(z, True)
                overflow = overflow or evz.overflow
                dz = z - y
                bound = fy + gy @ dz + (dz @ dz) / (2.0 * step)
                if evz.value <= bound + 1e-12 * (1.0 + abs(bound)) or step < 1e-18:
                    break
                step *= cfg.backtrack_factor
            Fz = evz.value + lam * float(np.abs(z).sum())
            if (
                cfg.restart_on_nonmonotone
                and Fz > Fx + 1e-12 * (1.0 + abs(Fx))
                and not restarted
                and y is not x
            ):
                # momentum overshot: drop it and redo the step from x,
                # which the majorization bound guarantees to be monotone
                y, fy, gy = x, fx, gx
                t_mom = 1.0
                restarted = True
                continue
            break

        x_prev = x
        x, fx, gx, Fx = z, evz.value, evz.gradient, Fz
        trace.append(Fx)
        kkt = _kkt_residual(x, gx, lam)

        if kkt <= cfg.tol_kkt and len(trace) > 5:
            rel = abs(trace[-6] - trace[-1]) / max(1.0, abs(trace[-1]))
            if rel < cfg.tol_rel_objective:
                converged = True
                break

        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom * t_mom))
        omega = (t_mom - 1.0) / t_new
        t_mom = t_new
        if omega == 0.0:
            y, fy, gy = x, fx, gx
        else:
            y = x + omega * (x - x_prev)
            evy = loss(y, True)
            overflow = overflow or evy.overflow
            fy, gy = evy.value, evy.gradient

    return FitResult(
        coeffs=x,
        objective_trace=trace,
        iterations=it,
        converged=converged,
        kkt_residual=kkt,
        overflow_seen=overflow,
    )
