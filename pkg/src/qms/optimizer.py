"""Box-clamped Nelder-Mead and a seeded multi-start driver."""

from __future__ import annotations

import math
import os
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError

REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5


@dataclass(frozen=True)
class OptimizerConfig:
    max_evals: int
    box: tuple[tuple[float, float], ...]
    f_tol: float = 1e-6
    restarts: int = 1
    seed: int = 0
    initial_step: float = 0.1
    """Initial simplex edge as a fraction of each box width."""

    def __post_init__(self):
        object.__setattr__(self, "box", tuple((float(lo), float(hi)) for lo, hi in self.box))
        if not self.box:
            raise ValidationError("box must have at least one dimension")
        if self.max_evals < len(self.box) + 1:
            raise ValidationError("max_evals must be at least dimension + 1")
        if not self.f_tol > 0:
            raise ValidationError("f_tol must be positive")
        if self.restarts < 1:
            raise ValidationError("restarts must be >= 1")
        for lo, hi in self.box:
            if not lo < hi:
                raise ValidationError(f"empty box interval [{lo}, {hi}]")

    @property
    def dim(self) -> int:
        return len(self.box)


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    evals: int
    converged: bool
    trace: list[float] = field(default_factory=list, repr=False)
    """Best-so-far value after each evaluation."""


class _Counted:
    def __init__(self, f, lo, hi, budget):
        self.f, self.lo, self.hi, self.budget = f, lo, hi, budget
        self.evals = 0
        self.best_x = None
        self.best_f = math.inf
        self.trace: list[float] = []

    def __call__(self, x: np.ndarray) -> float:
        x = np.clip(x, self.lo, self.hi)
        val = float(self.f(x))
        if not math.isfinite(val):
            raise NumericalError(f"objective returned {val} at x={x.tolist()}")
        self.evals += 1
        if val < self.best_f:
            self.best_f, self.best_x = val, x.copy()
        self.trace.append(self.best_f)
        return val

    @property
    def exhausted(self) -> bool:
        return self.evals >= self.budget


def _nelder_mead(fc: _Counted, x0, lo, hi, cfg: OptimizerConfig) -> bool:
    d = cfg.dim

    simplex = [x0.copy()]
    for i in range(d):
        step = cfg.initial_step * (hi[i] - lo[i])
        v = x0.copy()
        v[i] = v[i] + step if v[i] + step <= hi[i] else v[i] - step
        simplex.append(np.clip(v, lo, hi))
    values = [fc(v) for v in simplex]

    while True:
        order = np.argsort(values, kind="stable")
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        if values[-1] - values[0] < cfg.f_tol:
            return True
        if fc.exhausted:
            return False

        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        xr = np.clip(centroid + REFLECT * (centroid - worst), lo, hi)
        fr = fc(xr)
        if fr < values[0]:
            if fc.exhausted:
                simplex[-1], values[-1] = xr, fr
                continue
            xe = np.clip(centroid + EXPAND * (xr - centroid), lo, hi)
            fe = fc(xe)
            simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
            continue
        if fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
            continue
        if fc.exhausted:
            continue
        if fr < values[-1]:
            xc = np.clip(centroid + CONTRACT * (xr - centroid), lo, hi)
            fcv = fc(xc)
            accept = fcv <= fr
        else:
            xc = np.clip(centroid + CONTRACT * (worst - centroid), lo, hi)
            fcv = fc(xc)
            accept = fcv < values[-1]
        if accept:
            simplex[-1], values[-1] = xc, fcv
            continue
        best = simplex[0]
        for i in range(1, d + 1):
            if fc.exhausted:
                break
            simplex[i] = best + SHRINK * (simplex[i] - best)
            values[i] = fc(simplex[i])


def minimize(
    f: Callable[[np.ndarray], float], x0: Sequence[float], cfg: OptimizerConfig
) -> MinimizeResult:
    """Nelder-Mead with every trial point clamped into ``cfg.box``.

    Converged means the spread of simplex values fell below ``cfg.f_tol``
    before ``cfg.max_evals`` evaluations.
    """
    lo = np.array([b[0] for b in cfg.box])
    hi = np.array([b[1] for b in cfg.box])
    x0 = np.asarray(x0, dtype=float)
    d = cfg.dim
    if x0.shape != (d,):
        raise ValidationError(f"x0 has shape {x0.shape}, box has {d} dimensions")
    if np.any(x0 < lo) or np.any(x0 > hi):
        raise ValidationError("x0 lies outside the box")
    fc = _Counted(f, lo, hi, cfg.max_evals)
    converged = _nelder_mead(fc, x0, lo, hi, cfg)
    # O'Neill-style check: rebuild the simplex around the optimum and rerun
    # until a fresh simplex no longer improves on it.
    while converged and not fc.exhausted:
        before = fc.best_f
        converged = _nelder_mead(fc, fc.best_x, lo, hi, cfg)
        if before - fc.best_f < cfg.f_tol:
            break
    return MinimizeResult(fc.best_x, fc.best_f, fc.evals, converged, fc.trace)


def _threads() -> int:
    env = os.environ.get("QMS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValidationError(f"QMS_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def start_points(x0: Sequence[float], cfg: OptimizerConfig) -> list[np.ndarray]:
    """Restart 0 is ``x0``; the rest are uniform in the box from ``cfg.seed``."""
    rng = np.random.default_rng(cfg.seed)
    lo = np.array([b[0] for b in cfg.box])
    hi = np.array([b[1] for b in cfg.box])
    points = [np.asarray(x0, dtype=float)]
    for _ in range(cfg.restarts - 1):
        points.append(lo + (hi - lo) * rng.random(cfg.dim))
    return points


def multi_start(
    f: Callable[[np.ndarray], float], x0: Sequence[float], cfg: OptimizerConfig
) -> tuple[MinimizeResult, list[MinimizeResult]]:
    """Best result over all restarts (lowest restart index wins ties) and the per-restart list.

    Restarts may run on worker threads (capped by ``QMS_THREADS``); ``f``
    must be reentrant.
    """
    points = start_points(x0, cfg)
    workers = min(_threads(), len(points))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda x: minimize(f, x, cfg), points))
    else:
        results = [minimize(f, x, cfg) for x in points]
    best = min(range(len(results)), key=lambda i: (results[i].fun, i))
    return results[best], results
