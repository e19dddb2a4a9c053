"""Derivative-free minimization over real vectors.

Three layers: a classic reflect/expand/contract/shrink simplex
(``nelder_mead``), a subspace-cycling wrapper that runs the simplex on
small blocks of coordinates ordered by recent progress (``subplex``),
and a seeded multi-start driver (``multi_start``) for non-convex
landscapes.  Everything is deterministic for a fixed seed and respects a
hard evaluation budget.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteObjective

XTOL = "xtol"
FTOL = "ftol"
MAX_EVALS = "max_evals"


@dataclass(frozen=True)
class SimplexConfig:
    """Coefficients and stopping rules for one simplex run."""

    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    x_tol: float = 1e-8
    f_tol: float = 1e-12
    max_evals: int = 200_000

    def __post_init__(self):
        if self.expansion <= 1.0:
            raise ValueError("expansion coefficient must be > 1")
        if not 0.0 < self.contraction < 1.0:
            raise ValueError("contraction coefficient must be in (0, 1)")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink coefficient must be in (0, 1)")
        if self.x_tol <= 0.0 or self.f_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_evals < 1:
            raise ValueError("max_evals must be at least 1")


@dataclass(frozen=True)
class SubplexConfig:
    """Subspace bounds, initial step and restart policy on top of a simplex."""

    simplex: SimplexConfig = field(default_factory=SimplexConfig)
    nsmin: int = 2
    nsmax: int = 5
    initial_step: float = 0.1
    restarts: int = 32
    rng_seed: int = 0

    def __post_init__(self):
        if not 1 <= self.nsmin <= self.nsmax:
            raise ValueError("need 1 <= nsmin <= nsmax")
        if self.initial_step <= 0.0:
            raise ValueError("initial_step must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be at least 1")


@dataclass(frozen=True, eq=False)
class OptResult:
    """Best point found plus bookkeeping for diagnostics."""

    best_x: np.ndarray
    best_f: float
    evals: int
    converged_by: str
    per_restart_f: np.ndarray


class _BudgetExhausted(Exception):
    """Internal control flow: the evaluation budget ran out."""


class _Evaluator:
    """Counts evaluations, enforces the budget, maps one NaN/inf to +inf."""

    __slots__ = ("func", "max_evals", "evals", "nonfinite")

    def __init__(self, func, max_evals):
        self.func = func
        self.max_evals = max_evals
        self.evals = 0
        self.nonfinite = 0

    @property
    def remaining(self):
        return self.max_evals - self.evals

    def __call__(self, x):
        if self.evals >= self.max_evals:
            raise _BudgetExhausted
        self.evals += 1
        value = float(self.func(x))
        if not math.isfinite(value):
            self.nonfinite += 1
            if self.nonfinite > 1:
                raise NonFiniteObjective(
                    "objective returned a non-finite value more than once"
                )
            value = math.inf
        return value


def _initial_steps(x0, step):
    """Per-coordinate simplex offsets; scalar steps scale with |x0|.

    Relative scaling keeps the search trajectory covariant under an
    overall rescaling of the start point, which matters when the
    objective itself is scale-invariant.
    """
    if np.ndim(step) > 0:
        s = np.asarray(step, dtype=float)
        if s.shape != x0.shape:
            raise ValueError("step array must match x0 shape")
        return s.copy()
    return np.where(x0 != 0.0, step * x0, step)


def _nm_core(ev, x0, cfg, steps):
    """One simplex run through a shared evaluator.

    Returns (best_x, best_f, reason); never loses its best vertex, so
    the result is no worse than the start point.
    """
    n = x0.size
    sim = np.repeat(x0[np.newaxis, :], n + 1, axis=0)
    for k in range(n):
        sim[k + 1, k] += steps[k]
    fsim = np.full(n + 1, math.inf)
    evaluated = 0
    try:
        for i in range(n + 1):
            fsim[i] = ev(sim[i])
            evaluated = i + 1
    except _BudgetExhausted:
        k = int(np.argmin(fsim[:evaluated])) if evaluated else 0
        return sim[k].copy(), float(fsim[k]), MAX_EVALS

    alpha = cfg.reflection
    chi = cfg.expansion
    psi = cfg.contraction
    sigma = cfg.shrink
    reason = None
    while reason is None:
        order = np.argsort(fsim, kind="stable")
        sim = sim[order]
        fsim = fsim[order]
        if np.abs(sim[1:] - sim[0]).max() < cfg.x_tol:
            reason = XTOL
            break
        if fsim[-1] - fsim[0] < cfg.f_tol:
            reason = FTOL
            break
        try:
            centroid = sim[:-1].mean(axis=0)
            xr = centroid + alpha * (centroid - sim[-1])
            fr = ev(xr)
            if fr < fsim[0]:
                xe = centroid + alpha * chi * (centroid - sim[-1])
                fe = ev(xe)
                if fe < fr:
                    sim[-1], fsim[-1] = xe, fe
                else:
                    sim[-1], fsim[-1] = xr, fr
            elif fr < fsim[-2]:
                sim[-1], fsim[-1] = xr, fr
            else:
                shrink_needed = False
                if fr < fsim[-1]:
                    xc = centroid + psi * alpha * (centroid - sim[-1])
                    fc = ev(xc)
                    if fc <= fr:
                        sim[-1], fsim[-1] = xc, fc
                    else:
                        shrink_needed = True
                else:
                    xcc = centroid - psi * (centroid - sim[-1])
                    fcc = ev(xcc)
                    if fcc < fsim[-1]:
                        sim[-1], fsim[-1] = xcc, fcc
                    else:
                        shrink_needed = True
                if shrink_needed:
                    for i in range(1, n + 1):
                        xs = sim[0] + sigma * (sim[i] - sim[0])
                        fs = ev(xs)
                        sim[i], fsim[i] = xs, fs
        except _BudgetExhausted:
            reason = MAX_EVALS
    best = int(np.argmin(fsim))
    return sim[best].copy(), float(fsim[best]), reason


def nelder_mead(f, x0, cfg=None, *, step=0.1):
    """Minimize f from x0 with a single Nelder-Mead simplex.

    ``step`` sizes the initial simplex (scalar: relative to each
    coordinate; array: absolute per-coordinate offsets).  Stops when the
    simplex diameter drops below ``x_tol``, the value spread drops below
    ``f_tol``, or the budget runs out.
    """
    cfg = cfg if cfg is not None else SimplexConfig()
    x0 = np.asarray(x0, dtype=float).ravel()
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    ev = _Evaluator(f, cfg.max_evals)
    best_x, best_f, reason = _nm_core(ev, x0, cfg, _initial_steps(x0, step))
    return OptResult(
        best_x=best_x,
        best_f=best_f,
        evals=ev.evals,
        converged_by=reason,
        per_restart_f=np.array([best_f]),
    )


def _partition_sizes(n, nsmin, nsmax):
    """Split n coordinates into blocks sized within [nsmin, nsmax]."""
    for k in range(math.ceil(n / nsmax), n // max(nsmin, 1) + 1):
        base, extra = divmod(n, k)
        if base >= nsmin and base + (1 if extra else 0) <= nsmax:
            return [base + 1] * extra + [base] * (k - extra)
    # Infeasible bounds (e.g. nsmin=nsmax=2 with odd n): keep nsmax, let
    # the last block go short.
    k = math.ceil(n / nsmax)
    base, extra = divmod(n, k)
    return [base + 1] * extra + [base] * (k - extra)


class _SubObjective:
    """Objective restricted to a coordinate block, others held fixed."""

    __slots__ = ("ev", "base", "idx")

    def __init__(self, ev, base, idx):
        self.ev = ev
        self.base = base
        self.idx = idx

    def __call__(self, y):
        z = self.base.copy()
        z[self.idx] = y
        return self.ev(z)


def subplex(f, x0, cfg=None):
    """Minimize f by cycling Nelder-Mead over progress-ordered subspaces.

    Coordinates are sorted by the magnitude of their change in the last
    cycle and partitioned into blocks of nsmin..nsmax; each block is
    minimized with the others frozen.  Cycling stops when a full cycle
    improves less than ``f_tol``, moves less than ``x_tol``, or exhausts
    the budget.  The best value is non-increasing across cycles.
    """
    cfg = cfg if cfg is not None else SubplexConfig()
    scfg = cfg.simplex
    x0 = np.asarray(x0, dtype=float).ravel()
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    n = x0.size
    ev = _Evaluator(f, scfg.max_evals)

    if n <= cfg.nsmax:
        best_x, best_f, reason = _nm_core(
            ev, x0, scfg, _initial_steps(x0, cfg.initial_step)
        )
        return OptResult(
            best_x=best_x,
            best_f=best_f,
            evals=ev.evals,
            converged_by=reason,
            per_restart_f=np.array([best_f]),
        )

    x = x0.copy()
    try:
        fx = ev(x)
    except _BudgetExhausted:
        return OptResult(
            best_x=x,
            best_f=math.inf,
            evals=ev.evals,
            converged_by=MAX_EVALS,
            per_restart_f=np.array([math.inf]),
        )
    step_vec = _initial_steps(x0, cfg.initial_step)
    dx = np.zeros(n)
    sizes = _partition_sizes(n, cfg.nsmin, cfg.nsmax)
    reason = None
    while reason is None:
        if ev.remaining <= 0:
            reason = MAX_EVALS
            break
        x_prev = x.copy()
        f_prev = fx
        order = np.argsort(-np.abs(dx), kind="stable")
        start = 0
        for size in sizes:
            if ev.remaining <= 0:
                reason = MAX_EVALS
                break
            idx = order[start : start + size]
            start += size
            sub = _SubObjective(ev, x, idx)
            sub_x, sub_f, sub_reason = _nm_core(sub, x[idx], scfg, step_vec[idx])
            if sub_f <= fx:
                x = x.copy()
                x[idx] = sub_x
                fx = sub_f
            if sub_reason == MAX_EVALS and ev.remaining <= 0:
                reason = MAX_EVALS
                break
        if reason is not None:
            break
        dx = x - x_prev
        if np.abs(dx).max() < scfg.x_tol:
            reason = XTOL
        elif f_prev - fx < scfg.f_tol:
            reason = FTOL
        else:
            dx_norm = np.abs(dx).sum()
            step_norm = np.abs(step_vec).sum()
            scale = dx_norm / step_norm if dx_norm > 0.0 and step_norm > 0.0 else 0.25
            scale = min(max(scale, 0.1), 10.0)
            magnitude = scale * np.abs(step_vec)
            sign = np.where(dx != 0.0, np.sign(dx), np.sign(step_vec))
            step_vec = sign * magnitude
    return OptResult(
        best_x=x,
        best_f=fx,
        evals=ev.evals,
        converged_by=reason,
        per_restart_f=np.array([fx]),
    )


def multi_start(f, sampler, cfg=None):
    """Run subplex from ``cfg.restarts`` sampled starts; keep the best.

    ``sampler(rng)`` must return a start vector; it is called with a
    generator seeded from ``cfg.rng_seed``, so results are reproducible.
    Individual starts may fail with a non-finite objective; the call
    fails only if every start does.
    """
    cfg = cfg if cfg is not None else SubplexConfig()
    rng = np.random.default_rng(cfg.rng_seed)
    results = []
    last_error = None
    for _ in range(cfg.restarts):
        start = np.asarray(sampler(rng), dtype=float).ravel()
        try:
            results.append(subplex(f, start, cfg))
        except NonFiniteObjective as exc:
            results.append(None)
            last_error = exc
    if all(r is None for r in results):
        raise NonFiniteObjective(
            f"all {cfg.restarts} starts failed"
        ) from last_error
    per_restart = np.array(
        [r.best_f if r is not None else math.inf for r in results]
    )
    winner = min(
        (r for r in results if r is not None), key=lambda r: r.best_f
    )
    return OptResult(
        best_x=winner.best_x,
        best_f=winner.best_f,
        evals=sum(r.evals for r in results if r is not None),
        converged_by=winner.converged_by,
        per_restart_f=per_restart,
    )
