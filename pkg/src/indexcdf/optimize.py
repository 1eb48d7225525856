"""Direction search: downhill simplex minimization of the sphere criterion.

The search runs over unconstrained vectors v in R^d with normalization inside
the objective, which avoids spherical-coordinate charts; the sign ambiguity
is harmless because the criterion is even in theta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criterion import CriterionEvaluator, SphereSet
from .data import Dataset
from .directions import ZERO_TOL, Direction, canonicalize
from .errors import NumericalError, ValidationError
from .kernels import EPANECHNIKOV, Kernel

_TINY = 1e-300


@dataclass(frozen=True)
class SimplexOptions:
    initial_step: float = 0.1
    max_iterations: int = 500
    rel_tolerance: float = 1e-6
    restarts: int = 2

    def __post_init__(self):
        if self.initial_step <= 0 or self.rel_tolerance <= 0:
            raise ValidationError("initial_step and rel_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if self.restarts < 0:
            raise ValidationError("restarts must be >= 0")


@dataclass(frozen=True)
class ThetaFit:
    theta: Direction
    criterion: float
    iterations: int
    converged: bool
    trace: tuple


def _simplex_search(objective, init, options: SimplexOptions):
    """Press-style downhill simplex.

    Returns (best_x, best_f, iterations, converged, trace).  Convergence is
    declared when the relative spread of vertex values drops below
    rel_tolerance.  The best value never exceeds objective(init).
    """
    x0 = np.asarray(init, dtype=float)
    d = x0.size
    verts = [x0.copy()]
    for k in range(d):
        v = x0.copy()
        v[k] += options.initial_step
        verts.append(v)
    vals = []
    for v in verts:
        fv = float(objective(v))
        if not np.isfinite(fv):
            raise NumericalError("objective is non-finite on the initial simplex")
        vals.append(fv)
    verts = np.asarray(verts)
    vals = np.asarray(vals)

    def f(x):
        fx = float(objective(x))
        return fx if np.isfinite(fx) else np.inf

    trace = []
    converged = False
    iterations = 0
    for iteration in range(1, options.max_iterations + 1):
        iterations = iteration
        order = np.argsort(vals, kind="stable")
        verts = verts[order]
        vals = vals[order]
        best, worst, second = vals[0], vals[-1], vals[-2]
        trace.append((iteration, float(best)))
        spread = 2.0 * abs(worst - best) / (abs(worst) + abs(best) + _TINY)
        if spread <= options.rel_tolerance:
            converged = True
            break
        centroid = verts[:-1].mean(axis=0)
        reflected = centroid + (centroid - verts[-1])
        f_r = f(reflected)
        if f_r < best:
            expanded = centroid + 2.0 * (centroid - verts[-1])
            f_e = f(expanded)
            if f_e < f_r:
                verts[-1], vals[-1] = expanded, f_e
            else:
                verts[-1], vals[-1] = reflected, f_r
        elif f_r < second:
            verts[-1], vals[-1] = reflected, f_r
        else:
            if f_r < worst:
                contracted = centroid + 0.5 * (reflected - centroid)
            else:
                contracted = centroid + 0.5 * (verts[-1] - centroid)
            f_c = f(contracted)
            if f_c < min(f_r, worst):
                verts[-1], vals[-1] = contracted, f_c
            else:
                # Shrink every vertex halfway toward the best.
                for k in range(1, d + 1):
                    verts[k] = verts[0] + 0.5 * (verts[k] - verts[0])
                    vals[k] = f(verts[k])
    kbest = int(np.argmin(vals))
    return verts[kbest].copy(), float(vals[kbest]), iterations, converged, tuple(trace)


def nelder_mead_minimize(objective, init, options: SimplexOptions | None = None):
    """Minimize a scalar function of R^d by the downhill simplex method.

    Returns (minimizer, value).
    """
    options = options or SimplexOptions()
    x, fx, _, _, _ = _simplex_search(objective, init, options)
    return x, fx


def fit_theta(
    data: Dataset,
    spheres: SphereSet,
    h: float,
    init: Direction | None = None,
    options: SimplexOptions | None = None,
    seed: int = 0,
    kernel: Kernel = EPANECHNIKOV,
) -> ThetaFit:
    """Minimize the sphere criterion over canonical directions.

    The first start is `init` (or the OLS slope direction when absent);
    `options.restarts` further starts are drawn uniformly on the sphere from
    a generator seeded by (seed, restart index).  The best result wins, with
    ties broken by the lexicographically smallest direction.
    """
    options = options or SimplexOptions()
    evaluator = CriterionEvaluator(data, spheres, h, kernel=kernel)

    def objective(v):
        norm = float(np.linalg.norm(v))
        if not np.isfinite(norm) or norm <= ZERO_TOL:
            return np.inf
        return evaluator.evaluate(canonicalize(v)).total

    if init is None:
        from .bandwidth import ols_fit  # deferred: bandwidth imports fit_theta

        start = canonicalize(ols_fit(data).beta).components
    else:
        start = init.components
    starts = [start]
    for r in range(options.restarts):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))
        vec = rng.standard_normal(data.d)
        while float(np.linalg.norm(vec)) <= ZERO_TOL:
            vec = rng.standard_normal(data.d)
        starts.append(canonicalize(vec).components)

    best = None
    for start_vec in starts:
        x, fx, iters, conv, trace = _simplex_search(objective, start_vec, options)
        if not np.isfinite(fx):
            continue
        theta = canonicalize(x)
        key = (fx, tuple(theta.components))
        if best is None or key < best[0]:
            best = (key, theta, fx, iters, conv, trace)
    if best is None:
        raise NumericalError("no simplex start produced a finite criterion value")
    _, theta, fx, iters, conv, trace = best
    return ThetaFit(
        theta=theta, criterion=fx, iterations=iters, converged=conv, trace=trace
    )
