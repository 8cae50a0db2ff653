"""Derivative-free minimizers: Nelder-Mead simplex and Powell direction set.

Both methods are deterministic, never report a value worse than the starting
point, and terminate once the function spread and step size fall under
f_tol/x_tol or an iteration cap (200 * n by default) is hit.  Box
constraints are handled by a logistic reparameterization so the methods
themselves stay unconstrained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

_GOLD = 1.618033988749895
_TINY = 1e-25


@dataclass(frozen=True)
class Objective:
    """Scalar cost over a real parameter vector of fixed dimension."""

    evaluate: Callable[[np.ndarray], float]
    n: int


@dataclass(frozen=True)
class OptOptions:
    f_tol: float = 1e-8
    x_tol: float = 1e-8
    max_iters: int | None = None  # None -> 200 * n
    initial_step: float = 0.25

    def iters_for(self, n: int) -> int:
        return 200 * n if self.max_iters is None else self.max_iters


@dataclass
class OptResult:
    x_best: np.ndarray
    f_best: float
    iterations: int
    converged: bool
    method: str
    n_evals: int = 0
    f_history: list[float] = field(default_factory=list)


def _as_objective(obj, x0: np.ndarray) -> Objective:
    if isinstance(obj, Objective):
        return obj
    return Objective(obj, len(x0))


def nelder_mead(obj, x0: Sequence[float], options: OptOptions | None = None) -> OptResult:
    """Simplex minimization with reflection 1, expansion 2, contraction 0.5,
    shrink 0.5 (Nelder & Mead 1965 / Lagarias et al. 1998 logic)."""
    options = options or OptOptions()
    x0 = np.asarray(x0, dtype=float)
    obj = _as_objective(obj, x0)
    n = obj.n
    if n < 1 or x0.shape != (n,):
        raise ValueError(f"x0 must be a vector of dimension {n}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    f = obj.evaluate
    n_evals = 0

    def ev(x):
        nonlocal n_evals
        n_evals += 1
        return float(f(x))

    f0 = ev(x0)
    if not math.isfinite(f0):
        raise ValueError(f"objective is not finite at x0 (f(x0)={f0})")
    max_iters = options.iters_for(n)
    if max_iters <= 0:
        return OptResult(x0.copy(), f0, 0, False, "nelder-mead", n_evals, [f0])

    # Initial simplex: absolute coordinate steps, so translated problems walk
    # translated simplices.
    verts = [x0.copy()]
    fvals = [f0]
    for i in range(n):
        v = x0.copy()
        v[i] += options.initial_step
        verts.append(v)
        fvals.append(ev(v))
    verts = np.array(verts)
    fvals = np.array(fvals)

    history: list[float] = []
    converged = False
    iterations = 0
    while iterations < max_iters:
        order = np.argsort(fvals, kind="stable")
        verts = verts[order]
        fvals = fvals[order]
        history.append(fvals[0])
        spread = fvals[-1] - fvals[0]
        size = np.max(np.abs(verts[1:] - verts[0]))
        # Both criteria must hold: a simplex straddling a minimum
        # symmetrically has zero spread while still far from it.
        if spread < options.f_tol and size < options.x_tol:
            converged = True
            break
        iterations += 1

        centroid = verts[:-1].mean(axis=0)
        xr = centroid + (centroid - verts[-1])
        fr = ev(xr)
        if fr < fvals[0]:
            xe = centroid + 2.0 * (centroid - verts[-1])
            fe = ev(xe)
            if fe < fr:
                verts[-1], fvals[-1] = xe, fe
            else:
                verts[-1], fvals[-1] = xr, fr
        elif fr < fvals[-2]:
            verts[-1], fvals[-1] = xr, fr
        else:
            if fr < fvals[-1]:
                xc = centroid + 0.5 * (centroid - verts[-1])  # outside
                fc = ev(xc)
                if fc <= fr:
                    verts[-1], fvals[-1] = xc, fc
                else:
                    verts, fvals = _shrink(verts, fvals, ev)
            else:
                xc = centroid - 0.5 * (centroid - verts[-1])  # inside
                fc = ev(xc)
                if fc < fvals[-1]:
                    verts[-1], fvals[-1] = xc, fc
                else:
                    verts, fvals = _shrink(verts, fvals, ev)

    order = np.argsort(fvals, kind="stable")
    best = order[0]
    if not history or fvals[best] < history[-1]:
        history.append(fvals[best])
    return OptResult(
        verts[best].copy(), float(fvals[best]), iterations, converged,
        "nelder-mead", n_evals, history,
    )


def _shrink(verts, fvals, ev):
    for i in range(1, len(verts)):
        verts[i] = verts[0] + 0.5 * (verts[i] - verts[0])
        fvals[i] = ev(verts[i])
    return verts, fvals


def _bracket(f1d, step: float):
    """Expand from 0 until three points bracket a minimum (golden-ratio
    expansion, Numerical Recipes mnbrak shape)."""
    a, fa = 0.0, f1d(0.0)
    b, fb = step, f1d(step)
    if fb > fa:
        a, b = b, a
        fa, fb = fb, fa
    c = b + _GOLD * (b - a)
    fc = f1d(c)
    n_grow = 0
    while fb > fc and n_grow < 60:
        n_grow += 1
        c_new = c + _GOLD * (c - b)
        a, b, c = b, c, c_new
        fa, fb, fc = fb, fc, f1d(c_new)
    return (a, b, c), (fa, fb, fc)


def _brent_1d(f1d, bracket, fbracket, tol: float, max_iter: int = 80):
    """Brent's parabolic/golden-section line minimization on a bracket."""
    a, b, c = bracket
    lo, hi = (a, c) if a < c else (c, a)
    x = w = v = b
    fx = fw = fv = fbracket[1]
    d = e = 0.0
    for _ in range(max_iter):
        xm = 0.5 * (lo + hi)
        tol1 = tol * abs(x) + _TINY
        tol2 = 2.0 * tol1
        if abs(x - xm) <= tol2 - 0.5 * (hi - lo):
            break
        use_golden = True
        if abs(e) > tol1:
            r = (x - w) * (fx - fv)
            q = (x - v) * (fx - fw)
            p = (x - v) * q - (x - w) * r
            q = 2.0 * (q - r)
            if q > 0.0:
                p = -p
            q = abs(q)
            e_prev = e
            e = d
            if abs(p) < abs(0.5 * q * e_prev) and p > q * (lo - x) and p < q * (hi - x):
                d = p / q
                u = x + d
                if u - lo < tol2 or hi - u < tol2:
                    d = tol1 if xm >= x else -tol1
                use_golden = False
        if use_golden:
            e = (hi - x) if x < xm else (lo - x)
            d = (2.0 - _GOLD) * e
        u = x + d if abs(d) >= tol1 else x + (tol1 if d > 0 else -tol1)
        fu = f1d(u)
        if fu <= fx:
            if u >= x:
                lo = x
            else:
                hi = x
            v, w, x = w, x, u
            fv, fw, fx = fw, fx, fu
        else:
            if u < x:
                lo = u
            else:
                hi = u
            if fu <= fw or w == x:
                v, w = w, u
                fv, fw = fw, fu
            elif fu <= fv or v == x or v == w:
                v, fv = u, fu
    return x, fx


def _line_minimize(ev, x: np.ndarray, fx: float, direction: np.ndarray,
                   tol: float, step: float = 1.0):
    """Minimize along x + alpha * direction; only strict improvements move."""
    norm = np.max(np.abs(direction))
    if norm == 0.0:
        return x, fx, 0.0

    def f1d(alpha):
        return ev(x + alpha * direction)

    bracket, fbracket = _bracket(f1d, step)
    alpha, f_alpha = _brent_1d(f1d, bracket, fbracket, tol)
    if f_alpha < fx:
        return x + alpha * direction, f_alpha, alpha
    return x, fx, 0.0


def powell(obj, x0: Sequence[float], options: OptOptions | None = None) -> OptResult:
    """Direction-set minimization with Brent line searches and the standard
    direction-replacement test."""
    options = options or OptOptions()
    x0 = np.asarray(x0, dtype=float)
    obj = _as_objective(obj, x0)
    n = obj.n
    if n < 1 or x0.shape != (n,):
        raise ValueError(f"x0 must be a vector of dimension {n}")
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    f = obj.evaluate
    n_evals = 0

    def ev(x):
        nonlocal n_evals
        n_evals += 1
        return float(f(x))

    fx = ev(x0)
    if not math.isfinite(fx):
        raise ValueError(f"objective is not finite at x0 (f(x0)={fx})")
    max_iters = options.iters_for(n)
    if max_iters <= 0:
        return OptResult(x0.copy(), fx, 0, False, "powell", n_evals, [fx])

    line_tol = max(1e-11, options.x_tol * 1e-2)
    directions = np.eye(n)
    x = x0.copy()
    history = [fx]
    converged = False
    iterations = 0
    while iterations < max_iters:
        iterations += 1
        x_prev, f_prev = x.copy(), fx
        biggest_drop = 0.0
        i_big = 0
        for i in range(n):
            f_before = fx
            x, fx, _ = _line_minimize(ev, x, fx, directions[i], line_tol)
            if f_before - fx > biggest_drop:
                biggest_drop = f_before - fx
                i_big = i
        history.append(fx)
        if abs(f_prev - fx) < options.f_tol or np.max(np.abs(x - x_prev)) < options.x_tol:
            converged = True
            break
        # Direction replacement (Powell 1964 / NR criterion).
        x_ext = 2.0 * x - x_prev
        f_ext = ev(x_ext)
        if f_ext < f_prev:
            d2 = f_prev - fx - biggest_drop
            t = 2.0 * (f_prev - 2.0 * fx + f_ext) * d2 * d2 \
                - biggest_drop * (f_prev - f_ext) ** 2
            if t < 0.0:
                new_dir = x - x_prev
                x, fx, alpha = _line_minimize(ev, x, fx, new_dir, line_tol)
                if alpha != 0.0:
                    directions[i_big] = directions[n - 1]
                    directions[n - 1] = new_dir

    return OptResult(x.copy(), fx, iterations, converged, "powell", n_evals, history)


def minimize(obj, x0: Sequence[float], options: OptOptions | None = None) -> OptResult:
    """Default fitting pipeline: Nelder-Mead, then Powell from its result;
    the better of the two wins."""
    options = options or OptOptions()
    nm = nelder_mead(obj, x0, options)
    pw = powell(obj, nm.x_best, options)
    if pw.f_best < nm.f_best:
        out = OptResult(pw.x_best, pw.f_best, nm.iterations + pw.iterations,
                        pw.converged, "nelder-mead+powell",
                        nm.n_evals + pw.n_evals, nm.f_history + pw.f_history)
    else:
        out = OptResult(nm.x_best, nm.f_best, nm.iterations + pw.iterations,
                        nm.converged, "nelder-mead+powell",
                        nm.n_evals + pw.n_evals, nm.f_history)
    return out


class Box:
    """Axis-aligned box mapped to unconstrained space by a logistic squash.

    External x in (lo, hi) corresponds to internal z = logit((x-lo)/(hi-lo)).
    Values at or beyond the edges are pulled a hair inside before inverting.
    """

    def __init__(self, lo: Sequence[float], hi: Sequence[float]):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or self.lo.ndim != 1:
            raise ValueError("lo and hi must be 1-D vectors of equal length")
        if not np.all(self.hi > self.lo):
            raise ValueError("box requires hi > lo elementwise")

    @property
    def n(self) -> int:
        return self.lo.size

    def to_internal(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        frac = (x - self.lo) / (self.hi - self.lo)
        frac = np.clip(frac, 1e-9, 1.0 - 1e-9)
        return np.log(frac / (1.0 - frac))

    def to_external(self, z: Sequence[float]) -> np.ndarray:
        z = np.clip(np.asarray(z, dtype=float), -500.0, 500.0)
        frac = 1.0 / (1.0 + np.exp(-z))
        return self.lo + (self.hi - self.lo) * frac

    def clip(self, x: Sequence[float]) -> np.ndarray:
        return np.clip(np.asarray(x, dtype=float), self.lo, self.hi)


def minimize_bounded(fn: Callable[[np.ndarray], float], x0: Sequence[float],
                     box: Box, options: OptOptions | None = None) -> OptResult:
    """Chained Nelder-Mead + Powell inside a box; result reported in
    external coordinates."""
    z0 = box.to_internal(box.clip(x0))

    def f_internal(z):
        return fn(box.to_external(z))

    res = minimize(Objective(f_internal, box.n), z0, options)
    x_best = box.to_external(res.x_best)
    # Re-evaluate so f_best matches the reported external point exactly.
    f_best = float(fn(x_best))
    res.x_best = x_best
    res.f_best = f_best
    return res
