"""Bracketing root finders and curve chaining shared by resonance and bound."""

from __future__ import annotations

import numpy as np


def sign_change_brackets(values):
    """Indices j with values[..., j] and values[..., j+1] of opposite sign (or an exact zero at j)."""
    v = np.asarray(values)
    left, right = v[..., :-1], v[..., 1:]
    finite = np.isfinite(left) & np.isfinite(right)
    return np.nonzero(finite & ((np.sign(left) * np.sign(right) < 0) | (left == 0)))


def bisect(func, lo, hi, max_iter=200):
    """Vectorized bisection of ``func`` on brackets [lo, hi] until adjacent doubles.

    ``func`` must accept an array aligned with ``lo`` and return residuals of
    the same shape; any per-bracket parameters live in the closure.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    if lo.size == 0:
        return lo
    flo = func(lo)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        active = (mid != lo) & (mid != hi)
        if not np.any(active):
            break
        fmid = func(mid)
        go_right = np.sign(fmid) == np.sign(flo)
        lo = np.where(active & go_right, mid, lo)
        flo = np.where(active & go_right, fmid, flo)
        hi = np.where(active & ~go_right, mid, hi)
    # an exact zero at lo is the root itself
    return np.where(flo == 0, lo, 0.5 * (lo + hi))


def roots_on_grid(func, grid, refine=0):
    """All sign-change roots of a scalar-parameter function sampled on ``grid``.

    ``refine`` > 1 subdivides the first and last cell that many times, for
    roots hugging the interval ends.
    """
    grid = np.asarray(grid, dtype=float)
    if refine > 1 and grid.size >= 2:
        head = np.linspace(grid[0], grid[1], refine + 1)[1:-1]
        tail = np.linspace(grid[-2], grid[-1], refine + 1)[1:-1]
        grid = np.unique(np.concatenate([grid, head, tail]))
    vals = func(grid)
    (idx,) = sign_change_brackets(vals)
    return bisect(func, grid[idx], grid[idx + 1])


class _Track(list):
    """A curve under construction: (x, y) pairs plus a seed slope for its first step."""

    seed_slope = 0.0


def chain(columns, xs, tol_fn, refine_fn=None, slope_fn=None, max_halvings=4):
    """Link per-column roots into curves by nearest-neighbour continuation.

    ``columns[i]`` is a sorted array of roots at abscissa ``xs[i]``. A curve
    extends to the root nearest its linear prediction when that pairing is
    mutual, lies within ``tol_fn(dx, slope)`` and is closer than half the
    distance to any other root (so two curves never swap). When no root
    qualifies and ``refine_fn(x, lo, hi)`` is given, the step is halved and
    the gap re-solved locally before the curve is closed. ``slope_fn(x, y)``
    supplies the starting slope of a fresh one-point curve (default 0).

    Returns a list of curves, each a list of (x, y) pairs ordered in x.
    """
    finished = []
    active = []
    prev_x = None
    for x, roots in zip(xs, columns):
        roots = np.asarray(roots, dtype=float)
        used = np.zeros(roots.size, dtype=bool)
        survivors = []
        if prev_x is not None and active:
            dx = x - prev_x
            preds = np.array([_predict(c, x) for c in active])
            tols = np.array([tol_fn(dx, _slope(c)) for c in active])
            pick = _mutual_nearest(preds, roots, tols)
            for c, curve in enumerate(active):
                j = pick[c]
                if j < 0 and refine_fn is not None:
                    j = _bridge(curve, x, roots, used, np.delete(preds, c), tol_fn, refine_fn, max_halvings)
                if j < 0 or used[j]:
                    finished.append(curve)
                    continue
                used[j] = True
                curve.append((x, float(roots[j])))
                survivors.append(curve)
        for j in np.nonzero(~used)[0]:
            seed = _Track([(x, float(roots[j]))])
            if slope_fn is not None:
                seed.seed_slope = float(slope_fn(x, roots[j]))
            survivors.append(seed)
        active = survivors
        prev_x = x
    finished.extend(active)
    finished.sort(key=lambda c: (c[0][0], c[0][1]))
    return [list(c) for c in finished]


def _slope(curve):
    if len(curve) < 2:
        return getattr(curve, "seed_slope", 0.0)
    (x0, y0), (x1, y1) = curve[-2], curve[-1]
    return (y1 - y0) / (x1 - x0) if x1 != x0 else 0.0


def _predict(curve, x):
    return curve[-1][1] + _slope(curve) * (x - curve[-1][0])


def _spacing(values):
    """Distance from each sorted value to its nearest neighbour (inf when alone)."""
    gap = np.full(values.size, np.inf)
    if values.size > 1:
        d = np.diff(values)
        gap[:-1] = d
        gap[1:] = np.minimum(gap[1:], d)
    return gap


def _mutual_nearest(preds, roots, tols):
    """Index into ``roots`` for each prediction, or -1 when the match is not safe."""
    pick = np.full(preds.size, -1)
    if roots.size == 0 or preds.size == 0:
        return pick
    dist = np.abs(preds[:, None] - roots[None, :])
    best_root = np.argmin(dist, axis=1)
    best_pred = np.argmin(dist, axis=0)
    room = 0.5 * _spacing(roots)
    for c, j in enumerate(best_root):
        dd = dist[c, j]
        if best_pred[j] == c and dd <= tols[c] and dd < room[j]:
            pick[c] = j
    return pick


def _bridge(curve, x_target, roots, used, rivals, tol_fn, refine_fn, max_halvings):
    """Step-halving: walk from the curve end toward ``x_target`` in smaller steps.

    Intermediate points are only kept when the final link to ``x_target`` is
    also unambiguous, i.e. no other curve's prediction (``rivals``) is closer.
    """
    x0, y0 = curve[-1]
    slope = _slope(curve)
    step = (x_target - x0) / 2.0
    room = 0.5 * _spacing(roots)
    for _ in range(max_halvings):
        walk = [(x0, y0)]
        ok = True
        s = slope
        xc = x0
        while xc + step < x_target - 1e-12 * abs(step):
            tol = tol_fn(step, s)
            pred = walk[-1][1] + s * step
            local = np.asarray(refine_fn(xc + step, pred - tol, pred + tol), dtype=float)
            if local.size != 1:
                ok = False
                break
            y_new = float(local[0])
            s = (y_new - walk[-1][1]) / step
            xc += step
            walk.append((xc, y_new))
        if ok:
            pred_t = walk[-1][1] + s * (x_target - xc)
            tol = tol_fn(x_target - xc, s)
            free = np.nonzero(~used)[0]
            if free.size:
                d = np.abs(roots[free] - pred_t)
                k = int(np.argmin(d))
                j = int(free[k])
                clash = rivals.size and np.min(np.abs(rivals - roots[j])) < d[k]
                if d[k] <= tol and d[k] < room[j] and not clash:
                    curve.extend(walk[1:])
                    return j
        step /= 2.0
    return -1
