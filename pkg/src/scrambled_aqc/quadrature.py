"""Vectorized adaptive Simpson quadrature.

All panels at one refinement level are evaluated with a single call of the
integrand, so ``f`` must accept and return 1-d arrays.  Besides the integral
the result keeps every accepted node and the running integral there, which
is what schedule construction needs to invert ``t(s)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import QuadratureFailure


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    nodes: np.ndarray
    fvals: np.ndarray
    cumulative: np.ndarray
    increments: np.ndarray  # integral over [nodes[i], nodes[i+1]]
    n_evals: int

    def node_index(self, x) -> np.ndarray:
        """Index of the node nearest to each ``x`` (breakpoints a few ulps
        from a neighbour are merged, so exact matches are not guaranteed)."""
        x = np.asarray(x, dtype=float)
        k = np.clip(np.searchsorted(self.nodes, x), 1, self.nodes.size - 1)
        left_closer = (x - self.nodes[k - 1]) <= (self.nodes[k] - x)
        return np.where(left_closer, k - 1, k)

    def reverse_cumulative(self) -> np.ndarray:
        """Integral from each node to the right end, summed from the right."""
        return np.concatenate([np.cumsum(self.increments[::-1])[::-1], [0.0]])


def _evaluate(f, x):
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape).astype(float)
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)]
        raise QuadratureFailure(f"integrand is not finite at x={bad[:5]}")
    return y


def _simpson(a, m, b, fa, fm, fb):
    # three-point rule on the actual nodes; a rounded midpoint would otherwise
    # bias tiny panels near large abscissae
    h1 = m - a
    h2 = b - m
    h = h1 + h2
    return h / 6.0 * ((2.0 - h2 / h1) * fa + h * h / (h1 * h2) * fm + (2.0 - h1 / h2) * fb)


def adaptive_simpson(
    f,
    breakpoints,
    atol: float = 1e-10,
    rtol: float = 0.0,
    local_rtol: float = 0.0,
    max_panels: int = 200_000,
    max_depth: int = 60,
    min_width: float = 0.0,
) -> QuadratureResult:
    """Integrate ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    The error budget ``max(atol, rtol*|I|)`` is shared among panels in
    proportion to their width; a panel is accepted when the two-halves
    Simpson estimate agrees with the whole-panel one to 15x its share, or
    to ``local_rtol`` relative to the panel's own integral.  The local
    criterion is what keeps running integrals accurate where they are tiny.
    Accepted panels get the Richardson correction.

    Panels narrower than ``min_width`` are accepted as they are.  This is for
    integrands whose evaluation noise exceeds the tolerance on a small set
    (near an endpoint singularity, say); their total weight is bounded by
    the width of that set.
    """
    x = np.unique(np.asarray(breakpoints, dtype=float))
    if x.size < 2:
        raise QuadratureFailure("need at least two distinct breakpoints")
    # breakpoints a few ulps apart would give unsplittable panels; drop them
    close = np.diff(x) <= 64.0 * np.spacing(np.maximum(np.abs(x[:-1]), np.abs(x[1:])))
    if np.any(close):
        drop = np.concatenate([[False], close])
        drop[-1] = False
        if close[-1]:
            drop[-2] = x.size > 2
        x = x[~drop]
        if x.size < 2:
            raise QuadratureFailure("need at least two distinct breakpoints")
    lo_end, hi_end = x[0], x[-1]
    span = hi_end - lo_end

    a, b = x[:-1], x[1:]
    m = 0.5 * (a + b)
    fx = _evaluate(f, np.concatenate([x, m]))
    fa, fb, fm = fx[: x.size - 1], fx[1 : x.size], fx[x.size :]
    whole = _simpson(a, m, b, fa, fm, fb)
    depth = np.zeros(a.size, dtype=int)
    n_evals = fx.size

    done_a, done_m, done_b = [], [], []
    done_fa, done_fm, done_fb = [], [], []
    done_left, done_right = [], []
    accepted_sum = 0.0

    while a.size:
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        if np.any((lm <= a) | (lm >= m) | (rm <= m) | (rm >= b)):
            raise QuadratureFailure("panel width fell below floating-point spacing")
        fl = _evaluate(f, np.concatenate([lm, rm]))
        n_evals += fl.size
        flm, frm = fl[: a.size], fl[a.size :]
        left = _simpson(a, lm, m, fa, flm, fm)
        right = _simpson(m, rm, b, fm, frm, fb)
        err = left + right - whole

        estimate = accepted_sum + np.sum(left + right)
        budget = max(atol, rtol * abs(estimate))
        share = budget * (b - a) / span
        ok = (
            (np.abs(err) <= 15.0 * share)
            | (np.abs(err) <= local_rtol * np.abs(left + right))
            | (b - a <= min_width)
        )

        if np.any(~ok & (depth >= max_depth)):
            raise QuadratureFailure(f"subdivision depth limit {max_depth} reached")

        if np.any(ok):
            corr = err[ok] / 15.0
            done_a.append(a[ok])
            done_m.append(m[ok])
            done_b.append(b[ok])
            done_fa.append(fa[ok])
            done_fm.append(fm[ok])
            done_fb.append(fb[ok])
            done_left.append(left[ok] + 0.5 * corr)
            done_right.append(right[ok] + 0.5 * corr)
            accepted_sum += float(np.sum(left[ok] + right[ok] + corr))

        keep = ~ok
        if not np.any(keep):
            break
        a_k, m_k, b_k = a[keep], m[keep], b[keep]
        a = np.concatenate([a_k, m_k])
        b = np.concatenate([m_k, b_k])
        m = np.concatenate([lm[keep], rm[keep]])
        fa = np.concatenate([fa[keep], fm[keep]])
        fb = np.concatenate([fm[keep], fb[keep]])
        fm = np.concatenate([flm[keep], frm[keep]])
        whole = np.concatenate([left[keep], right[keep]])
        depth = np.concatenate([depth[keep] + 1, depth[keep] + 1])
        if sum(len(c) for c in done_a) + a.size > max_panels:
            raise QuadratureFailure(f"more than {max_panels} panels required")

    pa = np.concatenate(done_a)
    order = np.argsort(pa)
    pa = pa[order]
    pm = np.concatenate(done_m)[order]
    pb = np.concatenate(done_b)[order]
    fpa = np.concatenate(done_fa)[order]
    fpm = np.concatenate(done_fm)[order]
    fpb = np.concatenate(done_fb)[order]
    left = np.concatenate(done_left)[order]
    right = np.concatenate(done_right)[order]

    cum_b = np.cumsum(left + right)
    cum_a = np.concatenate([[0.0], cum_b[:-1]])
    nodes = np.empty(2 * pa.size + 1)
    nodes[0:-1:2] = pa
    nodes[1::2] = pm
    nodes[-1] = pb[-1]
    fvals = np.empty_like(nodes)
    fvals[0:-1:2] = fpa
    fvals[1::2] = fpm
    fvals[-1] = fpb[-1]
    cumulative = np.empty_like(nodes)
    cumulative[0:-1:2] = cum_a
    cumulative[1::2] = cum_a + left
    cumulative[-1] = cum_b[-1]
    increments = np.empty(nodes.size - 1)
    increments[0::2] = left
    increments[1::2] = right
    return QuadratureResult(float(cum_b[-1]), nodes, fvals, cumulative, increments, n_evals)


def integrate(
    f, a: float, b: float, atol: float = 1e-10, rtol: float = 0.0, points=(), local_rtol: float = 0.0
) -> float:
    """Integral of a vectorized ``f`` over ``[a, b]``; ``points`` are extra breakpoints."""
    if b == a:
        return 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    pts = [a, b] + [p for p in points if a < p < b]
    return sign * adaptive_simpson(f, pts, atol=atol, rtol=rtol, local_rtol=local_rtol).value
