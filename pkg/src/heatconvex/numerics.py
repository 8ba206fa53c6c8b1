"""Shared numerical helpers: finite differences, monotone inversion, fits, quadrature."""
from __future__ import annotations

import numpy as np

__all__ = [
    "DomainError",
    "fd_step",
    "second_derivative_5pt",
    "invert_monotone",
    "quadratic_leading_fit",
    "affine_fit",
    "simpson_weights",
    "piecewise_simpson_weights",
    "discrete_convexity_defect",
]


class DomainError(ValueError):
    """Argument left the mathematical domain of an operation."""


def fd_step(z):
    """Central-difference step, relative with an absolute floor."""
    return np.maximum(1e-5, 1e-5 * np.abs(z))


def second_derivative_5pt(f, z, h=None):
    """Second derivative by a 5-point central stencil.

    Returns (value, noise) where noise estimates roundoff + truncation of the
    stencil; convexity checks downstream use a multiple of it as tolerance.
    """
    z = np.asarray(z, dtype=float)
    if h is None:
        h = fd_step(z)
    fm2, fm1, f0, fp1, fp2 = (f(z - 2 * h), f(z - h), f(z), f(z + h), f(z + 2 * h))
    val = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * h * h)
    scale = np.max(np.abs([fm2, fm1, f0, fp1, fp2]), axis=0)
    # roundoff amplification eps*|f|/h^2; the h^4 truncation term is folded in
    # crudely via the same scale
    noise = 64 * np.finfo(float).eps * (1.0 + scale) / (h * h) + np.abs(val) * h * h
    return val, noise


def invert_monotone(f, target, lo, hi, deriv=None, newton_steps=4):
    """Solve f(z) = target for strictly increasing f by bracketing bisection.

    Bisects to width 1e-12*(1+|z|), then polishes with up to `newton_steps`
    Newton iterations when `deriv` is given.  Vectorized over `target`.
    """
    t = np.asarray(target, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    a = np.full(t.shape, float(lo))
    b = np.full(t.shape, float(hi))
    fa = np.asarray(f(a), dtype=float)
    fb = np.asarray(f(b), dtype=float)
    if np.any(fa > t) or np.any(fb < t):
        bad = (fa > t) | (fb < t)
        raise DomainError(f"target not bracketed by [{lo}, {hi}] for {t[bad][:3]}")
    # bisection; iteration count set by the bracket width and tolerance
    width = float(hi) - float(lo)
    n_iter = int(np.ceil(np.log2(max(2.0, width / 1e-12)))) + 2
    for _ in range(n_iter):
        m = 0.5 * (a + b)
        fm = np.asarray(f(m), dtype=float)
        take_left = fm >= t
        b = np.where(take_left, m, b)
        a = np.where(take_left, a, m)
        if np.all(b - a <= 1e-12 * (1.0 + np.abs(a))):
            break
    z = 0.5 * (a + b)
    if deriv is not None:
        for _ in range(newton_steps):
            dz = (np.asarray(f(z), dtype=float) - t) / np.asarray(deriv(z), dtype=float)
            dz = np.where(np.isfinite(dz), dz, 0.0)
            z = np.clip(z - dz, a, b)
    return float(z[0]) if scalar else z


def quadratic_leading_fit(z, y):
    """Leading coefficient c of the least-squares fit y ~ c z^2 + b z + d."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    A = np.column_stack([z * z, z, np.ones_like(z)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(coef[0])


def affine_fit(x, y):
    """Least-squares y ~ A x + B; returns (A, B, max_abs_residual)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    A_mat = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A_mat, y, rcond=None)
    resid = y - A_mat @ coef
    return float(coef[0]), float(coef[1]), float(np.max(np.abs(resid)))


def simpson_weights(n_nodes, h):
    """Composite Simpson weights on n_nodes uniform nodes (spacing h).

    For an even interval count the classic 1,4,2,...,4,1 pattern; an odd count
    is handled by a 3/8 rule on the last three intervals (same order).
    """
    n = int(n_nodes)
    if n < 2:
        raise ValueError("need at least 2 nodes")
    w = np.zeros(n)
    if n == 2:  # trapezoid fallback, only hit for degenerate slivers
        w[:] = 0.5 * h
        return w
    intervals = n - 1
    if intervals % 2 == 0:
        w[0] = w[-1] = 1.0
        w[1:-1:2] = 4.0
        w[2:-2:2] = 2.0
        w *= h / 3.0
        return w
    if n == 4:
        return np.array([3.0, 9.0, 9.0, 3.0]) * (h / 8.0)
    head = simpson_weights(n - 3, h)
    w[: n - 3] += head
    w[n - 4 :] += np.array([3.0, 9.0, 9.0, 3.0]) * (h / 8.0)
    return w


def piecewise_simpson_weights(nodes, piece_edges):
    """Simpson weights on uniform `nodes`, split at indices in `piece_edges`.

    piece_edges: sorted node indices (including 0 and n-1) delimiting smooth
    pieces; each piece is integrated by its own composite rule so kinks and
    jumps sitting on an edge node cost no accuracy.
    """
    nodes = np.asarray(nodes)
    h = nodes[1] - nodes[0]
    w = np.zeros(nodes.shape)
    for a, b in zip(piece_edges[:-1], piece_edges[1:]):
        if b > a:
            w[a : b + 1] += simpson_weights(b - a + 1, h)
    return w


def discrete_convexity_defect(y, spacing, value_noise):
    """Most negative scaled second difference of sampled y, with tolerance.

    Returns (defect, tol, argmin_index): defect is min over interior nodes of
    (y[i-1]-2y[i]+y[i+1])/spacing^2; tol is 100x the stencil noise implied by
    `value_noise` (per-sample absolute uncertainty).  y is convex on the grid
    within noise iff defect >= -tol.
    """
    y = np.asarray(y, dtype=float)
    if y.size < 3:
        return 0.0, np.inf, 0
    d2 = (y[:-2] - 2 * y[1:-1] + y[2:]) / (spacing * spacing)
    i = int(np.argmin(d2))
    noise = np.asarray(value_noise, dtype=float)
    if noise.ndim == 0:
        stencil_noise = 4.0 * float(noise) / (spacing * spacing)
    else:
        stencil_noise = 4.0 * float(np.max(noise)) / (spacing * spacing)
    tol = 100.0 * max(stencil_noise, np.finfo(float).eps)
    return float(d2[i]), tol, i + 1
