"""Admissible convexity transforms and their heat-flow classification.

A transform F is a strictly increasing map of function values; a nonnegative
function f is F-convex when F o f is convex.  Whether the heat semigroup
preserves F-convexity is decided by properties of the inverse transform
f_F = F^{-1} on the image interval J_F: a bounded image makes the class
trivial, super-Gaussian growth of f_F kills all nontrivial evolving data, and
otherwise preservation is equivalent to positivity of F' together with
convexity of the curvature profile g = (log f_F')'.  This module builds the
standard families, estimates those conditions numerically, and assembles the
verdict.

Extended-real conventions: endpoint values map to -inf/+inf (e.g. log 0 =
-inf, and a transform that blows up at a finite right endpoint evaluates to
+inf there).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import log_ndtr

from .heatflow import hot_h, hot_h_deriv, hot_H
from .numerics import (
    DomainError,
    affine_fit,
    discrete_convexity_defect,
    fd_step,
    invert_monotone,
    quadratic_leading_fit,
    simpson_weights,
)

__all__ = [
    "FTransform",
    "GSpec",
    "AdmissibilityReport",
    "GaussianIntegrability",
    "CurvatureCriterion",
    "ClassReport",
    "make_power_alpha",
    "make_affine",
    "make_exp",
    "make_hot",
    "make_neglog",
    "make_from_g",
    "make_custom",
    "scale_shift",
    "abs_kink_generator",
    "builtin_transforms",
    "g_of",
    "check_admissible",
    "check_gaussian_integrability",
    "check_curvature_criterion",
    "classify",
    "compare_strength",
]

_EPS = np.finfo(float).eps


def _as_float_array(x):
    return np.asarray(x, dtype=float)


def _scalar_like(out, template):
    out = np.asarray(out)
    if np.ndim(template) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class FTransform:
    """Immutable admissible transform with inverse and curvature access.

    domain_kind: 'half_line_nonneg' (values r >= 0), 'whole_line', or
    'bounded_above' (values in [lower_a, upper_ell] with F(upper_ell) = inf).
    (j_lo, j_hi) bound the open image interval J of the domain interior;
    inverse/log_inverse/g are defined there.  All callables are vectorized.
    """

    kind_tag: str
    domain_kind: str
    lower_a: float
    upper_ell: float
    j_lo: float
    j_hi: float
    label: str
    params: dict = field(default_factory=dict)
    _eval: object = None
    _inverse: object = None
    _deriv: object = None
    _inverse_deriv: object = None
    _log_inverse: object = None
    _g_closed: object = None

    # -- evaluation ---------------------------------------------------------

    def __call__(self, r):
        arr = _as_float_array(r)
        lo, hi = self.lower_a, self.upper_ell
        tol = 1e-12 * (1.0 + np.abs(arr))
        if np.any(arr < lo - tol) or np.any(arr > hi + tol):
            raise DomainError(
                f"{self.label}: value outside domain [{lo}, {hi}]")
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = self._eval(np.clip(arr, lo, hi))
        return _scalar_like(out, r)

    def inverse(self, z):
        arr = self._check_j(z, slack=0.0)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            out = self._inverse(arr)
        return _scalar_like(out, z)

    def deriv(self, r):
        arr = _as_float_array(r)
        if self._deriv is not None:
            with np.errstate(divide="ignore", over="ignore"):
                return _scalar_like(self._deriv(arr), r)
        h = fd_step(arr)
        return _scalar_like((self(arr + h) - self(arr - h)) / (2 * h), r)

    def inverse_deriv(self, z):
        arr = self._check_j(z, slack=0.0)
        if self._inverse_deriv is not None:
            with np.errstate(divide="ignore", over="ignore"):
                return _scalar_like(self._inverse_deriv(arr), z)
        h = fd_step(arr)
        return _scalar_like(
            (self.inverse(arr + h) - self.inverse(arr - h)) / (2 * h), z)

    def log_inverse(self, z):
        """log |f_F(z)|, stable where f_F itself would overflow."""
        arr = self._check_j(z, slack=0.0)
        if self._log_inverse is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                return _scalar_like(self._log_inverse(arr), z)
        with np.errstate(divide="ignore", over="ignore"):
            return _scalar_like(np.log(np.abs(self._inverse(arr))), z)

    def g(self, z):
        """Curvature profile (log f_F')' at z in J."""
        return self.g_with_noise(z)[0]

    def g_with_noise(self, z):
        """g values plus a per-point absolute noise estimate.

        Closed forms carry roundoff-level noise.  Transforms without a closed
        form differentiate log f_F' centrally; the noise estimate compares
        steps h and 2h, which picks up the O(h) error near slope kinks.
        """
        arr = self._check_j(z, slack=2 * fd_step(_as_float_array(z)))
        scalar = np.ndim(z) == 0
        arr = np.atleast_1d(arr)
        if self._g_closed is not None:
            vals = np.asarray(self._g_closed(arr), dtype=float)
            noise = 4 * _EPS * (1.0 + np.abs(vals))
        else:
            vals, noise = self._g_fd(arr)
        if scalar:
            return float(vals[0]), float(noise[0])
        return vals, noise

    def _log_fprime(self, z):
        exact = getattr(self, "_log_fprime_exact", None)
        if exact is not None:
            return exact(z)
        if self._inverse_deriv is not None:
            with np.errstate(divide="ignore"):
                return np.log(self._inverse_deriv(z))
        h = fd_step(z)
        return np.log((self._inverse(z + h) - self._inverse(z - h)) / (2 * h))

    def _g_fd(self, z):
        h = fd_step(z)
        d1 = (self._log_fprime(z + h) - self._log_fprime(z - h)) / (2 * h)
        d2 = (self._log_fprime(z + 2 * h) - self._log_fprime(z - 2 * h)) / (4 * h)
        scale = np.abs(self._log_fprime(z)) + 1.0
        noise = np.abs(d1 - d2) / 3.0 + 4 * _EPS * scale / h
        return d1, noise

    def _check_j(self, z, slack):
        arr = _as_float_array(z)
        if np.any(arr <= self.j_lo + slack) or np.any(arr >= self.j_hi - slack):
            raise DomainError(
                f"{self.label}: argument outside the image interval "
                f"({self.j_lo}, {self.j_hi})")
        return arr

    def round_trip_error(self, z):
        """|F(f_F(z)) - z| at points of J (identity check)."""
        arr = np.atleast_1d(self._check_j(z, slack=0.0))
        r = self._inverse(arr)
        back = np.asarray(self(r), dtype=float)
        return _scalar_like(np.abs(back - arr), z)


@dataclass(frozen=True)
class GSpec:
    """Piecewise-linear convex curvature generator.

    points: ((z, g(z)), ...) sorted by z; the graph is linear between points
    and extends with left_slope/right_slope beyond the first/last point.
    Slopes must be non-decreasing left to right (convexity).
    """

    points: tuple
    left_slope: float
    right_slope: float

    def __post_init__(self):
        zs = [p[0] for p in self.points]
        if not zs or sorted(zs) != zs or len(set(zs)) != len(zs):
            raise DomainError("GSpec needs distinct sorted breakpoints")
        slopes = self.slopes()
        if any(s2 < s1 - 1e-12 for s1, s2 in zip(slopes, slopes[1:])):
            raise DomainError("GSpec slopes must be non-decreasing (convexity)")

    def slopes(self):
        zs = [p[0] for p in self.points]
        gs = [p[1] for p in self.points]
        mids = [(g2 - g1) / (z2 - z1)
                for (z1, g1), (z2, g2) in zip(self.points, self.points[1:])]
        return [self.left_slope] + mids + [self.right_slope]

    def __call__(self, z):
        z_arr = _as_float_array(z)
        zs = np.array([p[0] for p in self.points])
        gs = np.array([p[1] for p in self.points])
        out = np.interp(z_arr, zs, gs)
        out = np.where(z_arr < zs[0], gs[0] + self.left_slope * (z_arr - zs[0]), out)
        out = np.where(z_arr > zs[-1], gs[-1] + self.right_slope * (z_arr - zs[-1]), out)
        return _scalar_like(out, z)

    def antiderivative_from(self, base_z):
        """Closed-form G with G(base_z) = 0, G' = g (piecewise quadratic)."""
        zs = [p[0] for p in self.points]
        knots = sorted(set(zs + [float(base_z)]))

        def seg_integral(z1, z2):
            # exact integral of the piecewise-linear g over [z1, z2]
            return 0.5 * (self(z1) + self(z2)) * (z2 - z1) if z2 >= z1 else \
                -seg_integral(z2, z1)

        def integral(a, b):
            if b < a:
                return -integral(b, a)
            cuts = [a] + [z for z in zs if a < z < b] + [b]
            return sum(seg_integral(c1, c2) for c1, c2 in zip(cuts, cuts[1:]))

        cum = {k: integral(base_z, k) for k in knots}
        knots_arr = np.array(knots)
        cum_arr = np.array([cum[k] for k in knots])
        g_at = np.array([self(k) for k in knots])
        slopes_right = np.array(
            [ (self(k2) - self(k1)) / (k2 - k1) for k1, k2 in zip(knots, knots[1:]) ]
            + [self.right_slope])
        left_slope = self.left_slope

        def G(z):
            z_arr = _as_float_array(z)
            idx = np.clip(np.searchsorted(knots_arr, z_arr, side="right") - 1,
                          -1, len(knots) - 1)
            below = idx < 0
            idx_c = np.where(below, 0, idx)
            dz = z_arr - knots_arr[idx_c]
            slope = np.where(below, left_slope, slopes_right[idx_c])
            out = cum_arr[idx_c] + g_at[idx_c] * dz + 0.5 * slope * dz * dz
            return _scalar_like(out, z)

        return G


def abs_kink_generator(center=1.0, drop=1.0):
    """The tent generator g(z) = |z - center| - drop (a single convex kink)."""
    return GSpec(points=((float(center), -float(drop)),),
                 left_slope=-1.0, right_slope=1.0)


# -- constructors ------------------------------------------------------------


def make_power_alpha(alpha):
    """Power-family transform: (r^alpha - 1)/alpha on [0, inf); log r at 0."""
    alpha = float(alpha)
    if not math.isfinite(alpha):
        raise DomainError("alpha must be finite")
    if alpha == 0.0:
        return FTransform(
            kind_tag="log", domain_kind="half_line_nonneg",
            lower_a=0.0, upper_ell=np.inf, j_lo=-np.inf, j_hi=np.inf,
            label="power[0]", params={"alpha": 0.0},
            _eval=lambda r: np.log(r),
            _inverse=np.exp,
            _deriv=lambda r: 1.0 / r,
            _inverse_deriv=np.exp,
            _log_inverse=lambda z: _as_float_array(z) + 0.0,
            _g_closed=lambda z: np.ones_like(_as_float_array(z)),
        )
    j_lo = -1.0 / alpha if alpha > 0 else -np.inf
    j_hi = np.inf if alpha > 0 else -1.0 / alpha

    def ev(r):
        r = _as_float_array(r)
        with np.errstate(divide="ignore"):
            out = (np.power(r, alpha) - 1.0) / alpha
        if alpha < 0:
            out = np.where(r == 0.0, -np.inf, out)
        return out

    def inv(z):
        z = _as_float_array(z)
        return np.power(np.maximum(alpha * z + 1.0, 0.0), 1.0 / alpha)

    return FTransform(
        kind_tag="power_alpha", domain_kind="half_line_nonneg",
        lower_a=0.0, upper_ell=np.inf, j_lo=j_lo, j_hi=j_hi,
        label=f"power[{alpha:g}]", params={"alpha": alpha},
        _eval=ev,
        _inverse=inv,
        _deriv=lambda r: np.power(r, alpha - 1.0),
        _inverse_deriv=lambda z: np.power(alpha * _as_float_array(z) + 1.0,
                                          1.0 / alpha - 1.0),
        _log_inverse=lambda z: np.log(alpha * _as_float_array(z) + 1.0) / alpha,
        _g_closed=lambda z: (1.0 - alpha) / (alpha * _as_float_array(z) + 1.0),
    )


def make_affine(A, B, domain_kind="whole_line"):
    """Affine transform A*r + B (A > 0)."""
    A, B = float(A), float(B)
    if A <= 0:
        raise DomainError("affine transform needs positive slope")
    if domain_kind == "whole_line":
        lower, j_lo = -np.inf, -np.inf
    elif domain_kind == "half_line_nonneg":
        lower, j_lo = 0.0, B
    else:
        raise DomainError("affine transform: unsupported domain kind")
    return FTransform(
        kind_tag="affine", domain_kind=domain_kind,
        lower_a=lower, upper_ell=np.inf, j_lo=j_lo, j_hi=np.inf,
        label=f"affine[{A:g},{B:g}]", params={"A": A, "B": B},
        _eval=lambda r: A * _as_float_array(r) + B,
        _inverse=lambda z: (_as_float_array(z) - B) / A,
        _deriv=lambda r: np.full_like(_as_float_array(r), A),
        _inverse_deriv=lambda z: np.full_like(_as_float_array(z), 1.0 / A),
        _log_inverse=lambda z: np.log(np.abs(_as_float_array(z) - B)) - np.log(A),
        _g_closed=lambda z: np.zeros_like(_as_float_array(z)),
    )


def make_exp():
    """Whole-line transform F(r) = e^r (inverse log; the standard non-affine probe)."""
    return FTransform(
        kind_tag="custom", domain_kind="whole_line",
        lower_a=-np.inf, upper_ell=np.inf, j_lo=0.0, j_hi=np.inf,
        label="exp", params={},
        _eval=lambda r: np.exp(_as_float_array(r)),
        _inverse=lambda z: np.log(_as_float_array(z)),
        _deriv=lambda r: np.exp(_as_float_array(r)),
        _inverse_deriv=lambda z: 1.0 / _as_float_array(z),
        _log_inverse=lambda z: np.log(np.abs(np.log(_as_float_array(z)))),
        _g_closed=lambda z: -1.0 / _as_float_array(z),
    )


def make_hot(a):
    """Heat-step transform H_a(r) = H(r/a) on [0, a] (log r when a = inf).

    H is the inverse of the unit-time heat evolution of the unit step; its
    image is all of R, with H_a(0) = -inf and H_a(a) = +inf.
    """
    if not a > 0:
        raise DomainError("make_hot needs a > 0")
    if np.isinf(a):
        return make_power_alpha(0.0)
    a = float(a)

    def ev(r):
        r = _as_float_array(r)
        ratio = r / a
        out = np.full_like(ratio, np.nan)
        interior = (ratio > 0.0) & (ratio < 1.0)
        if np.any(interior):
            out[interior] = hot_H(ratio[interior])
        out = np.where(ratio <= 0.0, -np.inf, out)
        out = np.where(ratio >= 1.0, np.inf, out)
        return out

    def deriv(r):
        r = _as_float_array(r)
        return 1.0 / (a * hot_h_deriv(ev(r)))

    return FTransform(
        kind_tag="hot", domain_kind="bounded_above",
        lower_a=0.0, upper_ell=a, j_lo=-np.inf, j_hi=np.inf,
        label=f"hot[{a:g}]", params={"a": a},
        _eval=ev,
        _inverse=lambda z: a * hot_h(_as_float_array(z)),
        _deriv=deriv,
        _inverse_deriv=lambda z: a * hot_h_deriv(_as_float_array(z)),
        _log_inverse=lambda z: np.log(a) + log_ndtr(_as_float_array(z) / np.sqrt(2.0)),
        _g_closed=lambda z: -0.5 * _as_float_array(z),
    )


def make_neglog(a, ell):
    """Transform -log(ell - r) on [a, ell], +inf at ell (inverse ell - e^{-z})."""
    ell = float(ell)
    if not a < ell:
        raise DomainError("make_neglog needs a < ell")
    j_lo = -np.inf if np.isneginf(a) else -np.log(ell - a)

    def ev(r):
        r = _as_float_array(r)
        with np.errstate(divide="ignore"):
            return -np.log(ell - r)

    return FTransform(
        kind_tag="neglog", domain_kind="bounded_above",
        lower_a=float(a), upper_ell=ell, j_lo=j_lo, j_hi=np.inf,
        label=f"neglog[{a:g},{ell:g}]", params={"a": float(a), "ell": ell},
        _eval=ev,
        _inverse=lambda z: ell - np.exp(-_as_float_array(z)),
        _deriv=lambda r: 1.0 / (ell - _as_float_array(r)),
        _inverse_deriv=lambda z: np.exp(-_as_float_array(z)),
        _log_inverse=lambda z: np.log(np.abs(
            ell - np.exp(-_as_float_array(z)))),
        _g_closed=lambda z: -np.ones_like(_as_float_array(z)),
    )


def make_custom(eval_fn, inverse_fn, domain_kind, lower_a, upper_ell,
                j_lo, j_hi, label="custom", deriv_fn=None,
                inverse_deriv_fn=None, log_inverse_fn=None):
    """Wrap user callables as a transform; derivatives fall back to differences."""
    return FTransform(
        kind_tag="custom", domain_kind=domain_kind,
        lower_a=float(lower_a), upper_ell=float(upper_ell),
        j_lo=float(j_lo), j_hi=float(j_hi), label=label, params={},
        _eval=eval_fn, _inverse=inverse_fn, _deriv=deriv_fn,
        _inverse_deriv=inverse_deriv_fn, _log_inverse=log_inverse_fn,
    )


def scale_shift(F, A, B):
    """The transform A*F + B (A > 0), which defines the same convexity class."""
    A, B = float(A), float(B)
    if A <= 0:
        raise DomainError("scale_shift needs A > 0")

    def shift(z):
        return (_as_float_array(z) - B) / A

    g_closed = None
    if F._g_closed is not None:
        g_closed = lambda z: F._g_closed(shift(z)) / A
    log_inv = None
    if F._log_inverse is not None:
        log_inv = lambda z: F._log_inverse(shift(z))
    inv_deriv = None
    if F._inverse_deriv is not None:
        inv_deriv = lambda z: F._inverse_deriv(shift(z)) / A
    return FTransform(
        kind_tag="custom", domain_kind=F.domain_kind,
        lower_a=F.lower_a, upper_ell=F.upper_ell,
        j_lo=A * F.j_lo + B if np.isfinite(F.j_lo) else F.j_lo,
        j_hi=A * F.j_hi + B if np.isfinite(F.j_hi) else F.j_hi,
        label=f"{A:g}*{F.label}+{B:g}",
        params={"A": A, "B": B, "base": F.label},
        _eval=lambda r: A * np.asarray(F(r), dtype=float) + B,
        _inverse=lambda z: F._inverse(shift(z)),
        _deriv=(lambda r: A * np.asarray(F.deriv(r), dtype=float)),
        _inverse_deriv=inv_deriv,
        _log_inverse=log_inv,
        _g_closed=g_closed,
    )


def make_from_g(g, base_z, base_value, base_slope, *, table_tol=1e-10,
                z_table_hi=80.0, left_reach=400.0):
    """Reconstruct a transform whose curvature profile equals a given g.

    Builds f(z) = base_value + base_slope * int_{base_z}^{z} exp(G(s)) ds with
    G the closed-form antiderivative of the piecewise-linear convex g, then
    returns F = f^{-1}.  The inner integral is exact per piece; the outer one
    is tabulated in log space on a node set that doubles until cumulative
    values are stable to table_tol (relative), so the construction survives
    f growing past the floating-point range.  The domain's left end is the
    zero crossing of f (values below it would be negative).
    """
    if base_slope <= 0:
        raise DomainError("base_slope must be positive")
    if base_value < 0:
        raise DomainError("base_value must be nonnegative")
    base_z = float(base_z)
    G = g.antiderivative_from(base_z)

    def mass(a_z, b_z, n=33):
        # int_a^b exp(G), small windows only (overflow means "plenty")
        nodes = np.linspace(a_z, b_z, n)
        w = simpson_weights(n, nodes[1] - nodes[0])
        with np.errstate(over="ignore"):
            return float(np.sum(w * np.exp(G(nodes))))

    # locate the left end: f(z) = base_value - base_slope * int_z^{base_z} exp(G)
    # hits zero at j_lo; leftward mass may instead converge short of the target
    if base_value == 0.0:
        j_lo, t_lo, f_t_lo = base_z, base_z, 0.0
    else:
        target = base_value / base_slope
        j_lo = -np.inf
        got = 0.0
        z_edge = base_z
        while z_edge > base_z - left_reach:
            z_next = z_edge - 1.0
            inc = mass(z_next, z_edge)
            if got + inc >= target:
                lo_z, hi_z = z_next, z_edge
                for _ in range(80):
                    mid = 0.5 * (lo_z + hi_z)
                    if got + mass(mid, z_edge) >= target:
                        lo_z = mid
                    else:
                        hi_z = mid
                j_lo = 0.5 * (lo_z + hi_z)
                break
            got += inc
            z_edge = z_next
            if inc < 1e-17 * (got + target):
                break
        if np.isfinite(j_lo):
            t_lo, f_t_lo = j_lo, 0.0
        else:
            # f never vanishes: the table starts where the march stopped and
            # the attainable values start at f(t_lo) > 0
            t_lo = z_edge
            f_t_lo = max(base_value - base_slope * got, 0.0)

    # cumulative log integral table on [t_lo, z_table_hi], refined by doubling
    knots = sorted({t_lo, z_table_hi, base_z}
                   | {p[0] for p in g.points if t_lo < p[0] < z_table_hi})

    def build(n_per_unit):
        zs = [np.array([t_lo])]
        for k1, k2 in zip(knots, knots[1:]):
            m = max(2, int(np.ceil((k2 - k1) * n_per_unit)))
            m += m % 2  # even panel count per section keeps Simpson clean
            zs.append(np.linspace(k1, k2, m + 1)[1:])
        z_nodes = np.concatenate(zs)
        # per-gap 5-node Simpson of exp(G), all in log space
        a, b = z_nodes[:-1], z_nodes[1:]
        sub = a + (b - a) * np.linspace(0.0, 1.0, 5)[:, None]
        w = np.array([1.0, 4.0, 2.0, 4.0, 1.0])[:, None] * ((b - a) / 12.0)
        vals = G(sub) + np.log(w)
        peak = np.max(vals, axis=0)
        piece = peak + np.log(np.sum(np.exp(vals - peak), axis=0))
        log_cum = np.concatenate([[-np.inf], np.logaddexp.accumulate(piece)])
        return z_nodes, log_cum

    knots_arr = np.array(knots)
    n_per_unit = 4
    z_nodes, log_cum = build(n_per_unit)
    for _ in range(8):
        n_per_unit *= 2
        z2, c2 = build(n_per_unit)
        # section boundaries are shared by every build, so compare there
        i_old = np.searchsorted(z_nodes, knots_arr[1:])
        i_new = np.searchsorted(z2, knots_arr[1:])
        diff = np.max(np.abs(c2[i_new] - log_cum[i_old]))
        z_nodes, log_cum = z2, c2
        if diff <= table_tol:
            break

    log_slope = math.log(base_slope)
    # direct-value table capped well below the float range: the spline's
    # slope arithmetic overflows otherwise, and values that large are only
    # ever touched through the log table anyway
    with np.errstate(over="ignore"):
        f_nodes = f_t_lo + np.exp(log_slope + log_cum)
    finite = f_nodes <= 1e100
    f_direct_z = z_nodes[finite]
    f_direct_v = f_nodes[finite]

    from scipy.interpolate import PchipInterpolator

    f_interp = PchipInterpolator(f_direct_z, f_direct_v, extrapolate=False)
    # log f table skips the left node, where the cumulative integral is empty
    logf_z = z_nodes[1:]
    tail = log_slope + log_cum[1:]
    logf_v = tail if f_t_lo == 0.0 else np.logaddexp(math.log(f_t_lo), tail)
    logf_interp = PchipInterpolator(logf_z, logf_v, extrapolate=False)
    z_direct_hi = float(f_direct_z[-1])
    f_cap = float(f_direct_v[-1])

    def inv(z):
        z_arr = _as_float_array(z)
        out = np.empty_like(z_arr, dtype=float)
        low = z_arr <= f_direct_z[0]
        direct = (~low) & (z_arr <= z_direct_hi)
        high = z_arr > z_direct_hi
        out[low] = f_direct_v[0]
        out[direct] = f_interp(z_arr[direct])
        if np.any(high):
            with np.errstate(over="ignore"):
                out[high] = np.exp(logf_interp(np.minimum(z_arr[high],
                                                          logf_z[-1])))
        return out

    def log_inv(z):
        z_arr = np.clip(_as_float_array(z), logf_z[0], logf_z[-1])
        return logf_interp(z_arr)

    def inv_deriv(z):
        z_arr = _as_float_array(z)
        with np.errstate(over="ignore"):
            return np.exp(log_slope + G(z_arr))

    def ev(r):
        r_arr = _as_float_array(r)
        if np.any(r_arr > f_cap):
            raise DomainError(
                f"constructed transform tabulated only up to f = {f_cap:.3g}")
        out = np.full_like(r_arr, t_lo)
        pos = r_arr > f_direct_v[0]
        if np.any(pos):
            out[pos] = invert_monotone(
                f_interp, r_arr[pos], f_direct_z[0], z_direct_hi,
                deriv=inv_deriv)
        return out

    def log_fprime(z):
        return log_slope + G(_as_float_array(z))

    F = FTransform(
        kind_tag="g_constructed", domain_kind="half_line_nonneg",
        lower_a=f_t_lo, upper_ell=np.inf, j_lo=float(j_lo), j_hi=np.inf,
        label="from_g", params={
            "points": g.points, "left_slope": g.left_slope,
            "right_slope": g.right_slope, "base_z": base_z,
            "base_value": base_value, "base_slope": base_slope,
        },
        _eval=ev,
        _inverse=inv,
        _deriv=None,
        _inverse_deriv=inv_deriv,
        _log_inverse=log_inv,
        _g_closed=None,
    )
    # exact log-slope profile: g comes back by finite differences, so the
    # construction is cross-checked rather than echoed
    object.__setattr__(F, "_log_fprime_exact", log_fprime)
    return F


def _logsumexp(a):
    m = np.max(a)
    if not np.isfinite(m):
        return m
    return m + np.log(np.sum(np.exp(a - m)))


def builtin_transforms():
    """The named transforms exercised by the verification suites."""
    out = {}
    for alpha in (-1.0, 0.0, 0.25, 0.5, 1.0, 1.5, 2.0):
        key = f"power_{alpha:g}"
        out[key] = make_power_alpha(alpha)
    out["hot_1"] = make_hot(1.0)
    out["neglog_0_1"] = make_neglog(0.0, 1.0)
    out["affine_3_2"] = make_affine(3.0, 2.0)
    out["exp"] = make_exp()
    out["from_g_kink"] = make_from_g(abs_kink_generator(), 0.0, 0.0, 1.0)
    return out


# -- admissibility -----------------------------------------------------------


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    first_violation: object = None     # (r, reason) or None
    bounded_image: bool = False        # finite sup of F: the class is trivial
    notes: str = ""

    def __bool__(self):
        return self.admissible


def _domain_samples(F, n):
    lo, hi = F.lower_a, F.upper_ell
    if F.domain_kind == "whole_line":
        return np.linspace(-30.0, 30.0, n)
    if F.domain_kind == "bounded_above":
        left = lo if np.isfinite(F(lo)) else lo + (hi - lo) * 1e-9
        return np.linspace(left, hi - (hi - lo) * 1e-9, n)
    # half line: mix a linear head with a geometric tail
    head = np.linspace(1e-8, 2.0, n // 2)
    tail = np.geomspace(2.0, 1e6, n - n // 2 + 1)[1:]
    return np.concatenate([head, tail])


def check_admissible(F, n_samples=201):
    """Sampled admissibility: strict increase, continuity, endpoint limits."""
    if n_samples < 3:
        raise DomainError("need at least 3 samples")
    r = _domain_samples(F, n_samples)
    v = np.asarray(F(r), dtype=float)
    dv = np.diff(v)
    bad = np.where(~(dv > 0))[0]
    if bad.size:
        i = int(bad[0])
        return AdmissibilityReport(False, (float(r[i + 1]), "not strictly increasing"))

    # continuity: a jump shows as a gap that refinement cannot split
    scale = np.nanmax(np.abs(v[np.isfinite(v)])) + 1.0
    for i in range(1, len(dv) - 1):
        neighbors = dv[i - 1] + dv[i + 1]
        if np.isfinite(dv[i]) and dv[i] > 10 * neighbors + 1e-7 * scale:
            sub = np.linspace(r[i], r[i + 1], 17)
            sv = np.asarray(F(sub), dtype=float)
            if np.max(np.diff(sv)) > 0.8 * dv[i]:
                return AdmissibilityReport(
                    False, (float(r[i]), "discontinuity (jump under refinement)"))

    bounded = np.isfinite(F.j_hi)
    notes = "image bounded above: convexity class is trivial" if bounded else ""
    return AdmissibilityReport(True, None, bounded, notes)


# -- Gaussian integrability of the inverse transform -------------------------


@dataclass(frozen=True)
class GaussianIntegrability:
    """Evidence about int e^{-A z^2} |f_F(z)| dz over the image interval.

    status: 'finite' / 'divergent' / 'inconclusive' for the A that was probed.
    a_star: estimated least Gaussian order making the integral finite
    (0 when every positive order works, inf when none does, nan when the
    window fits disagree).
    """

    status: str
    a_star: float
    a_probed: float
    log_increments: tuple
    fit_coeffs: tuple
    fit_windows: tuple
    endpoint_status: str = "none"
    notes: str = ""


def _log_window_integral(F, lo, hi, A, n=513):
    z = np.linspace(lo, hi, n)
    w = simpson_weights(n, z[1] - z[0])
    with np.errstate(divide="ignore"):
        vals = np.asarray(F.log_inverse(z), dtype=float) - A * z * z + np.log(w)
    vals = vals[np.isfinite(vals) | (vals == -np.inf)]
    return _logsumexp(vals[np.isfinite(vals)]) if np.any(np.isfinite(vals)) else -np.inf


def _tail_fit_a_star(F, direction, j_cap):
    """Quadratic growth order of log |f_F| on two disjoint windows."""
    w1, w2 = (8.0, 16.0), (32.0, 64.0)
    if np.isfinite(j_cap):
        return np.nan, (np.nan, np.nan), (w1, w2)  # no infinite tail to fit
    coeffs = []
    for lo, hi in (w1, w2):
        z = direction * np.linspace(lo, hi, 129)
        y = np.asarray(F.log_inverse(z), dtype=float)
        keep = np.isfinite(y)
        coeffs.append(quadratic_leading_fit(z[keep], y[keep]))
    c1, c2 = coeffs
    small = 0.02
    if max(abs(c1), abs(c2)) < small:
        return 0.0, (c1, c2), (w1, w2)
    if abs(c1 - c2) <= 0.2 * max(abs(c1), abs(c2)) and c1 > 0 and c2 > 0:
        return 0.5 * (c1 + c2), (c1, c2), (w1, w2)
    if c1 > small and c2 >= 1.25 * c1:
        return np.inf, (c1, c2), (w1, w2)
    return np.nan, (c1, c2), (w1, w2)


def _endpoint_integrable(F, endpoint, side):
    """Evidence that |f_F| is integrable approaching a finite J endpoint.

    side +1 means approach from the right (endpoint is the lower end).
    Window integrals over geometrically shrinking bands must decay.
    """
    ratios = []
    prev = None
    for k in range(2, 22):
        d_hi = 2.0 ** (-k)
        d_lo = d_hi / 2.0
        lo = endpoint + side * d_lo
        hi = endpoint + side * d_hi
        if side < 0:
            lo, hi = hi, lo
        val = _log_window_integral(F, lo, hi, 0.0, n=65)
        if prev is not None and np.isfinite(prev) and np.isfinite(val):
            ratios.append(np.exp(val - prev))
        prev = val
    if len(ratios) < 4:
        return "integrable"  # integrand vanished below floor: no mass there
    q = float(np.mean(ratios[-5:]))
    if q <= 0.9:
        return "integrable"
    if q >= 1.0:
        return "divergent"
    return "inconclusive"


def check_gaussian_integrability(F, A=1.0, z_max_schedule=(8.0, 16.0, 32.0, 64.0)):
    """Probe whether e^{-A z^2} |f_F| has finite integral over the image.

    Integrates over a doubling window schedule and inspects tail increments:
    geometric decay counts as finite, growth as divergent, anything else is
    inconclusive.  Independently fits the quadratic growth order of
    log |f_F| on two disjoint windows; the fits must agree within 20% to
    report a_star (the least sufficient Gaussian order).
    """
    if A <= 0:
        raise DomainError("A must be positive")
    if F.domain_kind == "bounded_above":
        raise DomainError("integrability probe applies to unbounded-value domains")
    if np.isfinite(F.j_hi):
        raise DomainError("vacuous: transform image is bounded above")

    if F.domain_kind == "half_line_nonneg":
        z0 = float(F(1.0))
        schedule = [s for s in z_max_schedule if s > z0]
        logs = []
        prev = z0
        for s in schedule:
            logs.append(_log_window_integral(F, prev, s, A))
            prev = s
        a_star, coeffs, wins = _tail_fit_a_star(F, +1.0, F.j_hi)
        endpoint = "none"
    else:
        # whole line: both tails plus any finite endpoint of the image
        logs = []
        endpoint = "none"
        a_candidates = []
        for direction, j_end in ((+1.0, F.j_hi), (-1.0, F.j_lo)):
            if np.isfinite(j_end):
                endpoint = _endpoint_integrable(
                    F, j_end, -direction)
                continue
            prev = 0.0 if F.j_lo < 0.0 < F.j_hi else (
                F.j_lo + 1.0 if direction > 0 else F.j_hi - 1.0)
            for s in z_max_schedule:
                zz = direction * s
                lo, hi = (prev, zz) if direction > 0 else (zz, prev)
                logs.append(_log_window_integral(F, lo, hi, A))
                prev = zz
            a_dir, coeffs, wins = _tail_fit_a_star(F, direction, j_end)
            a_candidates.append(a_dir)
        a_star = max(a_candidates) if a_candidates else 0.0
        if endpoint == "divergent":
            a_star = np.inf
        elif endpoint == "inconclusive":
            a_star = np.nan
        if not a_candidates:
            coeffs, wins = (np.nan, np.nan), ((8.0, 16.0), (32.0, 64.0))

    finite_logs = [v for v in logs if np.isfinite(v)]
    if len(finite_logs) < 2:
        status = "finite"  # increments below the floating-point floor
    else:
        deltas = np.diff(finite_logs[-3:]) if len(finite_logs) >= 3 \
            else np.diff(finite_logs)
        if np.all(deltas <= -np.log(4.0)):
            status = "finite"
        elif np.all(deltas >= np.log(2.0)):
            status = "divergent"
        else:
            status = "inconclusive"
    if endpoint == "divergent":
        status = "divergent"

    return GaussianIntegrability(
        status=status, a_star=float(a_star) if not np.isnan(a_star) else np.nan,
        a_probed=float(A),
        log_increments=tuple(float(v) for v in logs),
        fit_coeffs=tuple(float(c) for c in np.atleast_1d(coeffs)),
        fit_windows=wins, endpoint_status=endpoint)


# -- curvature criterion ------------------------------------------------------


@dataclass(frozen=True)
class CurvatureCriterion:
    deriv_positive: bool
    curvature_convex: bool
    worst_z: float
    defect: float
    tol: float

    def __iter__(self):  # unpacks like the (bool, bool) pair it reports
        yield self.deriv_positive
        yield self.curvature_convex


def default_j_window(F, span=16.0, margin=0.1):
    """A compact working window inside the image interval J."""
    lo = F.j_lo + margin if np.isfinite(F.j_lo) else -span / 2.0
    hi = lo + span
    if np.isfinite(F.j_hi):
        hi = F.j_hi - margin
        if not np.isfinite(F.j_lo):
            lo = hi - span
    if not hi > lo:
        raise DomainError("image interval too narrow for the default window")
    return lo, hi


def check_curvature_criterion(F, z_grid=None):
    """Sampled preservation criterion: F' > 0 and g convex on the image.

    Returns flags (deriv_positive, curvature_convex); convexity uses divided
    second differences of g against a tolerance of 100x the propagated noise
    of the g evaluation, and reports the most violating grid point.
    """
    if z_grid is None:
        lo, hi = default_j_window(F)
        z_grid = np.linspace(lo, hi, 257)
    z_grid = _as_float_array(z_grid)
    if z_grid.size < 5:
        raise DomainError("need at least 5 grid points")
    if z_grid[0] <= F.j_lo or z_grid[-1] >= F.j_hi:
        raise DomainError("grid exits the image interval")

    fprime = np.asarray(F.inverse_deriv(z_grid), dtype=float)
    deriv_positive = bool(np.all(fprime > 0))

    g_vals, g_noise = F.g_with_noise(z_grid)
    h = float(z_grid[1] - z_grid[0])
    defect, tol, idx = discrete_convexity_defect(g_vals, h, np.max(g_noise))
    return CurvatureCriterion(
        deriv_positive=deriv_positive,
        curvature_convex=bool(defect >= -tol),
        worst_z=float(z_grid[idx]),
        defect=float(defect),
        tol=float(tol),
    )


# -- classification -----------------------------------------------------------


@dataclass(frozen=True)
class ClassReport:
    """Preservation classification of one transform under the heat flow."""

    label: str
    admissible: bool
    limit_at_sup: float
    gaussian_divergent: bool
    gaussian_order: float          # least sufficient Gaussian weight order
    deriv_positive: object         # bool, or None when not evaluated
    curvature_convex: object
    verdict: str
    basis: str
    notes: str = ""

    FIELDS = ("label", "admissible", "limit_at_sup", "gaussian_divergent",
              "gaussian_order", "deriv_positive", "curvature_convex",
              "verdict", "basis")

    def to_record(self):
        parts = []
        for name in self.FIELDS:
            val = getattr(self, name)
            parts.append(f"{name}={_fmt_field(val)}")
        return "\n".join(parts)

    def to_csv_row(self):
        return ",".join(_csv_cell(_fmt_field(getattr(self, name)))
                        for name in self.FIELDS)

    @classmethod
    def csv_header(cls):
        return ",".join(cls.FIELDS)


def _fmt_field(val):
    if val is None:
        return ""
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, float):
        return f"{val:.17g}"
    return str(val)


def _csv_cell(text):
    if any(c in text for c in ',"\n'):
        return '"' + text.replace('"', '""') + '"'
    return text


def classify(F, *, z_grid=None, a_probe=1.0):
    """Route a transform through the preservation rules for its domain kind.

    Half-line values: a bounded image is only trivially preserved; otherwise
    super-Gaussian growth of the inverse rules out nontrivial evolving data;
    otherwise preservation is equivalent to the curvature criterion.  Whole
    line: same gates, then (under integrability of the inverse) preserved
    exactly for affine transforms.  Bounded-above values (Dirichlet setting):
    preserved iff the transform blows up at the right endpoint and the
    curvature criterion holds on the image of the interior.
    """
    adm = check_admissible(F)
    if not adm.admissible:
        return ClassReport(
            label=F.label, admissible=False, limit_at_sup=np.nan,
            gaussian_divergent=False, gaussian_order=np.nan,
            deriv_positive=None, curvature_convex=None,
            verdict="inconclusive", basis="not admissible",
            notes=str(adm.first_violation))

    limit_at_sup = F.j_hi

    if F.domain_kind in ("half_line_nonneg", "whole_line"):
        where = "half line" if F.domain_kind == "half_line_nonneg" else "whole line"
        if np.isfinite(limit_at_sup):
            return ClassReport(
                label=F.label, admissible=True, limit_at_sup=limit_at_sup,
                gaussian_divergent=False, gaussian_order=np.nan,
                deriv_positive=None, curvature_convex=None,
                verdict="only_trivially_preserved",
                basis=f"bounded-image rule ({where}): evolving data in the "
                      "class are constant in shape",
            )
        integ = check_gaussian_integrability(F, A=a_probe)
        a_star = integ.a_star
        if np.isinf(a_star):
            return ClassReport(
                label=F.label, admissible=True, limit_at_sup=limit_at_sup,
                gaussian_divergent=True, gaussian_order=np.inf,
                deriv_positive=None, curvature_convex=None,
                verdict="only_trivially_preserved",
                basis=f"gaussian-divergence rule ({where}): inverse grows too "
                      "fast for any nontrivial datum to evolve",
            )
        if np.isnan(a_star):
            return ClassReport(
                label=F.label, admissible=True, limit_at_sup=limit_at_sup,
                gaussian_divergent=False, gaussian_order=np.nan,
                deriv_positive=None, curvature_convex=None,
                verdict="inconclusive",
                basis="integrability probe inconclusive",
                notes=f"window fits {integ.fit_coeffs}")

        if F.domain_kind == "whole_line":
            r = np.linspace(-8.0, 8.0, 161)
            v = np.asarray(F(r), dtype=float)
            A_fit, B_fit, resid = affine_fit(r, v)
            scale = np.max(np.abs(v)) + 1.0
            crit = check_curvature_criterion(F, z_grid=z_grid)
            if A_fit > 0 and resid <= 1e-8 * scale:
                return ClassReport(
                    label=F.label, admissible=True, limit_at_sup=limit_at_sup,
                    gaussian_divergent=False, gaussian_order=a_star,
                    deriv_positive=crit.deriv_positive,
                    curvature_convex=crit.curvature_convex,
                    verdict="preserved",
                    basis="affine rule (whole line): transform is affine, the "
                          "class is plain convexity",
                    notes=f"affine fit A={A_fit:.6g} B={B_fit:.6g}")
            return ClassReport(
                label=F.label, admissible=True, limit_at_sup=limit_at_sup,
                gaussian_divergent=False, gaussian_order=a_star,
                deriv_positive=crit.deriv_positive,
                curvature_convex=crit.curvature_convex,
                verdict="not_preserved",
                basis="affine-only rule (whole line): under integrability of "
                      "the inverse, only affine transforms preserve",
                notes=f"affine fit residual {resid:.3g}")

        crit = check_curvature_criterion(F, z_grid=z_grid)
        if crit.deriv_positive and crit.curvature_convex:
            return ClassReport(
                label=F.label, admissible=True, limit_at_sup=limit_at_sup,
                gaussian_divergent=False, gaussian_order=a_star,
                deriv_positive=True, curvature_convex=True,
                verdict="preserved",
                basis="curvature rule (half line): positive slope and convex "
                      "curvature profile of the inverse",
            )
        return ClassReport(
            label=F.label, admissible=True, limit_at_sup=limit_at_sup,
            gaussian_divergent=False, gaussian_order=a_star,
            deriv_positive=crit.deriv_positive,
            curvature_convex=crit.curvature_convex,
            verdict="not_preserved",
            basis="curvature rule (half line): criterion fails",
            notes=f"worst z={crit.worst_z:.6g} defect={crit.defect:.3g}")

    if F.domain_kind == "bounded_above":
        if np.isfinite(limit_at_sup):
            return ClassReport(
                label=F.label, admissible=True, limit_at_sup=limit_at_sup,
                gaussian_divergent=False, gaussian_order=np.nan,
                deriv_positive=None, curvature_convex=None,
                verdict="only_trivially_preserved",
                basis="bounded-image rule (bounded values): transform must "
                      "blow up at the right endpoint",
            )
        crit = check_curvature_criterion(F, z_grid=z_grid)
        if crit.deriv_positive and crit.curvature_convex:
            return ClassReport(
                label=F.label, admissible=True, limit_at_sup=limit_at_sup,
                gaussian_divergent=False, gaussian_order=np.nan,
                deriv_positive=True, curvature_convex=True,
                verdict="preserved",
                basis="curvature rule (bounded values, constant-boundary "
                      "flow): blow-up at the endpoint plus convex curvature",
            )
        return ClassReport(
            label=F.label, admissible=True, limit_at_sup=limit_at_sup,
            gaussian_divergent=False, gaussian_order=np.nan,
            deriv_positive=crit.deriv_positive,
            curvature_convex=crit.curvature_convex,
            verdict="not_preserved",
            basis="curvature rule (bounded values): criterion fails",
            notes=f"worst z={crit.worst_z:.6g} defect={crit.defect:.3g}")

    raise DomainError(f"unknown domain kind {F.domain_kind!r}")


# -- strength comparison ------------------------------------------------------


@dataclass(frozen=True)
class StrengthComparison:
    relation: str                 # F1_weaker / F1_stronger / equivalent / neither
    comp12_convex: bool           # F1 o f_{F2} convex (class of F2 inside F1's)
    comp21_convex: bool
    affine: tuple                 # (A, B, residual) of the fit F1 ~ A*F2 + B
    worst_z: float


def _composition_convex(F_outer, F_inner, z_grid):
    """Sampled convexity of F_outer o f_{F_inner} with per-point tolerance.

    Composition values can span hundreds of orders of magnitude across the
    window, so each second difference is judged against the roundoff scale
    of its own three samples rather than a global bound.
    """
    vals = np.asarray(F_inner.inverse(z_grid), dtype=float)
    lo, hi = F_outer.lower_a, F_outer.upper_ell
    tol = 1e-9 * (1.0 + np.abs(vals))
    if np.any(vals < lo - tol) or np.any(vals > hi + tol):
        raise DomainError(
            f"{F_inner.label} maps the grid outside the domain of {F_outer.label}")
    y = np.asarray(F_outer(np.clip(vals, lo, hi)), dtype=float)
    idx = np.flatnonzero(np.isfinite(y))
    if idx.size < 5:
        raise DomainError("composition leaves too few finite samples")
    runs = np.split(idx, np.where(np.diff(idx) > 1)[0] + 1)
    run = max(runs, key=len)
    if run.size < 5:
        raise DomainError("composition leaves too few finite samples")
    z = z_grid[run]
    y = y[run]
    d2 = y[2:] - 2.0 * y[1:-1] + y[:-2]
    local = np.abs(y[2:]) + 2.0 * np.abs(y[1:-1]) + np.abs(y[:-2]) + 1.0
    rel = d2 / (1e-9 * local)
    i = int(np.argmin(rel))
    return bool(rel[i] >= -1.0), float(z[1 + i]), float(d2[i])


def compare_strength(F1, F2, z_grid=None):
    """Order two transforms by containment of their convexity classes.

    F1_weaker means every F2-convex function is F1-convex (F1 o f_{F2} is
    convex); F1_stronger is the reverse; equivalent when F1 is an affine
    positive rescaling of F2; neither when both composition tests fail.
    """
    if z_grid is None:
        lo, hi = default_j_window(F2)
        z_grid = np.linspace(lo, hi, 257)
    z_grid = _as_float_array(z_grid)

    try:
        c12, worst12, _ = _composition_convex(F1, F2, z_grid)
    except DomainError:
        c12, worst12 = False, np.nan
    try:
        lo1, hi1 = default_j_window(F1)
        z_grid1 = np.linspace(lo1, hi1, z_grid.size)
        c21, worst21, _ = _composition_convex(F2, F1, z_grid1)
    except DomainError:
        c21, worst21 = False, np.nan

    r_vals = np.asarray(F2.inverse(z_grid), dtype=float)
    r_vals = r_vals[np.isfinite(r_vals)]
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        v1 = np.asarray(F1(np.clip(r_vals, F1.lower_a, F1.upper_ell)), dtype=float)
        v2 = np.asarray(F2(r_vals), dtype=float)
    keep = np.isfinite(v1) & np.isfinite(v2)
    A_fit, B_fit, resid = affine_fit(v2[keep], v1[keep])
    scale = np.max(np.abs(v1[keep])) + 1.0
    affine_ok = A_fit > 0 and resid <= 1e-7 * scale

    if affine_ok or (c12 and c21):
        relation = "equivalent"
    elif c12:
        relation = "F1_weaker"
    elif c21:
        relation = "F1_stronger"
    else:
        relation = "neither"
    return StrengthComparison(
        relation=relation, comp12_convex=c12, comp21_convex=c21,
        affine=(float(A_fit), float(B_fit), float(resid)),
        worst_z=float(worst12))


def g_of(F, z):
    """Curvature profile of a transform at z (module-level convenience)."""
    return F.g(z)
