"""Heat-semigroup evolution on free space and on domains with Dirichlet data.

Data are represented on uniform grids with a certified Gaussian growth bound
|phi(x)| <= a * exp(A |x|^2); the bound controls both the existence window
(4 A t < 1) and the truncation radius of the convolution quadrature.  All
evolutions refine their quadrature until a two-grid Richardson comparison
meets the requested tolerance, and record the achieved error estimate on the
result so downstream certification can build honest noise floors.
"""
from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import erf

from .numerics import DomainError, invert_monotone, piecewise_simpson_weights

__all__ = [
    "ExistenceWindowError",
    "EvaluationWindowError",
    "GridFunction",
    "DomainSpec",
    "InitialDatum",
    "grid_nodes",
    "gauss_kernel",
    "fit_growth_envelope",
    "maximal_time_hint",
    "heat_evolve_free",
    "heat_evolve_dirichlet",
    "hot_h",
    "hot_h_deriv",
    "hot_H",
    "epsilon_quadratic_lift",
    "lifted_evolution_identity",
]

EXISTENCE_MARGIN = 0.05


class ExistenceWindowError(ValueError):
    """Requested time is outside the guaranteed existence window 4*A*t < 1."""


class EvaluationWindowError(ValueError):
    """Grid-backed data do not cover the integration window."""


def grid_nodes(lo, hi, h):
    """Uniform nodes on [lo, hi] with spacing adjusted to fit exactly."""
    if not hi > lo:
        raise ValueError("empty grid extent")
    n = max(1, round((hi - lo) / h))
    return np.linspace(lo, hi, n + 1)


@dataclass
class GridFunction:
    """Sampled function on a uniform 1D or 2D grid with growth metadata.

    values: shape (n,) for dim 1 or (n1, n2) for dim 2, C-order with axis 0
    the first coordinate.  extent: ((lo, hi),) per axis.  The growth fields
    certify |phi| <= growth_a * exp(growth_A |x|^2) at every sampled node.
    value_error is the recorded max relative uncertainty |du|/(1+|u|) of the
    values (quadrature + truncation for evolved data, 0 for exact data).
    """

    values: np.ndarray
    extent: tuple
    growth_a: float = 1.0
    growth_A: float = 0.0
    value_error: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.extent = tuple((float(lo), float(hi)) for lo, hi in self.extent)
        if self.values.ndim != len(self.extent):
            raise ValueError("extent/values dimension mismatch")
        if self.values.ndim not in (1, 2):
            raise ValueError("only dim 1 or 2 supported")

    @property
    def dim(self):
        return self.values.ndim

    @property
    def spacing(self):
        return tuple(
            (hi - lo) / (n - 1)
            for (lo, hi), n in zip(self.extent, self.values.shape)
        )

    def axes(self):
        return tuple(
            np.linspace(lo, hi, n)
            for (lo, hi), n in zip(self.extent, self.values.shape)
        )

    def growth_certified(self):
        """Check the declared growth bound at all sampled nodes."""
        bound = self.growth_a * np.exp(self.growth_A * self._radius_sq())
        return bool(np.all(np.abs(self.values) <= bound * (1 + 1e-12) + 1e-300))

    def _radius_sq(self):
        ax = self.axes()
        if self.dim == 1:
            return ax[0] ** 2
        return ax[0][:, None] ** 2 + ax[1][None, :] ** 2

    def interpolator(self):
        """Monotone-cubic interpolant (per axis for dim 2)."""
        ax = self.axes()
        if self.dim == 1:
            return PchipInterpolator(ax[0], self.values, extrapolate=False)
        raise ValueError("use interp_to_lattice for dim 2")

    def interp_to_lattice(self, ax0, ax1=None):
        """Values on a new lattice via successive monotone-cubic passes."""
        if self.dim == 1:
            return PchipInterpolator(self.axes()[0], self.values, extrapolate=False)(ax0)
        a0, a1 = self.axes()
        part = PchipInterpolator(a0, self.values, axis=0, extrapolate=False)(ax0)
        return PchipInterpolator(a1, part, axis=1, extrapolate=False)(ax1)

    # -- serialization ------------------------------------------------------

    def to_csv(self):
        """CSV rows coordinate(s), value; metadata in comment headers."""
        out = io.StringIO()
        out.write(f"# dim={self.dim}\n")
        for (lo, hi), n in zip(self.extent, self.values.shape):
            out.write(f"# axis lo={lo!r} hi={hi!r} n={n}\n")
        out.write(
            f"# growth_a={self.growth_a!r} growth_A={self.growth_A!r}"
            f" value_error={self.value_error!r}\n"
        )
        ax = self.axes()
        if self.dim == 1:
            out.write("x,value\n")
            for x, v in zip(ax[0], self.values):
                out.write(f"{x:.17g},{v:.17g}\n")
        else:
            out.write("x,y,value\n")
            for i, x in enumerate(ax[0]):
                for j, y in enumerate(ax[1]):
                    out.write(f"{x:.17g},{y:.17g},{self.values[i, j]:.17g}\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text):
        dim = None
        axes = []
        growth = {"growth_a": 1.0, "growth_A": 0.0, "value_error": 0.0}
        vals = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("x,"):
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("dim="):
                    dim = int(body[4:])
                elif body.startswith("axis"):
                    kv = dict(p.split("=") for p in body.split()[1:])
                    axes.append((float(kv["lo"]), float(kv["hi"]), int(kv["n"])))
                else:
                    # other comment lines (e.g. a caller's t=... stamp) are
                    # ignored except for the known growth keys
                    for part in body.split():
                        k, _, v = part.partition("=")
                        if k in growth:
                            growth[k] = float(v)
                continue
            vals.append(float(line.split(",")[-1]))
        shape = tuple(n for _, _, n in axes)
        values = np.asarray(vals).reshape(shape)
        return cls(
            values=values,
            extent=tuple((lo, hi) for lo, hi, _ in axes),
            **growth,
        )

    _MAGIC = b"HCGF1\n"

    def to_bytes(self):
        """Small binary format: fixed header followed by float64 C-order array."""
        head = bytearray(self._MAGIC)
        head += struct.pack("<B", self.dim)
        for (lo, hi), n in zip(self.extent, self.values.shape):
            head += struct.pack("<Idd", n, lo, hi)
        head += struct.pack("<ddd", self.growth_a, self.growth_A, self.value_error)
        return bytes(head) + np.ascontiguousarray(self.values, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob):
        if not blob.startswith(cls._MAGIC):
            raise ValueError("bad magic")
        off = len(cls._MAGIC)
        (dim,) = struct.unpack_from("<B", blob, off)
        off += 1
        shape, extent = [], []
        for _ in range(dim):
            n, lo, hi = struct.unpack_from("<Idd", blob, off)
            off += struct.calcsize("<Idd")
            shape.append(n)
            extent.append((lo, hi))
        a, A, err = struct.unpack_from("<ddd", blob, off)
        off += struct.calcsize("<ddd")
        values = np.frombuffer(blob, dtype="<f8", offset=off).reshape(shape).copy()
        return cls(values=values, extent=tuple(extent), growth_a=a, growth_A=A,
                   value_error=err)


@dataclass(frozen=True)
class DomainSpec:
    """Spatial domain: free space, half line, interval, or rectangle.

    ell is the boundary value held fixed by the Dirichlet evolution.
    """

    kind: str
    n: int = 1
    bounds: tuple = ()
    ell: float = 0.0

    @classmethod
    def free_space(cls, n=1):
        return cls(kind="free_space", n=n)

    @classmethod
    def half_line(cls, ell=0.0):
        return cls(kind="half_line", n=1, bounds=((0.0, np.inf),), ell=ell)

    @classmethod
    def interval(cls, a, b, ell=0.0):
        if not b > a:
            raise ValueError("need b > a")
        return cls(kind="interval", n=1, bounds=((float(a), float(b)),), ell=ell)

    @classmethod
    def rectangle(cls, bounds, ell=0.0):
        (a1, b1), (a2, b2) = bounds
        if not (b1 > a1 and b2 > a2):
            raise ValueError("degenerate rectangle")
        return cls(kind="rectangle", n=2,
                   bounds=((float(a1), float(b1)), (float(a2), float(b2))),
                   ell=ell)


@dataclass(frozen=True)
class InitialDatum:
    """Callable initial datum with growth certificate and known kink positions.

    breakpoints lists coordinates (along each axis for dim 2) where the datum
    is not smooth; the quadrature splits Simpson pieces there.  For data with
    jump discontinuities the integrand is sampled one-sidedly at piece edges,
    so indicators are integrated at full order.
    """

    fn: object
    growth_a: float = 1.0
    growth_A: float = 0.0
    breakpoints: tuple = ()
    label: str = ""
    value_error: float = 0.0

    def __call__(self, *xs):
        return self.fn(*xs)


def gauss_kernel(x, t, n=1):
    """Heat kernel (4 pi t)^(-n/2) exp(-|x|^2 / (4t)); x is distance."""
    x = np.asarray(x, dtype=float)
    if t <= 0:
        raise ValueError("t must be positive")
    return (4 * np.pi * t) ** (-n / 2) * np.exp(-(x * x) / (4 * t))


def fit_growth_envelope(fn, window, n_samples=801):
    """Certified Gaussian envelope (a, A) for fn on a symmetric 1D window.

    A is the least-squares slope of log|fn| against x^2 over the outer half of
    the window (clamped to >= 0); a is then the smallest constant making the
    bound hold at every sample.  The certificate is exact at the samples and
    assumed to extend beyond the window.
    """
    lo, hi = window
    x = np.linspace(lo, hi, n_samples)
    vals = np.abs(np.asarray(fn(x), dtype=float))
    outer = np.abs(x) >= 0.5 * max(abs(lo), abs(hi))
    pos = outer & (vals > 0)
    if np.count_nonzero(pos) >= 8:
        z2 = x[pos] ** 2
        slope = float(np.sum(z2 * np.log(vals[pos])) / np.sum(z2 * z2))
        A = max(0.0, slope)
    else:
        A = 0.0
    with np.errstate(over="ignore"):
        ratio = vals * np.exp(-A * x * x)
    a = float(np.max(ratio[np.isfinite(ratio)])) * (1 + 1e-9)
    return max(a, 1e-300), A


def maximal_time_hint(growth_A):
    """Sufficient existence window 1/(4A) for growth exponent A (inf for A<=0).

    This quantifies when the convolution integral is guaranteed to converge;
    it is a sufficient bound, not the exact maximal existence time.  The
    evolution routines additionally refuse the last 5% of the window, where
    the integrand's Gaussian decay degenerates.
    """
    if growth_A <= 0:
        return np.inf
    return 1.0 / (4.0 * growth_A)


# -- free-space evolution ----------------------------------------------------


def _resolve_datum(phi):
    """Normalize the datum argument to (eval_fn, a, A, breakpoints, extent, spacing, inherited_error)."""
    if isinstance(phi, GridFunction):
        if phi.dim != 1:
            return (phi, phi.growth_a, phi.growth_A, (), phi.extent, phi.spacing,
                    phi.value_error)
        interp = phi.interpolator()
        return (interp, phi.growth_a, phi.growth_A, (), phi.extent[0],
                phi.spacing[0], phi.value_error)
    if isinstance(phi, InitialDatum):
        return (phi.fn, phi.growth_a, phi.growth_A, tuple(phi.breakpoints),
                None, None, phi.value_error)
    raise TypeError("phi must be a GridFunction or an InitialDatum")


def _truncation_radius(a, A, t, x_max, eps_abs):
    """Radius R with the closed-form Gaussian tail of the convolution <= eps_abs."""
    beta = 1.0 / (4.0 * t) - A
    mu = A * x_max / beta
    pref = (a / np.sqrt(4 * np.pi * t) * np.sqrt(np.pi / beta)
            * np.exp(min(700.0, A * x_max * x_max * (1.0 + A / beta))))
    if pref <= eps_abs:
        u = 0.0
    else:
        u = np.sqrt(np.log(pref / eps_abs))
    R = mu + u / np.sqrt(beta)
    return max(R, 4.0 * np.sqrt(4.0 * t))


_EDGE_NUDGE = 1e-9


def _piece_weighted_values(fn, y, piece_edges, h):
    """Simpson-weighted samples with one-sided evaluation at piece edges."""
    w = piecewise_simpson_weights(y, piece_edges)
    vals = np.asarray(fn(y), dtype=float)
    psi = w * vals
    # interior piece edges: re-sample one-sidedly so jump data integrate cleanly
    nudge = _EDGE_NUDGE * h
    for a_idx, b_idx in zip(piece_edges[:-1], piece_edges[1:]):
        if b_idx <= a_idx:
            continue
        if a_idx == 0 and b_idx == len(y) - 1:
            continue
        wp = np.zeros_like(w)
        wp[a_idx : b_idx + 1] = piecewise_simpson_weights(
            y[a_idx : b_idx + 1], [0, b_idx - a_idx]
        )
        if a_idx > 0:
            psi[a_idx] += wp[a_idx] * (float(fn(y[a_idx] + nudge)) - vals[a_idx])
        if b_idx < len(y) - 1:
            psi[b_idx] += wp[b_idx] * (float(fn(y[b_idx] - nudge)) - vals[b_idx])
    return psi


def _snap_edges(y0, h, n_nodes, points):
    """Lattice indices nearest to the given coordinates, deduplicated."""
    idx = {0, n_nodes - 1}
    for p in points:
        j = round((p - y0) / h)
        if 0 < j < n_nodes - 1:
            idx.add(int(j))
    return sorted(idx)


def _evolve_free_1d_once(fn, breakpoints, t, x_lo, n_out, H, m, n_pad_cells, extent):
    """One quadrature pass at lattice spacing H/m; returns values at out nodes."""
    h = H / m
    n_pad = n_pad_cells * m
    M = n_pad + (n_out - 1) * m + n_pad + 1
    y0 = x_lo - n_pad * h
    y = y0 + h * np.arange(M)
    if extent is not None and (y[0] < extent[0] - 1e-9 * (1 + abs(extent[0]))
                               or y[-1] > extent[1] + 1e-9 * (1 + abs(extent[1]))):
        raise EvaluationWindowError(
            f"datum known on {extent} but integration window is [{y[0]}, {y[-1]}]")
    edges = _snap_edges(y0, h, M, breakpoints)
    psi = _piece_weighted_values(fn, y, edges, h)
    d = h * np.arange(-n_pad, n_pad + 1)
    kern = gauss_kernel(d, t)
    u_full = np.convolve(psi, kern, mode="valid")
    return u_full[:: m][: n_out] if m > 1 else u_full[:n_out]


def heat_evolve_free(phi, t, out_grid, *, eps_tail=1e-10, quad_tol=1e-9,
                     max_refine=6):
    """Evolve phi by the free-space heat semigroup to time t on out_grid.

    phi: GridFunction or InitialDatum (callable + growth certificate).
    out_grid: (lo, hi, h) for dim 1 or a pair of such triples for dim 2.
    Raises ExistenceWindowError unless 4*growth_A*t < 1 - margin.  The
    quadrature window is truncated where the closed-form Gaussian tail bound
    (from the growth certificate) drops below eps_tail relative to the growth
    scale of the result; composite Simpson quadrature is refined by doubling
    until two-grid Richardson agreement reaches quad_tol (relative).  The
    achieved estimate is recorded in value_error and meta.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    fn, a, A, brk, extent, phi_h, inherited = _resolve_datum(phi)
    if 4.0 * A * t >= 1.0 - EXISTENCE_MARGIN:
        admitted = (1.0 - EXISTENCE_MARGIN) / (4.0 * A) if A > 0 else np.inf
        raise ExistenceWindowError(
            f"4*A*t = {4 * A * t:.4g} exceeds the margin; largest admitted "
            f"time for growth exponent {A:.6g} is {admitted:.6g}")
    two_d = isinstance(phi, GridFunction) and phi.dim == 2
    if not two_d and isinstance(out_grid[0], (tuple, list)):
        two_d = True
    if two_d:
        return _heat_evolve_free_2d(phi, t, out_grid, eps_tail=eps_tail,
                                    quad_tol=quad_tol, max_refine=max_refine)

    lo, hi, H_req = out_grid
    x = grid_nodes(lo, hi, H_req)
    n_out = x.size
    H = (hi - lo) / (n_out - 1) if n_out > 1 else H_req

    shrink = 1.0 - 4.0 * A * t
    x_max = max(abs(lo), abs(hi))
    u_scale = a * shrink ** -0.5 * np.exp(min(700.0, A * x_max * x_max / shrink))
    eps_abs = eps_tail * max(1.0, u_scale)
    R = _truncation_radius(a, A, t, x_max, eps_abs)

    h_target = min(H, np.sqrt(t) / 8.0)
    if phi_h is not None:
        h_target = min(h_target, phi_h)
    m = max(1, int(np.ceil(H / h_target - 1e-12)))
    n_pad_cells = int(np.ceil(R / H))

    u_prev = _evolve_free_1d_once(fn, brk, t, lo, n_out, H, m, n_pad_cells, extent)
    est = np.inf
    for _ in range(max_refine):
        m *= 2
        u_next = _evolve_free_1d_once(fn, brk, t, lo, n_out, H, m, n_pad_cells, extent)
        est = float(np.max(np.abs(u_next - u_prev) / (1.0 + np.abs(u_next)))) / 15.0
        u_prev = u_next
        if est <= quad_tol:
            break

    umax = float(np.max(np.abs(u_prev)))
    tail_rel = eps_abs / (1.0 + umax)
    value_error = est + tail_rel + 1.5 * inherited
    return GridFunction(
        values=u_prev,
        extent=((lo, hi),),
        growth_a=a * shrink ** -0.5,
        growth_A=A / shrink,
        value_error=value_error,
        meta={"t": t, "quad_error": est, "tail_bound": eps_abs,
              "inherited_error": inherited, "lattice_factor": m},
    )


def _heat_evolve_free_2d(phi, t, out_grid, *, eps_tail, quad_tol, max_refine):
    """Two-pass separable quadrature for dim-2 data (tensor heat kernel)."""
    if isinstance(phi, GridFunction):
        a, A = phi.growth_a, phi.growth_A
        inherited = phi.value_error
        extent = phi.extent
        sample = phi.interp_to_lattice
        phi_h = min(phi.spacing)
        brk = ((), ())
    else:
        a, A = phi.growth_a, phi.growth_A
        inherited = phi.value_error
        extent = None
        phi_h = None
        brk = phi.breakpoints if phi.breakpoints and isinstance(phi.breakpoints[0], (tuple, list)) else (tuple(phi.breakpoints), tuple(phi.breakpoints))

        def sample(ax0, ax1):
            return np.asarray(phi.fn(ax0[:, None], ax1[None, :]), dtype=float)

    (lo1, hi1, H1r), (lo2, hi2, H2r) = out_grid
    x1 = grid_nodes(lo1, hi1, H1r)
    x2 = grid_nodes(lo2, hi2, H2r)
    H1 = (hi1 - lo1) / (x1.size - 1)
    H2 = (hi2 - lo2) / (x2.size - 1)

    shrink = 1.0 - 4.0 * A * t
    x_max = max(abs(lo1), abs(hi1), abs(lo2), abs(hi2))
    u_scale = a / shrink * np.exp(min(700.0, 2 * A * x_max * x_max / shrink))
    eps_abs = eps_tail * max(1.0, u_scale)
    R = _truncation_radius(a, A, t, x_max, eps_abs / 2.0)

    def one_pass(m):
        h1, h2 = H1 / m, H2 / m
        p1, p2 = int(np.ceil(R / H1)) * m, int(np.ceil(R / H2)) * m
        M1 = p1 + (x1.size - 1) * m + p1 + 1
        M2 = p2 + (x2.size - 1) * m + p2 + 1
        ax0 = lo1 - p1 * h1 + h1 * np.arange(M1)
        ax1 = lo2 - p2 * h2 + h2 * np.arange(M2)
        if extent is not None:
            (e1lo, e1hi), (e2lo, e2hi) = extent
            if ax0[0] < e1lo - 1e-9 or ax0[-1] > e1hi + 1e-9 \
                    or ax1[0] < e2lo - 1e-9 or ax1[-1] > e2hi + 1e-9:
                raise EvaluationWindowError("2D datum does not cover window")
        vals = np.asarray(sample(ax0, ax1), dtype=float)
        w1 = piecewise_simpson_weights(ax0, _snap_edges(ax0[0], h1, M1, brk[0]))
        w2 = piecewise_simpson_weights(ax1, _snap_edges(ax1[0], h2, M2, brk[1]))
        k1 = gauss_kernel(h1 * np.arange(-p1, p1 + 1), t)
        k2 = gauss_kernel(h2 * np.arange(-p2, p2 + 1), t)
        part = np.empty((x1.size, M2))
        wv = w1[:, None] * vals
        for j in range(M2):
            part[:, j] = np.convolve(wv[:, j], k1, mode="valid")[:: m][: x1.size]
        out = np.empty((x1.size, x2.size))
        wp = part * w2[None, :]
        for i in range(x1.size):
            out[i, :] = np.convolve(wp[i, :], k2, mode="valid")[:: m][: x2.size]
        return out

    h_target = min(H1, H2, np.sqrt(t) / 8.0)
    if phi_h is not None:
        h_target = min(h_target, phi_h)
    m = max(1, int(np.ceil(max(H1, H2) / h_target - 1e-12)))
    u_prev = one_pass(m)
    est = np.inf
    for _ in range(max_refine):
        m *= 2
        u_next = one_pass(m)
        est = float(np.max(np.abs(u_next - u_prev) / (1.0 + np.abs(u_next)))) / 15.0
        u_prev = u_next
        if est <= quad_tol:
            break
    umax = float(np.max(np.abs(u_prev)))
    return GridFunction(
        values=u_prev,
        extent=((lo1, hi1), (lo2, hi2)),
        growth_a=a / shrink,
        growth_A=A / shrink,
        value_error=est + eps_abs / (1.0 + umax) + 1.5 * inherited,
        meta={"t": t, "quad_error": est, "tail_bound": eps_abs},
    )


# -- Dirichlet evolution -----------------------------------------------------


def _image_kernel_samples(xi, L, t, eps_rel):
    """Sum of heat-kernel images sum_k Gauss(xi - 2kL, t) at sample points xi."""
    spread = 2.0 * np.sqrt(max(t, 1e-300) * np.log(1.0 / eps_rel))
    K = int(np.ceil((spread + 2 * L + np.max(np.abs(xi))) / (2 * L))) + 1
    ks = np.arange(-K, K + 1)
    return gauss_kernel(xi[:, None] - 2 * L * ks[None, :], t).sum(axis=1), 2 * K + 1


def _dirichlet_interval_values(u0_fn, a, b, t, n_out, m, breakpoints, eps_image,
                               use_sine=None):
    """Zero-boundary evolution of u0 on (a, b) at out nodes a + i*(b-a)/(n_out-1)."""
    L = b - a
    M_cells = (n_out - 1) * m
    h = L / M_cells
    y = a + h * np.arange(M_cells + 1)
    edges = _snap_edges(a, h, M_cells + 1, breakpoints)
    psi = _piece_weighted_values(u0_fn, y, edges, h)

    spread = 2.0 * np.sqrt(t * np.log(1.0 / eps_image))
    n_images = 2 * int(np.ceil((spread + 2 * L) / (2 * L))) + 1
    if use_sine is None:
        use_sine = n_images > 200

    if use_sine:
        n_modes = max(4, int(np.ceil(L / np.pi * np.sqrt(np.log(1.0 / eps_image) / t))) + 2)
        modes = np.arange(1, n_modes + 1)
        sins = np.sin(np.pi * modes[:, None] * (y[None, :] - a) / L)
        coef = (2.0 / L) * sins @ psi
        decay = np.exp(-((np.pi * modes / L) ** 2) * t)
        x = y[::m]
        out = (coef * decay) @ np.sin(np.pi * modes[:, None] * (x[None, :] - a) / L)
        return out, "sine", n_modes

    # Toeplitz part Theta(x - y) and Hankel part Theta(x + y - 2a), where
    # Theta is the 2L-periodic image sum; both sampled from one lattice vector.
    d_T = h * np.arange(-(M_cells), M_cells + 1)
    theta_T, _ = _image_kernel_samples(d_T, L, t, eps_image)
    full = np.convolve(psi, theta_T, mode="valid")
    u_T = full  # length M_cells + 1, node q equals sum_j psi_j Theta((q-j)h)

    s = h * np.arange(0, 2 * M_cells + 1)
    theta_H, _ = _image_kernel_samples(s, L, t, eps_image)
    u_H = np.correlate(theta_H, psi, mode="valid")  # node q: sum_j Theta((q+j)h) psi_j

    u = (u_T - u_H)[:: m][:n_out]
    return u, "images", n_images


def _dirichlet_halfline_values(u0_fn, t, x, m, breakpoints, eps_tail, u0_bound):
    """Zero-boundary evolution on [0, inf) at nodes x (x[0] == 0)."""
    H = x[1] - x[0]
    h = H / m
    R = 2.0 * np.sqrt(t * np.log(max(u0_bound, 1.0) / eps_tail)) + 4 * np.sqrt(t)
    n_extra = int(np.ceil(R / h))
    M = (x.size - 1) * m + n_extra + 1
    y = h * np.arange(M)
    edges = _snap_edges(0.0, h, M, breakpoints)
    psi = _piece_weighted_values(u0_fn, y, edges, h)

    d = h * np.arange(-(M - 1), M)
    kern_T = gauss_kernel(d, t)
    u_T = np.convolve(psi, kern_T, mode="valid")[:: m][: x.size]
    s = h * np.arange(0, (x.size - 1) * m + M)
    kern_H = gauss_kernel(s, t)
    u_H = np.correlate(kern_H, psi, mode="valid")[:: m][: x.size]
    return u_T - u_H


def heat_evolve_dirichlet(phi, domain, t, out_grid=None, *, quad_tol=1e-9,
                          eps_image=1e-14, eps_tail=1e-12, max_refine=6,
                          force_sine=None):
    """Evolve phi holding the boundary at domain.ell, by the method of images.

    phi: GridFunction on the domain, or InitialDatum.  The complement
    v0 = ell - phi has zero boundary data and is evolved with the domain's
    image (reflected-kernel) representation; on intervals the alternating
    image sum switches to the spectral sine series when it would need more
    than 200 images.  Rectangle domains use the tensor product of interval
    kernels.  Boundary nodes of the result are exact.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    ell = domain.ell

    if isinstance(phi, GridFunction):
        inherited = phi.value_error
        brk = ()
        if phi.dim == 1:
            interp = phi.interpolator()
            ex = phi.extent[0]

            def u0_fn(y):
                return ell - np.asarray(interp(np.clip(y, ex[0], ex[1])), dtype=float)

            phi_h = phi.spacing[0]
            sample2 = None
        else:
            phi_h = min(phi.spacing)

            def sample2(ax0, ax1):
                return ell - phi.interp_to_lattice(ax0, ax1)
    elif isinstance(phi, InitialDatum):
        inherited = phi.value_error
        brk = tuple(phi.breakpoints)
        phi_h = None
        if domain.kind == "rectangle":
            def sample2(ax0, ax1):
                return ell - np.asarray(phi.fn(ax0[:, None], ax1[None, :]), dtype=float)
        else:
            def u0_fn(y):
                return ell - np.asarray(phi.fn(y), dtype=float)
    else:
        raise TypeError("phi must be GridFunction or InitialDatum")

    if domain.kind == "interval":
        a, b = domain.bounds[0]
        if out_grid is None:
            if not isinstance(phi, GridFunction):
                raise ValueError("out_grid required for callable data")
            n_out = phi.values.size
        else:
            n_out = grid_nodes(*out_grid).size
            if abs(out_grid[0] - a) > 1e-12 or abs(out_grid[1] - b) > 1e-12:
                raise ValueError("out_grid must span the interval")
        H = (b - a) / (n_out - 1)
        h_target = min(H, np.sqrt(t) / 8.0, *( [phi_h] if phi_h else [] ))
        m = max(1, int(np.ceil(H / h_target - 1e-12)))

        probe = np.abs(np.asarray(u0_fn(np.linspace(a, b, 257)), dtype=float))
        if not np.all(np.isfinite(probe)):
            raise DomainError("datum must be bounded on the domain")

        u_prev, rep, _ = _dirichlet_interval_values(
            u0_fn, a, b, t, n_out, m, brk, eps_image, use_sine=force_sine)
        est = np.inf
        for _ in range(max_refine):
            m *= 2
            u_next, rep, _ = _dirichlet_interval_values(
                u0_fn, a, b, t, n_out, m, brk, eps_image, use_sine=force_sine)
            est = float(np.max(np.abs(u_next - u_prev) / (1.0 + np.abs(u_next)))) / 15.0
            u_prev = u_next
            if est <= quad_tol:
                break
        vals = ell - u_prev
        vals[0] = ell
        vals[-1] = ell
        bound = float(np.max(np.abs(vals)))
        return GridFunction(values=vals, extent=((a, b),), growth_a=max(bound, 1e-300),
                            growth_A=0.0,
                            value_error=est + eps_image + 1.5 * inherited,
                            meta={"t": t, "representation": rep, "quad_error": est})

    if domain.kind == "half_line":
        if out_grid is None:
            raise ValueError("out_grid required on the half line")
        lo, hi, H_req = out_grid
        if abs(lo) > 1e-12:
            raise ValueError("half-line out_grid must start at 0")
        x = grid_nodes(lo, hi, H_req)
        H = x[1] - x[0]
        probe = np.abs(np.asarray(u0_fn(np.linspace(0, hi + 8 * np.sqrt(t), 257)),
                                  dtype=float))
        if not np.all(np.isfinite(probe)):
            raise DomainError("datum must be bounded")
        u0_bound = float(np.max(probe))
        h_target = min(H, np.sqrt(t) / 8.0, *( [phi_h] if phi_h else [] ))
        m = max(1, int(np.ceil(H / h_target - 1e-12)))
        u_prev = _dirichlet_halfline_values(u0_fn, t, x, m, brk, eps_tail, u0_bound)
        est = np.inf
        for _ in range(max_refine):
            m *= 2
            u_next = _dirichlet_halfline_values(u0_fn, t, x, m, brk, eps_tail, u0_bound)
            est = float(np.max(np.abs(u_next - u_prev) / (1.0 + np.abs(u_next)))) / 15.0
            u_prev = u_next
            if est <= quad_tol:
                break
        vals = ell - u_prev
        vals[0] = ell
        bound = float(np.max(np.abs(vals)))
        return GridFunction(values=vals, extent=((lo, hi),),
                            growth_a=max(bound, 1e-300), growth_A=0.0,
                            value_error=est + eps_tail + 1.5 * inherited,
                            meta={"t": t, "representation": "images",
                                  "quad_error": est})

    if domain.kind == "rectangle":
        (a1, b1), (a2, b2) = domain.bounds
        if out_grid is None:
            if not isinstance(phi, GridFunction):
                raise ValueError("out_grid required for callable data")
            n1, n2 = phi.values.shape
        else:
            n1 = grid_nodes(a1, b1, out_grid[0][2]).size
            n2 = grid_nodes(a2, b2, out_grid[1][2]).size
        H1, H2 = (b1 - a1) / (n1 - 1), (b2 - a2) / (n2 - 1)
        h_target = min(H1, H2, np.sqrt(t) / 8.0, *( [phi_h] if phi_h else [] ))
        m0 = max(1, int(np.ceil(max(H1, H2) / h_target - 1e-12)))

        brk2 = brk if (brk and isinstance(brk[0], (tuple, list))) else (brk, brk)

        def one_pass(m):
            h1 = H1 / m
            h2 = H2 / m
            M1 = (n1 - 1) * m + 1
            M2 = (n2 - 1) * m + 1
            ax0 = a1 + h1 * np.arange(M1)
            ax1 = a2 + h2 * np.arange(M2)
            vals0 = np.asarray(sample2(ax0, ax1), dtype=float)
            w1 = piecewise_simpson_weights(ax0, _snap_edges(a1, h1, M1, brk2[0]))
            w2 = piecewise_simpson_weights(ax1, _snap_edges(a2, h2, M2, brk2[1]))

            def axis_kernels(aa, L, h, M_cells):
                d = h * np.arange(-M_cells, M_cells + 1)
                thT, _ = _image_kernel_samples(d, L, t, eps_image)
                s = h * np.arange(0, 2 * M_cells + 1)
                thH, _ = _image_kernel_samples(s, L, t, eps_image)
                return thT, thH

            thT1, thH1 = axis_kernels(a1, b1 - a1, h1, M1 - 1)
            thT2, thH2 = axis_kernels(a2, b2 - a2, h2, M2 - 1)

            wv = w1[:, None] * vals0
            part = np.empty((n1, M2))
            for j in range(M2):
                col = wv[:, j]
                uT = np.convolve(col, thT1, mode="valid")
                uH = np.correlate(thH1, col, mode="valid")
                part[:, j] = (uT - uH)[:: m][:n1]
            out = np.empty((n1, n2))
            wp = part * w2[None, :]
            for i in range(n1):
                row = wp[i, :]
                uT = np.convolve(row, thT2, mode="valid")
                uH = np.correlate(thH2, row, mode="valid")
                out[i, :] = (uT - uH)[:: m][:n2]
            return out

        m = m0
        u_prev = one_pass(m)
        est = np.inf
        for _ in range(max_refine):
            m *= 2
            u_next = one_pass(m)
            est = float(np.max(np.abs(u_next - u_prev) / (1.0 + np.abs(u_next)))) / 15.0
            u_prev = u_next
            if est <= quad_tol:
                break
        vals = ell - u_prev
        vals[0, :] = ell
        vals[-1, :] = ell
        vals[:, 0] = ell
        vals[:, -1] = ell
        bound = float(np.max(np.abs(vals)))
        return GridFunction(values=vals, extent=((a1, b1), (a2, b2)),
                            growth_a=max(bound, 1e-300), growth_A=0.0,
                            value_error=est + eps_image + 1.5 * inherited,
                            meta={"t": t, "representation": "images",
                                  "quad_error": est})

    raise ValueError(f"unsupported domain kind {domain.kind!r} for Dirichlet flow")


# -- heat-evolved step function and its inverse ------------------------------


def hot_h(z):
    """Unit-time heat evolution of the unit step: (1 + erf(z/2)) / 2."""
    z = np.asarray(z, dtype=float)
    out = 0.5 * (1.0 + erf(0.5 * z))
    return float(out) if out.ndim == 0 else out


def hot_h_deriv(z):
    """Derivative of hot_h, the time-1 heat kernel."""
    return gauss_kernel(np.asarray(z, dtype=float), 1.0)


def hot_H(r):
    """Monotone inverse of hot_h on (0, 1), by bracketing bisection + Newton."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0.0) or np.any(r_arr >= 1.0):
        raise DomainError("hot_H needs arguments strictly inside (0, 1)")
    return invert_monotone(hot_h, r, -75.0, 75.0, deriv=hot_h_deriv)


# -- quadratic lift ----------------------------------------------------------


def epsilon_quadratic_lift(phi, eps, *, min_growth_A=1e-3):
    """Datum phi + eps |x|^2 with an updated growth certificate."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if isinstance(phi, GridFunction):
        r2 = phi._radius_sq()
        A = max(phi.growth_A, min_growth_A if eps > 0 else phi.growth_A)
        a = phi.growth_a + (eps / (np.e * A) if eps > 0 else 0.0)
        return replace(phi, values=phi.values + eps * r2, growth_a=a, growth_A=A)
    if isinstance(phi, InitialDatum):
        A = max(phi.growth_A, min_growth_A if eps > 0 else phi.growth_A)
        a = phi.growth_a + (eps / (np.e * A) if eps > 0 else 0.0)
        base = phi.fn

        def lifted(*xs):
            r2 = sum(np.asarray(c, dtype=float) ** 2 for c in xs)
            return base(*xs) + eps * r2

        return InitialDatum(fn=lifted, growth_a=a, growth_A=A,
                            breakpoints=phi.breakpoints,
                            label=(phi.label + "+lift") if phi.label else "lifted",
                            value_error=phi.value_error)
    raise TypeError("phi must be GridFunction or InitialDatum")


def lifted_evolution_identity(u, eps, t):
    """Exact evolution of the lift: u + eps (|x|^2 + 2 n t) on u's grid."""
    n = u.dim
    r2 = u._radius_sq()
    A = max(u.growth_A, 1e-3 if eps > 0 else u.growth_A)
    a = u.growth_a + (eps / (np.e * A) if eps > 0 else 0.0) + 2 * n * t * eps
    return replace(u, values=u.values + eps * (r2 + 2.0 * n * t),
                   growth_a=a, growth_A=A)
