"""Midpoint certificates, envelopes, hunts, and the class hierarchy."""

import numpy as np
import pytest

from heatconvex import (
    DomainError,
    DomainSpec,
    GridFunction,
    InitialDatum,
    SamplingPlan,
    check_F_convex,
    check_envelope_comparison,
    check_quasi_convex,
    counterexample_datum,
    heat_evolve_dirichlet,
    heat_evolve_free,
    hunt_violation,
    hot_h,
    make_hot,
    make_neglog,
    make_power_alpha,
    mixture_envelope,
    scale_shift,
)

P0 = make_power_alpha(0.0)
P05 = make_power_alpha(0.5)
P1 = make_power_alpha(1.0)
P2 = make_power_alpha(2.0)


def grid_1d(fn, lo=-3.0, hi=3.0, n=301, value_error=0.0, growth_a=None):
    x = np.linspace(lo, hi, n)
    vals = fn(x)
    a = float(np.max(np.abs(vals))) * (1 + 1e-12) if growth_a is None else growth_a
    return GridFunction(values=vals, extent=((lo, hi),), growth_a=a,
                        growth_A=0.0, value_error=value_error)


def raw_second_difference_gap(vals):
    # stride-1 midpoint gap computed the pedestrian way
    mid = vals[1:-1]
    chord = 0.5 * vals[:-2] + 0.5 * vals[2:]
    return float(np.max(mid - chord))


# -- agreement with the elementary convexity test -----------------------------


@pytest.mark.parametrize("fn,expect_violation", [
    (lambda x: x * x + 1.0, False),
    (lambda x: np.abs(x) + 0.5, False),
    (lambda x: np.sin(3 * x) + 2.0, True),
    (lambda x: np.exp(-x * x) + 0.1, True),
])
def test_identity_transform_matches_raw_second_differences(fn, expect_violation):
    u = grid_1d(fn)
    plan = SamplingPlan(max_stride=1)
    cert = check_F_convex(u, P1, plan)
    raw = raw_second_difference_gap(u.values)
    assert cert.worst.gap == pytest.approx(raw, abs=1e-15)
    assert (cert.status == "violation") == expect_violation
    assert (raw > cert.noise_floor) == expect_violation


def test_full_stride_scan_agrees_on_clear_cases():
    # larger strides cannot flip the verdict of a clearly convex or clearly
    # wiggly sample
    convex = check_F_convex(grid_1d(lambda x: x * x + 1.0), P1)
    wiggly = check_F_convex(grid_1d(lambda x: np.sin(3 * x) + 2.0), P1)
    assert convex.status == "no_violation_found"
    assert not convex.significant
    assert wiggly.status == "violation"
    assert wiggly.significant


# -- relabeling invariance -----------------------------------------------------


def test_affine_relabel_keeps_verdict_and_scales_gap():
    u = grid_1d(lambda x: np.exp(-x * x) + 0.1)
    F2 = scale_shift(P1, 2.5, -3.0)
    c1 = check_F_convex(u, P1)
    c2 = check_F_convex(u, F2)
    assert c1.status == c2.status == "violation"
    assert c1.significant and c2.significant
    assert c2.worst.gap / c1.worst.gap == pytest.approx(2.5, rel=1e-9)
    assert c2.worst.x0 == c1.worst.x0
    assert c2.worst.x1 == c1.worst.x1


def test_affine_relabel_on_convex_data():
    u = grid_1d(lambda x: np.cosh(x))
    c1 = check_F_convex(u, P1)
    c2 = check_F_convex(u, scale_shift(P1, 7.0, 11.0))
    assert c1.status == c2.status == "no_violation_found"


# -- hierarchy over a small corpus ---------------------------------------------


def corpus():
    evolved = heat_evolve_free(
        InitialDatum(fn=lambda x: np.exp(np.abs(x)), growth_a=float(np.e),
                     growth_A=0.25, breakpoints=(0.0,)),
        0.1, (-4.0, 4.0, 1 / 64))
    yield "evolved_exp_abs", evolved, (True, True, True)
    yield "cosh", grid_1d(np.cosh), (True, True, True)
    yield "abs_shift", grid_1d(lambda x: np.abs(x) + 0.5), (False, True, True)
    yield "sine", grid_1d(lambda x: np.sin(x) + 2.0), (False, False, False)
    yield "bump", grid_1d(lambda x: np.exp(-x * x)), (False, False, False)


@pytest.mark.parametrize("name,u,expected",
                         list(corpus()), ids=lambda v: v if isinstance(v, str) else "")
def test_class_hierarchy(name, u, expected):
    passes_log = check_F_convex(u, P0).status == "no_violation_found"
    passes_convex = check_F_convex(u, P1).status == "no_violation_found"
    quasi, _ = check_quasi_convex(u)
    assert (passes_log, passes_convex, quasi) == expected
    # the containment chain itself
    if passes_log:
        assert passes_convex
    if passes_convex:
        assert quasi


# -- wedge data ----------------------------------------------------------------


def test_wedge_closed_forms():
    x = np.linspace(-2.0, 2.0, 41)
    w1 = counterexample_datum(P1, 1.0)
    assert np.allclose(w1.fn(x), np.abs(x) + 1.0, atol=1e-12)
    w2 = counterexample_datum(P2, 1.0)
    assert np.allclose(w2.fn(x), np.sqrt(2 * np.abs(x) + 1.0), atol=1e-12)
    assert w1.breakpoints == (0.0,)


@pytest.mark.parametrize("F", [P05, P1, P2], ids=["pow0.5", "pow1", "pow2"])
def test_wedge_is_exactly_F_convex_at_time_zero(F):
    d = counterexample_datum(F, 1.0)
    x = np.linspace(-4.0, 4.0, 257)
    u0 = GridFunction(values=d.fn(x), extent=((-4.0, 4.0),),
                      growth_a=d.growth_a, growth_A=d.growth_A)
    cert = check_F_convex(u0, F)
    assert cert.status == "no_violation_found"
    assert not cert.significant


def test_wedge_rejects_exterior_vertex_value():
    with pytest.raises(DomainError):
        counterexample_datum(P1, -0.5)


def test_wedge_2d_direction_and_breakpoints():
    d = counterexample_datum(P2, 1.0, direction=(0.0, 1.0), dim=2)
    assert d.breakpoints == ((), (0.0,))
    x = np.linspace(-2.0, 2.0, 65)
    vals = d.fn(x[:, None], x[None, :])
    u0 = GridFunction(values=vals, extent=((-2.0, 2.0), (-2.0, 2.0)),
                      growth_a=d.growth_a, growth_A=d.growth_A)
    cert = check_F_convex(u0, P2)
    assert cert.status == "no_violation_found"


# -- the hunt dichotomy --------------------------------------------------------


@pytest.mark.parametrize("alpha,destroyed", [
    (0.5, False),
    (1.0, False),
    (1.25, True),
    (1.5, True),
    (2.0, True),
])
def test_hunt_dichotomy(alpha, destroyed):
    F = make_power_alpha(alpha)
    phi = counterexample_datum(F, 1.0)
    cert, t_first = hunt_violation(F, phi, times=(0.05, 0.1),
                                   window=(-6.0, 6.0), refine=2, n_base=129)
    if destroyed:
        assert t_first is not None
        assert cert.significant
        assert cert.status == "violation"
    else:
        assert t_first is None
        assert not cert.significant
        assert cert.status == "no_violation_found"


def test_hunt_history_records_refinement_passes():
    F = make_power_alpha(2.0)
    phi = counterexample_datum(F, 1.0)
    history = []
    cert, t_first = hunt_violation(F, phi, times=(0.05,), window=(-6.0, 6.0),
                                   refine=2, n_base=129, history=history)
    assert t_first == 0.05
    assert len(history) >= 2
    levels = [rec["level"] for rec in history]
    assert levels == sorted(levels)
    for rec in history:
        assert rec["t"] == 0.05
        assert rec["certificate"].worst is not None
    # successive grids halve the spacing
    assert history[1]["h"] == pytest.approx(history[0]["h"] / 2)


# -- mixture envelope ----------------------------------------------------------


def test_envelope_reproduces_convex_values_exactly():
    x = np.linspace(-2.0, 2.0, 129)
    v = GridFunction(values=np.abs(x) - 1.0, extent=((-2.0, 2.0),),
                     growth_a=1.0, growth_A=0.0)
    env = mixture_envelope(v, 0.5)
    assert np.array_equal(env.values, v.values)
    assert not env.meta["flagged"][64]


def test_envelope_of_negative_abs():
    # inf over symmetric pairs pulls the center down to the chord value
    x = np.linspace(-1.0, 1.0, 101)
    v = GridFunction(values=-np.abs(x), extent=((-1.0, 1.0),),
                     growth_a=1.0, growth_A=0.0)
    env = mixture_envelope(v, 0.5)
    assert env.values[50] == -1.0
    assert np.all(env.values <= v.values)
    assert np.any(env.values < v.values)
    assert env.values[0] == v.values[0]
    assert env.values[-1] == v.values[-1]


def test_envelope_of_wedge_in_transform_coordinates():
    d = counterexample_datum(P1, 1.0)
    x = np.linspace(-4.0, 4.0, 129)
    v = GridFunction(values=P1(d.fn(x)), extent=((-4.0, 4.0),),
                     growth_a=5.0, growth_A=0.0)
    env = mixture_envelope(v, 0.5)
    assert np.array_equal(env.values, v.values)


def brute_envelope(w, p, q):
    n = w.size
    lam = p / q
    out = w.copy()
    for i in range(n):
        for s in range(1, n):
            for d0, d1 in ((-p * s, (q - p) * s), (p * s, -(q - p) * s)):
                i0, i1 = i + d0, i + d1
                if 0 <= i0 < n and 0 <= i1 < n:
                    cand = (1 - lam) * w[i0] + lam * w[i1]
                    if cand < out[i]:
                        out[i] = cand
    return out


@pytest.mark.parametrize("lam,p,q", [(0.5, 1, 2), (0.25, 1, 4)])
def test_envelope_matches_brute_force(lam, p, q):
    rng = np.random.default_rng(11)
    vals = np.cumsum(rng.standard_normal(97)) * 0.3
    v = GridFunction(values=vals, extent=((-3.0, 3.0),),
                     growth_a=float(np.max(np.abs(vals))) + 1.0, growth_A=0.0)
    env = mixture_envelope(v, lam)
    oracle = brute_envelope(vals, p, q)
    tol = 1e-12 * (1.0 + np.abs(oracle))
    assert np.all(env.values <= oracle + tol)
    assert np.all(oracle <= env.values + tol)
    assert np.all(env.values <= v.values)


def test_envelope_rejects_bad_weights_and_2d():
    x = np.linspace(-1.0, 1.0, 11)
    v = GridFunction(values=x * x, extent=((-1.0, 1.0),), growth_a=1.0)
    with pytest.raises(DomainError):
        mixture_envelope(v, 0.3)
    with pytest.raises(DomainError):
        mixture_envelope(v, 1.0)
    v2 = GridFunction(values=np.zeros((5, 5)),
                      extent=((-1.0, 1.0), (-1.0, 1.0)), growth_a=1.0)
    with pytest.raises(DomainError):
        mixture_envelope(v2, 0.5)


# -- evolved envelope comparison -----------------------------------------------


def test_envelope_comparison_holds_for_abs_under_identity():
    phi = InitialDatum(fn=np.abs, growth_a=4.0, growth_A=0.0,
                       breakpoints=(0.0,))
    rep = check_envelope_comparison(P1, phi, 0.5, 0.1, (-4.0, 4.0), 1 / 32)
    assert rep.status == "holds"
    assert rep.max_gap <= 3 * rep.noise_floor
    assert rep.n_samples > 0


def test_envelope_comparison_holds_for_exp_abs_under_log():
    phi = InitialDatum(fn=lambda x: np.exp(np.abs(x)), growth_a=float(np.e),
                       growth_A=0.25, breakpoints=(0.0,))
    rep = check_envelope_comparison(P0, phi, 0.5, 0.1, (-3.0, 3.0), 1 / 32)
    assert rep.status == "holds"


def test_envelope_comparison_affine_datum_gap_is_dust():
    phi = InitialDatum(fn=lambda x: 0.1 * x + 10.0, growth_a=12.0,
                       growth_A=0.0)
    rep = check_envelope_comparison(P1, phi, 0.5, 0.05, (-2.0, 2.0), 1 / 32)
    assert rep.status == "holds"
    assert rep.max_gap <= 1e-8


# -- quasi-convexity -----------------------------------------------------------


def test_quasi_convex_1d():
    ok, witness = check_quasi_convex(grid_1d(lambda x: x * x))
    assert ok and witness is None

    ok, witness = check_quasi_convex(grid_1d(lambda x: np.sin(x) + 2.0, n=241))
    assert not ok
    x0, xm, x1 = witness
    assert x0 < xm < x1
    assert np.sin(xm) + 2 > max(np.sin(x0) + 2, np.sin(x1) + 2)


def test_quasi_convexity_survives_evolution_of_abs():
    phi = InitialDatum(fn=np.abs, growth_a=5.0, growth_A=0.0,
                       breakpoints=(0.0,))
    u = heat_evolve_free(phi, 0.1, (-4.0, 4.0, 1 / 64))
    ok, _ = check_quasi_convex(u)
    assert ok


def grid_2d(fn, lo=-2.0, hi=2.0, n=61):
    x = np.linspace(lo, hi, n)
    return GridFunction(values=fn(x[:, None], x[None, :]),
                        extent=((lo, hi), (lo, hi)),
                        growth_a=50.0, growth_A=0.0)


def test_quasi_convex_2d():
    ok, _ = check_quasi_convex(grid_2d(lambda x, y: x * x + y * y))
    assert ok
    ok, _ = check_quasi_convex(grid_2d(lambda x, y: x * x - y * y))
    assert not ok
    ok, _ = check_quasi_convex(grid_2d(lambda x, y: (x * x - 1) ** 2 + 0.5 * y * y))
    assert not ok


# -- sampling plans ------------------------------------------------------------


def test_random_plan_is_deterministic_by_seed():
    u = grid_1d(lambda x: np.sin(2 * x) + x * x / 4 + 2.0)
    plan = SamplingPlan(kind="random", lambdas=(0.5, 0.25), n_random=500, seed=7)
    c1 = check_F_convex(u, P1, plan)
    c2 = check_F_convex(u, P1, plan)
    assert c1.worst.gap == c2.worst.gap
    assert c1.worst.x0 == c2.worst.x0
    assert c1.n_samples == c2.n_samples > 0


def test_unknown_plan_kind_rejected():
    u = grid_1d(lambda x: x * x)
    with pytest.raises(DomainError):
        check_F_convex(u, P1, SamplingPlan(kind="sobol"))


# -- Dirichlet preservation ----------------------------------------------------


def test_dirichlet_hot_convexity_survives():
    dom = DomainSpec.interval(0.0, 1.0, ell=1.0)
    F = make_hot(1.0)

    def phi(x):
        with np.errstate(divide="ignore"):
            pot = -2.0 * (np.log(x) + np.log1p(-x)) - 6.0
        return hot_h(pot)

    datum = InitialDatum(fn=phi, growth_a=1.0, growth_A=0.0)
    u = heat_evolve_dirichlet(datum, dom, 0.05, (0.0, 1.0, 1 / 256))
    cert = check_F_convex(u, F)
    assert not cert.significant


def test_dirichlet_neglog_convexity_survives():
    dom = DomainSpec.interval(0.0, 1.0, ell=1.0)
    F = make_neglog(0.0, 1.0)
    datum = InitialDatum(fn=lambda x: 1.0 - x * (1.0 - x), growth_a=1.0,
                         growth_A=0.0)
    u = heat_evolve_dirichlet(datum, dom, 0.05, (0.0, 1.0, 1 / 256))
    cert = check_F_convex(u, F)
    assert not cert.significant
