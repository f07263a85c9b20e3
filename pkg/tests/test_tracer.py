"""Moving-frame streamlines: conservation, reversibility, escape and invariance."""
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vortex_atmos.tracer import (BOUNDED, ESCAPING, QuadratureField, SplineField, axis_passage,
                                 escape_asymptote, surrogate_grid, time_reversal_check,
                                 time_reversal_error, trace,
                                 trace_many, verify_domain_invariance, verify_escape)


@pytest.fixture(scope="module")
def lamb_field(lamb):
    return QuadratureField(lamb.tv, lamb.solver)


@pytest.fixture(scope="module")
def hill_field(hill):
    return QuadratureField(hill.tv, hill.solver)


@pytest.fixture(scope="module")
def lamb_spline(lamb):
    return SplineField(lamb.tv, lamb.solver)


# --------------------------------------------------------------- single traces
def test_interior_orbit_closes(hill, hill_field):
    tr = trace(hill.tv, (0.0, 0.5), 200.0, field=hill_field)
    assert tr.verdict == BOUNDED and tr.period is not None
    assert "closed orbit" in tr.reason
    assert tr.max_phi_drift <= 1e-6
    # the trace ends at the interpolated return to the seed section
    assert np.hypot(tr.a[-1] - 0.0, tr.b[-1] - 0.5) <= 1e-4
    assert tr.t[-1] == pytest.approx(tr.period)
    # the orbit stays inside the unit ball on its level set
    assert np.all(np.hypot(tr.a, tr.b) < 1.0)


def test_hill_interior_period_matches_quadrature(hill, hill_field):
    """Period of the orbit through (0, s0) from the closed-form moving-frame flow."""
    from scipy.integrate import solve_ivp
    A = 1.0

    def rhs(t, y):
        # velocity relative to the vortex inside the ball
        z, r = y
        return [A / 5.0 * (1.0 - 2.0 * r * r - z * z), A / 5.0 * z * r]

    def crossing(t, y):
        return y[0]
    crossing.direction = 1.0
    sol = solve_ivp(rhs, (0.0, 500.0), [0.0, 0.5], events=crossing, rtol=1e-12, atol=1e-14)
    # the seed itself lies on the section; the period is the next upward crossing
    period = min(t for t in sol.t_events[0] if t > 1e-8)
    tr = trace(hill.tv, (0.0, 0.5), 500.0, field=hill_field)
    assert tr.period == pytest.approx(period, rel=1e-6)


def test_phi_is_conserved_along_random_traces(lamb, lamb_field, rng):
    seeds = np.column_stack([rng.uniform(-2.0, 2.0, 12), rng.uniform(0.05, 2.0, 12)])
    for tr in trace_many(lamb.tv, seeds, 20.0, field=lamb_field):
        assert tr.max_phi_drift <= 1e-6


def test_time_reversal(lamb, lamb_field):
    tol = 1e-9
    chk = time_reversal_check(lamb.tv, (0.3, 0.4), 2.0 / lamb.tv.speed, tol, lamb_field)
    assert chk.budget == pytest.approx(tol * lamb.tv.scale * chk.steps)
    assert chk.error <= 10 * chk.budget
    # the error shrinks with the tolerance
    tighter = time_reversal_error(lamb.tv, (0.3, 0.4), 2.0 / lamb.tv.speed, 1e-11, lamb_field)
    assert tighter < 0.1 * chk.error


def test_backward_tracing_has_negative_times(lamb, lamb_field):
    tr = trace(lamb.tv, (0.2, 0.3), 1.0, field=lamb_field, direction=-1.0)
    assert tr.t[-1] < 0.0 and np.all(np.diff(tr.t) < 0.0)


def test_axis_is_invariant_for_dipoles(lamb, lamb_field):
    # behind the dipole the axis flow carries the particle away
    tr = trace(lamb.tv, (-3.0, 0.0), 50.0, field=lamb_field)
    assert np.all(tr.b == 0.0)
    assert tr.verdict == ESCAPING
    # ahead of it the particle runs into the front stagnation point and stays
    front = trace(lamb.tv, (3.0, 0.0), 50.0, field=lamb_field)
    assert np.all(front.b == 0.0) and front.verdict == BOUNDED
    assert front.a[-1] == pytest.approx(1.0, abs=1e-3)


def test_restarting_from_a_node_reproduces_the_path(lamb, lamb_field):
    first = trace(lamb.tv, (0.1, 0.6), 2.0, field=lamb_field, stop_on_closed=False)
    mid = (first.a[-1], first.b[-1])
    second = trace(lamb.tv, mid, 2.0, field=lamb_field, stop_on_closed=False)
    whole = trace(lamb.tv, (0.1, 0.6), 4.0, field=lamb_field, stop_on_closed=False)
    assert np.hypot(second.a[-1] - whole.a[-1], second.b[-1] - whole.b[-1]) < 1e-6


def test_exterior_seed_escapes_to_asymptote(hill, hill_field):
    tr = trace(hill.tv, (3.0, 1.2), 500.0, field=hill_field)
    assert tr.verdict == ESCAPING
    assert tr.phi_seed < 0.0
    assert tr.escape_asymptote == pytest.approx(np.sqrt(-2.0 * tr.phi_seed / hill.tv.speed))


def test_escape_asymptote_formula(hill, lamb):
    assert escape_asymptote(hill.tv, 0.1) is None
    assert escape_asymptote(lamb.tv, -0.5) == pytest.approx(0.5)
    assert escape_asymptote(hill.tv, -0.4) == pytest.approx(np.sqrt(0.8 / hill.tv.speed))


def test_invalid_seeds(lamb):
    with pytest.raises(ValueError):
        trace(lamb.tv, (0.0, -1.0), 1.0)
    with pytest.raises(ValueError):
        trace(lamb.tv, (np.nan, 1.0), 1.0)


def test_exports(tmp_path, lamb, lamb_field):
    tr = trace(lamb.tv, (0.2, 0.3), 1.0, field=lamb_field)
    path = tmp_path / "t.csv"
    tr.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x1,x2,phi" and len(lines) == tr.t.size + 1
    doc = json.loads(tr.to_json())
    assert doc["verdict"] == tr.verdict and doc["n_nodes"] == tr.t.size


# --------------------------------------------------------------- escape lemma
def test_escape_lemma_confirmed_for_lamb(lamb, lamb_field):
    chk = verify_escape(lamb.tv, (-3.0, 0.5), field=lamb_field)
    assert chk.hypotheses_hold and chk.escaped and bool(chk)
    assert chk.relative_error < 0.02


def test_escape_lemma_hypotheses_fail(lamb, lamb_field):
    assert not verify_escape(lamb.tv, (1.0, 0.5), field=lamb_field).hypotheses_hold
    inside = verify_escape(lamb.tv, (-0.2, 0.5), field=lamb_field)
    assert not inside.hypotheses_hold and "phi(seed)" in inside.reason


# --------------------------------------------------------------- surrogate
def test_spline_surrogate_accuracy(lamb, lamb_spline, rng):
    a = rng.uniform(-3.0, 3.0, 400)
    b = rng.uniform(0.0, 2.0, 400)
    exact = lamb.solver.relative_stream(a, b)
    assert np.max(np.abs(lamb_spline.phi(a, b) - exact)) < 1e-6
    # outside the tabulated box the quadrature is used
    far = np.array([20.0]), np.array([1.0])
    assert lamb_spline.phi(*far)[0] == pytest.approx(lamb.solver.relative_stream(*far)[0], rel=1e-12)


def test_surrogate_grid_resolves_thin_cores(gauss_toroid):
    a_nodes, b_nodes = surrogate_grid(gauss_toroid.tv)
    th = 2 * gauss_toroid.tv.vorticity.cut_radius
    assert np.min(np.diff(a_nodes)) <= th / 40 * 1.0001
    assert np.all(np.diff(a_nodes) > 0) and np.all(np.diff(b_nodes) > 0)


@settings(max_examples=15, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(0.05, 2.0))
def test_spline_flow_conserves_its_own_level(lamb, lamb_spline, a, b):
    tr = trace(lamb.tv, (a, b), 10.0, field=lamb_spline)
    assert tr.max_phi_drift <= 1e-6


# --------------------------------------------------------------- invariance
def test_domain_invariance_small_sample(lamb, lamb_spline):
    rep = verify_domain_invariance(lamb.tv, lamb.domain, n_particles=60, T=10.0, field=lamb_spline)
    assert rep.n_interior == 60 and rep.n_exterior == 60
    assert rep.interior_fraction >= 0.99 and rep.exterior_fraction >= 0.99
    assert rep.max_phi_drift <= 1e-6


def test_dipole_exterior_seeds_never_enter(lamb, lamb_spline):
    res = axis_passage(lamb.tv, lamb.domain, n=10, T=30.0, field=lamb_spline)
    assert res.through_hole == 0 and res.entered_domain == 0
    assert res.reached_behind == res.n
