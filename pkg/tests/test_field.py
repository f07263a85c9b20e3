"""Vorticity primitives, Steiner checks, steadiness and speed calibration."""
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import j0, jn_zeros

from vortex_atmos.field import (DIPOLE, RING, GaussianPair, GaussianRing, Gridded, HillBall,
                                LambDipole, PatchPair, SpecError, TravelingVortex, calibrate_speed,
                                check_steiner, evaluate_vorticity, spec_from_dict, spec_to_json,
                                steadiness_residual)


# --------------------------------------------------------------- validation
@pytest.mark.parametrize("make", [
    lambda: HillBall(-1.0, 1.0),
    lambda: HillBall(1.0, 0.0),
    lambda: HillBall(1.0, float("nan")),
    lambda: HillBall(geometry=DIPOLE),
    lambda: LambDipole(geometry=RING),
    lambda: PatchPair(1.0, 1.0, 1.5),
    lambda: GaussianRing(1.0, 1.0, float("inf")),
    lambda: GaussianPair(1.0, -1.0, 0.1),
    lambda: Gridded(np.array([0.0, 1.0]), np.array([-1.0, 1.0]), np.ones((2, 2))),
    lambda: Gridded(np.array([0.0, 1.0]), np.array([0.0, 1.0]), -np.ones((2, 2))),
    lambda: Gridded(np.array([1.0, 0.0]), np.array([0.0, 1.0]), np.ones((2, 2))),
    lambda: Gridded(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.ones((3, 2))),
    lambda: Gridded(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.array([[1.0, np.nan], [0.0, 0.0]])),
])
def test_invalid_specs_are_rejected(make):
    with pytest.raises(SpecError):
        make()


def test_traveling_vortex_needs_positive_speed():
    with pytest.raises(SpecError):
        TravelingVortex(HillBall(), 0.0)
    with pytest.raises(SpecError):
        TravelingVortex(HillBall(), float("nan"))


def test_pointwise_evaluation():
    assert evaluate_vorticity(HillBall(2.0, 1.0), (0.1, 0.2)) == 2.0
    assert evaluate_vorticity(HillBall(2.0, 1.0), (1.0, 0.5)) == 0.0
    with pytest.raises(SpecError):
        evaluate_vorticity(HillBall(), (0.0, -0.1))
    with pytest.raises(SpecError):
        evaluate_vorticity(HillBall(), (float("nan"), 0.1))
    p = PatchPair(3.0, 1.0, 0.1)
    assert evaluate_vorticity(p, (0.0, 1.0)) == 3.0
    assert evaluate_vorticity(p, (0.0, -1.0)) == -3.0
    g = Gridded(np.array([0.0, 1.0]), np.array([0.0, 1.0]), np.ones((2, 2)))
    assert evaluate_vorticity(g, (5.0, 0.5), with_flag=True) == (0.0, False)


# --------------------------------------------------------------- closed forms
def test_lamb_coefficient_and_continuity():
    lamb = LambDipole(1.3, 0.7)
    ka = jn_zeros(1, 1)[0]
    assert lamb.wavenumber * lamb.radius == pytest.approx(ka)
    assert lamb.coefficient == pytest.approx(-2 * 0.7 / (lamb.wavenumber * j0(ka)))
    # the lab-frame stream function is continuous across the circle and zero on the axis
    th = np.linspace(0.1, 3.0, 7)
    inner = lamb.exact_stream((1.3 - 1e-9) * np.cos(th), (1.3 - 1e-9) * np.sin(th))
    outer = lamb.exact_stream((1.3 + 1e-9) * np.cos(th), (1.3 + 1e-9) * np.sin(th))
    np.testing.assert_allclose(inner, outer, atol=1e-8)
    assert np.all(lamb.exact_stream(np.linspace(-2, 2, 9), 0.0) == 0.0)


def test_natural_speeds():
    assert HillBall(3.0, 2.0).natural_speed() == pytest.approx(2 * 3.0 * 4.0 / 15)
    p = PatchPair.from_circulation(2.0, 1.5, 0.1)
    assert p.circulation == pytest.approx(2.0)
    assert p.natural_speed() == pytest.approx(2.0 / (4 * math.pi * 1.5))


@pytest.mark.parametrize("sigma", [0.05, 0.3, 0.8])
def test_gaussian_ring_circulation(sigma):
    g = GaussianRing(2.0, 1.0, sigma)
    a0, a1, b0, b1 = g.bbox()
    circ, _ = integrate.dblquad(lambda b, a: float(g.values(a, b)) * b, a0, a1, b0, b1,
                                epsabs=1e-12, epsrel=1e-10)
    # circulation of omega = r xi, half-plane r > 0
    assert circ == pytest.approx(2.0, rel=1e-7)


def test_gaussian_pair_circulation():
    g = GaussianPair(1.5, 0.5, 0.3)
    a0, a1, b0, b1 = g.bbox()
    circ, _ = integrate.dblquad(lambda b, a: float(g.values(a, b)), a0, a1, b0, b1,
                                epsabs=1e-12, epsrel=1e-10)
    assert circ == pytest.approx(1.5, rel=1e-7)


def test_gaussian_support_cutoff_relative_to_peak():
    g = GaussianRing(1.0, 1.0, 0.05)
    c = g.cut_radius
    assert g.values(0.0, 1.0 + 0.999 * c) > 0.0
    assert g.values(0.0, 1.0 + 1.001 * c) == 0.0
    assert g.values(0.0, 1.0 + 0.999 * c) / g.peak == pytest.approx(1e-14, rel=0.05)


# --------------------------------------------------------------- Steiner
@pytest.mark.parametrize("spec", [HillBall(), LambDipole(), PatchPair(1.0, 1.0, 0.3),
                                  GaussianRing(1.0, 1.0, 0.1), GaussianPair(1.0, 1.0, 0.2)])
def test_primitives_are_steiner_symmetric(spec):
    rep = check_steiner(spec)
    assert rep.is_symmetric
    assert spec.steiner_primitive


def test_shifted_grid_violates_steiner():
    a = np.linspace(-1.0, 1.0, 41)
    b = np.linspace(0.0, 1.0, 21)
    shifted = Gridded.from_function(lambda A, B: np.exp(-((A - 0.3) ** 2 + (B - 0.5) ** 2) / 0.05), a, b)
    rep = check_steiner(shifted)
    assert not rep.is_symmetric
    assert rep.evenness_violation > 0.1
    centred = Gridded.from_function(lambda A, B: np.exp(-(A**2 + (B - 0.5) ** 2) / 0.05), a, b)
    assert check_steiner(centred).is_symmetric


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, 3.0), st.floats(0.2, 3.0), st.floats(-2.0, 2.0), st.floats(0.0, 2.0))
def test_hill_values_even_and_monotone(A, R, a, b):
    h = HillBall(A, R)
    assert h.values(a, b) == h.values(-a, b)
    assert h.values(abs(a) * 1.1 + 1e-3, b) <= h.values(a, b)


# --------------------------------------------------------------- serialisation
def test_spec_dict_roundtrip():
    for spec in (HillBall(2.0, 0.5), LambDipole(1.0, 2.0), PatchPair(1.0, 2.0, 0.3),
                 GaussianRing(1.0, 1.0, 0.02), GaussianPair(1.0, 1.0, 0.1)):
        again = spec_from_dict(json.loads(spec_to_json(spec)))
        assert again == spec
    p = spec_from_dict({"kind": "PatchPair", "circulation": 1.0, "center_offset": 1.0, "patch_radius": 0.1})
    assert p.circulation == pytest.approx(1.0)
    with pytest.raises(SpecError):
        spec_from_dict({"kind": "Nope"})
    with pytest.raises(SpecError):
        spec_from_dict({"kind": "HillBall", "amplitude": float("nan")})


def test_gridded_csv_roundtrip(tmp_path):
    a = np.linspace(-1.0, 1.0, 5)
    b = np.linspace(0.0, 1.0, 4)
    g = Gridded.from_function(lambda A, B: 1.0 + A * A + B, a, b)
    path = tmp_path / "grid.csv"
    g.to_csv(path)
    back = Gridded.from_csv(path)
    np.testing.assert_array_equal(back.samples, g.samples)
    np.testing.assert_array_equal(back.a_grid, g.a_grid)
    via_dict = spec_from_dict({"kind": "Gridded", "csv": "grid.csv"}, base_dir=str(tmp_path))
    np.testing.assert_array_equal(via_dict.samples, g.samples)
    # bilinear interpolation reproduces bilinear data exactly
    assert back.values(0.0, 0.5) == pytest.approx(1.5)


def test_gridded_csv_must_fill_grid(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("z,r,value\n0,0,1\n1,0,1\n0,1,1\n")
    with pytest.raises(SpecError):
        Gridded.from_csv(path)


# --------------------------------------------------------------- steadiness
def test_hill_calibrates_to_classical_speed(hill):
    W, res = calibrate_speed(hill.tv.vorticity, hill.solver)
    assert W == pytest.approx(2.0 / 15.0, rel=1e-6)
    assert res < 1e-6


def test_lamb_calibrates_to_its_speed(lamb):
    W, res = calibrate_speed(lamb.tv.vorticity, lamb.solver)
    assert W == pytest.approx(1.0, rel=1e-6)
    assert res < 1e-6


def test_wrong_speed_has_large_residual(hill):
    assert steadiness_residual(hill.tv, hill.solver) < 1e-6
    assert steadiness_residual(hill.tv.with_speed(0.2), hill.solver) > 0.05


def test_scaling_multiplies_speed():
    tv = TravelingVortex(HillBall(1.0, 1.0), 2.0 / 15.0)
    big = tv.scaled(3.0)
    assert big.speed == pytest.approx(0.4)
    assert big.vorticity.amplitude == 3.0
