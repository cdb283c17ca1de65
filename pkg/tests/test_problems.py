import math

import numpy as np
import pytest
import sympy as sp

from mongenet import autodiff as ad
from mongenet import problems as pb
from mongenet.domains import sample_interior
from mongenet.errors import UsageError


@pytest.mark.parametrize("name", ["radial2d", "blowup", "sphere", "discont"])
def test_derived_source_matches_closed_form(name):
    prob = pb.catalog(name)
    pts = sample_interior(prob.domain, 1000, 21)
    if name == "discont":
        # keep away from the circle where the source jumps
        r = np.hypot(pts[:, 0], pts[:, 1])
        pts = pts[np.abs(r - 1.0) > 1e-3]
    derived = pb.derived_sources(prob.exact, pts)
    closed = pb.CLOSED_FORM_SOURCES[name](pts)
    np.testing.assert_allclose(derived, closed, rtol=1e-9, atol=1e-12)


def test_asym_source_matches_sympy():
    x, y = sp.symbols("x y")
    u = sp.Rational(7, 10) * sp.exp(sp.Rational(1, 2) * (x - sp.Rational(1, 2)) ** 2 + y ** 2) \
        + x ** 2 - sp.Rational(1, 2)
    f = sp.diff(u, x, 2) * sp.diff(u, y, 2) - sp.diff(u, x, y) ** 2
    for px, py in [(0.3, 0.4), (0.1, 0.8), (0.6, 0.2)]:
        want = float(f.subs({x: px, y: py}).evalf(30))
        assert pb.derived_source(pb.catalog("asym").exact, np.array([px, py])) == \
            pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_radial_source_in_higher_dimensions(n):
    prob = pb.catalog(f"radial{n}d")
    pts = sample_interior(prob.domain, 200, n)
    np.testing.assert_allclose(prob.source(pts), pb.radial_f(pts), rtol=1e-10)
    assert prob.source(np.zeros((1, n)))[0] == pytest.approx(1.0, rel=1e-14)


def test_sphere_source_at_origin():
    assert pb.derived_source(pb.catalog("sphere").exact, np.zeros(2)) == pytest.approx(0.5)


def test_discont_profile_is_c1_at_unit_circle():
    u_in, du_in = pb.radial_check_discont(1.0)
    u_out, du_out = pb.radial_check_discont(1.0 + 1e-13)
    assert abs(u_out - u_in) <= 1e-12 and abs(du_out - du_in) <= 1e-6
    r = math.sqrt(2.0)
    u, du = pb.radial_check_discont(r)
    assert u == pytest.approx(r - math.log(r + 1.0), rel=1e-14)
    assert du == pytest.approx(2.0, rel=1e-14)


def test_discont_field_matches_profile():
    prob = pb.catalog("discont")
    pts = np.array([[0.3, 0.2], [1.0, 1.0], [1.2, 0.4]])
    want = [pb.radial_check_discont(np.hypot(*p))[0] for p in pts]
    np.testing.assert_allclose(prob.exact(pts), want, rtol=1e-14, atol=0)


def test_boundary_equals_exact():
    prob = pb.catalog("blowup")
    pts = np.array([[0.0, 0.5], [1.0, 0.3]])
    np.testing.assert_array_equal(prob.boundary(pts), prob.exact(pts))


def test_singular_segments():
    assert len(pb.catalog("blowup").singular_segments) == 2
    assert pb.catalog("radial2d").singular_segments == ()


def test_unknown_problem():
    with pytest.raises(UsageError):
        pb.catalog("heat")


def test_noise_is_frozen_per_index():
    pts = np.random.default_rng(0).uniform(size=(50, 2))
    src = pb.NoisySource(pb.radial_f, 0.1, 3, pts)
    again = pb.NoisySource(pb.radial_f, 0.1, 3, pts)
    assert np.array_equal(src.values(), again.values())
    assert pb.apply_noise(src, 7) == src.values()[7]
    clean = pb.NoisySource(pb.radial_f, 0.0, 3, pts)
    np.testing.assert_array_equal(clean.values(), pb.radial_f(pts))
    with pytest.raises(IndexError):
        pb.apply_noise(src, 50)


def test_noise_statistics():
    pts = np.random.default_rng(0).uniform(size=(20000, 2))
    src = pb.NoisySource(pb.radial_f, 0.5, 11, pts)
    d = src.values() - pb.radial_f(pts)
    # sample mean and sd of 20000 normal draws
    assert abs(d.mean()) < 4 * 0.5 / math.sqrt(20000)
    assert d.std() == pytest.approx(0.5, rel=0.03)


def test_exact_solution_is_convex():
    prob = pb.catalog("asym")
    pts = sample_interior(prob.domain, 300, 2)
    _, _, upper = ad.eval_jets(prob.exact, pts)
    assert np.all(upper[0] > 0) and np.all(upper[2] > 0)
    assert np.all(ad.det_upper(upper, 2) > 0)
