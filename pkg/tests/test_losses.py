import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mongenet import autodiff as ad
from mongenet import losses as L
from mongenet import networks as nw
from mongenet import problems as pb
from mongenet.autodiff import tape as T
from mongenet.domains import sample_collocation, sample_interior
from mongenet.errors import UsageError


def quad_field(a, b):
    return ad.Field(lambda x: a * x[:, 0] * x[:, 0] + b * x[:, 1] * x[:, 1], 2)


PTS = np.random.default_rng(0).uniform(size=(25, 2))


def test_equation_loss_of_quadratic_and_its_gradient():
    # det D^2 u = 4ab, so E_e = (4ab - 4)^2
    def loss(p):
        return L.equation_loss(quad_field(p[0], p[1]), PTS, np.full(len(PTS), 4.0))

    val, grad = ad.value_and_grad(loss, np.array([1.0, 2.0]))
    assert val == pytest.approx(16.0, rel=1e-14)
    np.testing.assert_allclose(grad, [64.0, 32.0], rtol=1e-13)


def test_exact_solution_has_zero_residual():
    prob = pb.catalog("radial2d")
    pts = sample_interior(prob.domain, 200, 1)
    assert L.equation_loss(prob.exact, pts, prob.source(pts)) < 1e-24
    bpts = np.array([[0.0, 0.3], [1.0, 0.5]])
    assert L.boundary_loss(prob.exact, bpts, prob.boundary(bpts)) == 0.0


def test_convexity_penalty():
    assert L.convexity_penalty(quad_field(1.0, 2.0), PTS) == 0.0
    # u_xx = -2, u_yy = 4
    assert L.convexity_penalty(quad_field(-1.0, 2.0), PTS) == pytest.approx(4.0)
    with pytest.raises(UsageError):
        L.convexity_penalty(ad.Field(lambda x: ad.sum(x * x), 3), np.zeros((2, 3)))


def test_positive_part_determinant_penalizes_nonconvexity():
    f = np.full(len(PTS), 4.0)
    concave = quad_field(-1.0, -1.0)      # det = 4 but not convex
    assert L.equation_loss(concave, PTS, f) == pytest.approx(0.0, abs=1e-20)
    assert L.equation_loss(concave, PTS, f, positive_det=True) == pytest.approx(16.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
def test_eigenvalues_2x2(h11, h12, h22):
    lo, hi = L.eigenvalues_2x2(h11, h12, h22)
    want = np.linalg.eigvalsh(np.array([[h11, h12], [h12, h22]]))
    scale = max(1.0, abs(h11), abs(h12), abs(h22))
    assert lo == pytest.approx(want[0], abs=1e-12 * scale)
    assert hi == pytest.approx(want[1], abs=1e-12 * scale)


def test_length_mismatch():
    with pytest.raises(UsageError):
        L.equation_loss(quad_field(1, 1), PTS, np.zeros(3))
    with pytest.raises(UsageError):
        L.boundary_loss(quad_field(1, 1), PTS, np.zeros(3))


def test_negative_weight_rejected():
    with pytest.raises(UsageError):
        L.LossSpec(boundary_weight=-1.0)


def _objective(spec, problem_name="blowup", n_hidden=(4, 4)):
    prob = pb.catalog(problem_name)
    col = sample_collocation(prob.domain, 40, 16, 0, prob.singular_segments)
    net_spec = nw.NetworkSpec.input_convex(prob.dim, n_hidden)
    targets = L.prepare_targets(col, prob, spec)
    return L.LossObjective(lambda r: nw.NetworkField(net_spec, r), targets, spec), net_spec


def test_total_is_weighted_sum():
    spec = L.LossSpec.method2_singular()
    obj, net_spec = _objective(spec)
    raw = nw.init_params(net_spec, 1).raw
    b = obj.breakdown(raw)
    assert b.total == pytest.approx(b.equation + 1000 * b.boundary + 4000 * b.singular, rel=1e-14)
    assert obj(raw)[0] == pytest.approx(b.total, rel=1e-14)


@pytest.mark.parametrize("spec", [L.LossSpec.method2(), L.LossSpec.method2_singular(),
                                  L.LossSpec(convexity_weight=10.0, boundary_weight=1.0)])
def test_parameter_gradient_matches_finite_differences(spec):
    obj, net_spec = _objective(spec)
    raw = nw.init_params(net_spec, 2).raw
    _, g = obj(raw)
    rng = np.random.default_rng(0)
    for k in rng.choice(len(raw), 12, replace=False):
        e = np.zeros_like(raw)
        e[k] = 1e-6
        fd = (obj(raw + e)[0] - obj(raw - e)[0]) / 2e-6
        assert g[k] == pytest.approx(fd, rel=1e-5, abs=1e-7 * max(1.0, abs(obj(raw)[0])))


def test_noise_only_touches_interior_targets():
    prob = pb.catalog("asym")
    col = sample_collocation(prob.domain, 30, 10, 0)
    spec = L.LossSpec.method2()
    noisy = pb.NoisySource(prob.source, 1.0, 0, col.interior).values()
    t = L.prepare_targets(col, prob, spec, noisy)
    clean = L.prepare_targets(col, prob, spec)
    assert not np.allclose(t.equation_values[:30], clean.equation_values[:30])
    assert np.array_equal(t.equation_values[30:], clean.equation_values[30:])


def test_boundary_points_join_equation_term_only_when_asked():
    prob = pb.catalog("radial2d")
    col = sample_collocation(prob.domain, 30, 10, 0)
    assert len(L.prepare_targets(col, prob, L.LossSpec.method2()).equation_points) == 40
    assert len(L.prepare_targets(col, prob, L.LossSpec.method1()).equation_points) == 30


def test_tape_terms_survive_breakdown_conversion():
    tape = ad.Tape()
    v = tape.variable(np.array(2.0))
    b = L.LossBreakdown(equation=T.square(v), total=T.square(v) + 1.0)
    assert b.as_floats().row() == [4.0, 0.0, 0.0, 0.0, 5.0]
