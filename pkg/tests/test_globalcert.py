import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nncert.errors import HypothesisError, NonIsolatedZeroError
from nncert.expr import Builder, evaluate, evaluate_jet, evaluate_many
from nncert.globalcert import (GlobalConfig, Region, build_cover, bump, find_zeros, global_certificate,
                               partition_of_unity, region_certificate)
from nncert.problem import Problem
from nncert.sampling import ball_samples, box_samples
from nncert.verify import is_structural_sos, residual


def test_find_zeros_worked_example(worked):
    Z = find_zeros(worked)
    assert len(Z) == 1
    np.testing.assert_allclose(Z.points[0], [1.0, 0.0], atol=1e-12)
    assert Z.completeness == "heuristic"
    assert Z.reports[0].passes


def test_find_zeros_constant_has_none():
    Z = find_zeros(Problem.from_strings(2, "1"))
    assert len(Z) == 0


def test_find_zeros_detects_zero_line():
    with pytest.raises(NonIsolatedZeroError) as info:
        find_zeros(Problem.from_strings(2, "x1^2"))
    assert info.value.exit_code == 5


def test_find_zeros_degenerate_but_isolated():
    with pytest.raises(HypothesisError) as info:
        find_zeros(Problem.from_strings(1, "x1^4"))
    assert info.value.exit_code == 3
    assert info.value.condition == "second-order sufficiency"


def test_find_zeros_refuses_negative():
    with pytest.raises(HypothesisError) as info:
        find_zeros(Problem.from_strings(2, "-x1^2"))
    assert info.value.condition == "nonnegativity"


def test_find_zeros_two_wells():
    Z = find_zeros(Problem.from_strings(2, "(x1^2 - 1)^2 + x2^2", box=([-2, -2], [2, 2])))
    np.testing.assert_allclose(Z.points, [[-1, 0], [1, 0]], atol=1e-12)


def test_user_asserted_zeros(worked):
    Z = find_zeros(worked, zeros=[[1.0, 0.0]])
    assert Z.completeness == "user-asserted" and len(Z) == 1


def test_user_asserted_nonzero_rejected(worked):
    with pytest.raises(HypothesisError):
        find_zeros(worked, zeros=[[1.0, 0.5]])


# cover -------------------------------------------------------------------


def kinds(regions):
    return [r.kind for r in regions]


def test_cover_worked_example(worked_global):
    assert kinds(worked_global.regions) == ["zero-ball", "positive", "neg-g"]


def test_cover_unconstrained():
    gc = global_certificate(Problem.from_strings(2, "x1^2 + x2^2"))
    assert kinds(gc.regions) == ["zero-ball", "positive"]


def test_cover_equality():
    gc = global_certificate(Problem.from_strings(2, "x1^2", h=["x2"]))
    assert kinds(gc.regions) == ["zero-ball", "positive", "nonzero-h"]


def test_single_positive_region_for_constant():
    gc = global_certificate(Problem.from_strings(2, "1"))
    assert kinds(gc.regions) == ["positive"]
    X = box_samples([-1, -1], [1, 1], 200)
    phi, _ = gc.evaluate(X)
    assert np.array_equal(phi[0], np.ones(200))


# region pieces ---------------------------------------------------------------


def region_values(problem, region, X):
    b = Builder(problem.n)
    xs = b.vars(problem.n)
    f = b.expr(problem.f, xs)
    region_certificate(b, problem, region, xs, f)
    prog = b.build()
    phi = [sum((evaluate(prog, s, X) ** 2 for s in region.factors[i]), np.zeros(len(X)))
           for i in range(problem.l + 1)]
    psi = [evaluate(prog, region.psi[j], X) if j in region.psi else np.zeros(len(X)) for j in range(problem.m)]
    return np.array(phi), np.array(psi).reshape(problem.m, len(X))


def test_neg_g_region_difference_of_squares(rng):
    problem = Problem.from_strings(2, "exp(x1)*x2^2 - x1", ["x1 - 1", "x2 + 3"])
    X = np.c_[rng.uniform(-2, 0.5, 300), rng.uniform(-1, 1, 300)]
    phi, _ = region_values(problem, Region("neg-g", 0, 0.1), X)
    f, G, _ = problem.values(X)
    assert np.max(np.abs(phi[0] + phi[1] * G[0] - f)) <= 1e-12 * np.max(1 + f**2)
    assert np.all(phi[2] == 0.0)


def test_nonzero_h_region_cancels(rng):
    problem = Problem.from_strings(2, "x1^2 + sin(x2)", h=["x2 - 2"])
    X = rng.uniform(-1, 1, (300, 2))
    phi, psi = region_values(problem, Region("nonzero-h", 0, 0.1), X)
    f, _, H = problem.values(X)
    np.testing.assert_allclose(psi[0] * H[0], f, rtol=1e-14, atol=1e-15)
    assert np.all(phi == 0.0)


def test_positive_region_is_f(rng):
    problem = Problem.from_strings(2, "x1^2 + 1")
    X = rng.uniform(-1, 1, (100, 2))
    phi, _ = region_values(problem, Region("positive", -1, 0.5), X)
    f, _, _ = problem.values(X)
    np.testing.assert_allclose(phi[0], f, rtol=1e-15)
    assert np.all(phi[0] >= 0.5)


# bumps and partition ---------------------------------------------------------------


def test_ball_bump_support():
    b = Builder(2)
    xs = b.vars(2)
    from nncert.globalcert import _ball_margin
    w = bump(b, _ball_margin(b, xs, [0.0, 0.0], 1.0), 3)
    prog = b.build()
    assert evaluate(prog, w, np.zeros((1, 2)))[0] == 1.0
    X = np.array([[1.0, 0.0], [0.8, 0.7], [2.0, 2.0]])
    assert np.all(evaluate(prog, w, X) == 0.0)


def test_ramp_bump_is_c2_at_boundary():
    b = Builder(1)
    w = bump(b, b.sub(b.var(0), b.const(0.5)), 3)
    prog = b.build()
    v, g, H = evaluate_jet(prog, w, np.array([[0.5], [0.5 - 1e-9], [0.5 + 1e-9]]))
    assert np.all(np.abs(g) <= 1e-17) and np.all(np.abs(H) <= 1e-8)
    v, g, H = evaluate_jet(prog, w, np.array([[1.5]]))
    assert v[0] == 1.0 and g[0, 0] == 3.0 and H[0, 0, 0] == 6.0


def test_partition_single_weight():
    b = Builder(1)
    (wn,) = partition_of_unity(b, [b.const(2.5)])
    assert np.all(evaluate(b.build(), wn, np.zeros((3, 1))) == 1.0)


def test_partition_equal_weights():
    b = Builder(1)
    w = b.add(b.var(0), b.const(2.0))
    w1, w2 = partition_of_unity(b, [w, w])
    V = evaluate_many(b.build(), [w1, w2], np.array([[0.3]]))
    np.testing.assert_allclose(V[:, 0] ** 2, [0.5, 0.5], rtol=1e-15)


@given(st.integers(1, 6), st.integers(0, 10**6))
def test_partition_normalization(k, seed):
    rng = np.random.default_rng(seed)
    b = Builder(2)
    xs = b.vars(2)
    weights = [b.ramp_power(b.affine_scalars(xs, rng.uniform(-1, 1, (1, 2)), [rng.uniform(0.1, 1)])[0], 3)
               for _ in range(k)]
    weights.append(b.const(1e-3))
    wn = partition_of_unity(b, weights)
    X = rng.uniform(-1, 1, (100, 2))
    W = evaluate_many(b.build(), wn, X)
    assert np.max(np.abs(np.sum(W**2, axis=0) - 1.0)) <= 1e-12


# glued certificate ---------------------------------------------------------------


def test_worked_global_residual(worked, worked_global):
    X = box_samples([-2, -2], [2, 2], 1000, seed=4)
    r, phi, _ = residual(worked, worked_global.certificate, X)
    assert np.max(np.abs(r)) <= 1e-6
    assert phi.min() >= -1e-14


def test_worked_global_equals_local_in_core(worked_global):
    X = ball_samples([1, 0], 0.3, 100)
    phi, _ = worked_global.evaluate(X)
    np.testing.assert_allclose(phi[0], X[:, 1] ** 2, atol=1e-9)
    np.testing.assert_allclose(phi[1], X[:, 0] + 1, atol=1e-9)


def test_unconstrained_quadratic_recovered():
    gc = global_certificate(Problem.from_strings(2, "x1^2 + x2^2"))
    X = box_samples([-1, -1], [1, 1], 1000)
    phi, _ = gc.evaluate(X)
    np.testing.assert_allclose(phi[0], np.sum(X**2, axis=1), atol=1e-9)


def test_support_discipline(worked_global):
    # far from the zero ball the local pieces are never evaluated, so no chart errors
    X = np.array([[-2.0, -2.0], [-2.0, 2.0], [2.0, 2.0], [-1.9, 0.0]])
    phi, _ = worked_global.evaluate(X)
    assert np.all(np.isfinite(phi))


def test_structural_sos_of_glued(worked_global):
    cert = worked_global.certificate
    for root in cert.phi:
        assert is_structural_sos(cert.program, root)


def test_complementarity_at_zeros(worked, worked_global):
    for x in worked_global.zeros.points:
        phi, _ = worked_global.evaluate(x[None, :])
        _, G, _ = worked.values(x[None, :])
        assert np.all(np.abs(phi[1:, 0] * G[:, 0]) <= 1e-8)


def test_f_star_shift():
    problem = Problem.from_strings(2, "x1^2 + x2^2 + 3")
    gc = global_certificate(problem, f_star=3.0)
    X = box_samples([-1, -1], [1, 1], 500)
    r, _, _ = residual(problem, gc.certificate, X)
    assert np.max(np.abs(r)) <= 1e-12
    assert gc.certificate.f_star == 3.0


def test_cover_reports_margins(worked_global):
    m = worked_global.margins
    assert m["delta_positive"] > 0 and m["delta_violation"] > 0
    assert m["radii"] == [1.0]


def test_build_cover_witness_for_missed_zero():
    from nncert.errors import CoverageError
    from nncert.globalcert import ZeroSet
    problem = Problem.from_strings(2, "x1^2 + x2^2")
    with pytest.raises(CoverageError) as info:
        build_cover(problem, ZeroSet(np.zeros((0, 2)), "user-asserted"), [], GlobalConfig(samples=257))
    assert info.value.exit_code == 4
