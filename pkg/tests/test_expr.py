import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from nncert.errors import DomainError, FormatError, ParseError
from nncert.expr import (Builder, compile_exprs, deserialize, eval_jet, evaluate, evaluate_jet, parse,
                         serialize, to_string)
from nncert.expr.ast import BinOp, Call, Const, Pow, Var
from nncert.expr.quadrature import gauss_legendre_01


# parsing ---------------------------------------------------------------


def test_parse_sum_of_power_and_product():
    e = parse("x1^2 + 2*x2", 2)
    assert e == BinOp("+", Pow(Var(0), 2), BinOp("*", Const(2), Var(1)))


def test_parse_function_call_product():
    e = parse("sin(x1)*x2", 2)
    assert e == BinOp("*", Call("sin", Var(0)), Var(1))


def test_parse_error_reports_offset():
    with pytest.raises(ParseError) as info:
        parse("x1 +", 1)
    assert "offset 4" in str(info.value)
    assert info.value.exit_code == 64


@pytest.mark.parametrize("text", ["x3", "y1 + 1", "foo(x1)", "x1^-1", "x1^1.5", "(x1", "x1 x2"])
def test_parse_rejects(text):
    with pytest.raises(ParseError):
        parse(text, 2)


@pytest.mark.parametrize("text", ["-x1^2", "(1/3)*x1 - (-2)", "x1 - (x2 - x1)", "x1*-x2",
                                  "exp(x1)/(1 + x2^2)", "sqrt(x1)*log(x2)"])
def test_print_parse_round_trip(text):
    e = parse(text, 2)
    assert parse(to_string(e), 2) == e
    assert to_string(parse(to_string(e), 2)) == to_string(e)


def test_named_variables():
    e = parse("a*b + a", 2, names=["a", "b"])
    assert to_string(e, ["a", "b"]) == "a*b + a"


@given(st.recursive(st.builds(Var, st.integers(0, 1)),
                    lambda ch: st.one_of(st.builds(BinOp, st.sampled_from("+-*/"), ch, ch),
                                         st.builds(Pow, ch, st.integers(0, 4)),
                                         st.builds(Call, st.sampled_from(["sin", "cos", "exp"]), ch)),
                    max_leaves=8))
def test_canonical_print_is_fixed_point(e):
    s = to_string(e)
    assert to_string(parse(s, 2)) == s


# jets ------------------------------------------------------------------


def test_jet_power_rule():
    j = eval_jet(parse("x1^2", 1), [3.0])
    assert j.value == 9.0
    np.testing.assert_array_equal(j.gradient, [6.0])
    np.testing.assert_array_equal(j.hessian, [[2.0]])


def test_jet_product_rule():
    j = eval_jet(parse("x1*x2", 2), [1.0, 2.0])
    assert j.value == 2.0
    np.testing.assert_array_equal(j.gradient, [2.0, 1.0])
    np.testing.assert_array_equal(j.hessian, [[0.0, 1.0], [1.0, 0.0]])


def fd_jet(fun, x, h):
    """Central finite-difference gradient and Hessian (the derivative oracle)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    E = np.eye(n) * h
    g = np.array([(fun(x + E[i]) - fun(x - E[i])) / (2 * h) for i in range(n)])
    H = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            H[i, j] = (fun(x + E[i] + E[j]) - fun(x + E[i] - E[j]) - fun(x - E[i] + E[j])
                       + fun(x - E[i] - E[j])) / (4 * h * h)
    return g, H


def test_jet_matches_finite_differences_sin_exp():
    e = parse("sin(x1)*exp(x2)", 2)
    p, (root,) = compile_exprs([e], 2)
    fun = lambda x: float(evaluate(p, root, x))  # noqa: E731
    j = eval_jet(e, [0.3, 0.1])
    g, H = fd_jet(fun, [0.3, 0.1], 1e-5)
    np.testing.assert_allclose(j.gradient, g, rtol=1e-6)
    np.testing.assert_allclose(j.hessian, H, rtol=1e-4, atol=1e-6)
    # closed form
    np.testing.assert_allclose(j.gradient, [math.cos(0.3) * math.exp(0.1), math.sin(0.3) * math.exp(0.1)])


smooth = st.recursive(
    st.one_of(st.builds(Var, st.integers(0, 1)), st.builds(lambda k: Const(k), st.integers(1, 3))),
    lambda ch: st.one_of(st.builds(BinOp, st.sampled_from("+-*"), ch, ch),
                         st.builds(Pow, ch, st.integers(0, 3)),
                         st.builds(Call, st.sampled_from(["sin", "cos"]), ch)),
    max_leaves=6)


@given(smooth, st.floats(-1, 1), st.floats(-1, 1))
def test_jet_agrees_with_finite_differences(e, a, b):
    h = 1e-3
    p, (root,) = compile_exprs([e], 2)
    fun = lambda x: float(evaluate(p, root, x))  # noqa: E731
    j = eval_jet(e, [a, b])
    g, H = fd_jet(fun, [a, b], h)
    # O(h^2) truncation error, scaled by the size of the function's derivatives
    scale = 1.0 + np.max(np.abs(j.hessian)) + np.max(np.abs(j.gradient)) + abs(j.value)
    assume(scale < 1e3)
    np.testing.assert_allclose(j.gradient, g, atol=100 * h * h * scale)
    np.testing.assert_allclose(j.hessian, H, atol=100 * h * h * scale + 1e-6 * scale)
    np.testing.assert_allclose(j.hessian, j.hessian.T, atol=1e-12 * scale)


@pytest.mark.parametrize("text,x", [("log(x1)", [0.0]), ("sqrt(x1)", [-1.0]), ("1/x1", [0.0])])
def test_domain_errors_raise(text, x):
    with pytest.raises(DomainError):
        eval_jet(parse(text, 1), x)


# quadrature --------------------------------------------------------------


@given(st.integers(1, 12), st.data())
def test_gauss_legendre_exact_for_polynomials(q, data):
    s, w = gauss_legendre_01(q)
    deg = data.draw(st.integers(0, 2 * q - 1))
    assert abs(np.sum(w * s**deg) - 1.0 / (deg + 1)) <= 1e-12


def test_quadrature_node_integrates_body():
    b = Builder(1)
    t, s = b.var(0), b.var(1)
    body = b.mul(b.const(3.0), b.mul(t, t))  # integrand 3 (s t)^2 after scaling
    q = b.quadrature([t], [body], [0], 8)
    p = b.build()
    X = np.linspace(-2, 2, 7)[:, None]
    np.testing.assert_allclose(evaluate(p, q, X), X[:, 0] ** 2, atol=1e-13)
    del s


def test_quadrature_jet_differentiates_under_integral():
    b = Builder(1)
    t = b.var(0)
    body = b.func("cos", b.mul(t, b.const(1.0)))
    q = b.quadrature([t], [body], [0], 32)  # sin(t)/t
    p = b.build()
    v, g, H = evaluate_jet(p, q, np.array([[0.5]]))
    x = 0.5
    np.testing.assert_allclose(v[0], math.sin(x) / x, atol=1e-14)
    np.testing.assert_allclose(g[0, 0], (x * math.cos(x) - math.sin(x)) / x**2, atol=1e-13)
    d2 = -math.sin(x) / x - 2 * math.cos(x) / x**2 + 2 * math.sin(x) / x**3
    np.testing.assert_allclose(H[0, 0, 0], d2, atol=1e-12)


# serialization --------------------------------------------------------------


def test_serialize_constant_round_trip():
    b = Builder(1)
    c = b.const(1.5)
    p = b.build({"phi": [c]})
    q = deserialize(serialize(p))
    assert q.nodes == p.nodes
    assert evaluate(q, c, np.zeros((1, 1))) == 1.5


def test_serialize_quadrature_round_trip_bitwise():
    b = Builder(2)
    x = b.vars(2)
    body = b.mul(b.func("exp", x[0]), b.var(2))
    q = b.quadrature(x, [body], [0], 16)
    p = b.build({"phi": [q]})
    data = serialize(p)
    p2 = deserialize(data)
    assert p2.nodes == p.nodes
    assert serialize(p2) == data


def test_deserialized_program_evaluates_identically(rng):
    e = [parse("sin(x1)*x2^3 - exp(x2)/(2 + x1^2)", 2)]
    p, roots = compile_exprs(e, 2)
    p2 = deserialize(serialize(p))
    X = rng.uniform(-2, 2, size=(100, 2))
    assert np.array_equal(evaluate(p, roots[0], X), evaluate(p2, roots[0], X))


def test_truncated_node_table_is_rejected():
    p, _ = compile_exprs([parse("x1^2 + x2", 2)], 2)
    import json
    d = json.loads(serialize(p))
    d["nodes"] = d["nodes"][:-2]
    with pytest.raises(FormatError):
        deserialize(json.dumps(d))


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(version=99),
    lambda d: d["nodes"][0].update(kind="teleport"),
    lambda d: d.update(nodes="none"),
])
def test_malformed_payloads(mutate):
    import json
    p, _ = compile_exprs([parse("x1 + 1", 1)], 1)
    d = json.loads(serialize(p))
    mutate(d)
    with pytest.raises(FormatError):
        deserialize(json.dumps(d))


def test_garbage_bytes_rejected():
    with pytest.raises(FormatError):
        deserialize(b"{not json")


# composite nodes --------------------------------------------------------------


def test_guarded_mul_skips_weightless_points():
    b = Builder(1)
    x = b.var(0)
    w = b.ramp_power(x, 3)
    a = b.func("log", x)  # undefined where x <= 0, which is where w = 0
    p = b.build()
    g = Builder(1, p)
    r = g.guarded_mul(w, a)
    X = np.array([[-1.0], [0.0], [2.0]])
    out = evaluate(g.build(), r, X)
    np.testing.assert_allclose(out, [0.0, 0.0, 8.0 * math.log(2.0)])


def test_chart_inverse_closed_form():
    # Phi(x) = (x1, x2 - x1^2), inverse (t1, t2 + t1^2)
    b = Builder(2)
    xs = b.vars(2)
    comps = [xs[0], b.sub(xs[1], b.mul(xs[0], xs[0]))]
    cid = b.add_chart([0.0, 0.0], np.eye(2), comps)
    inv = b.chart_inverse(cid, b.vars(2))
    p = b.build()
    T = np.array([[0.3, -0.2], [-0.5, 0.4]])
    X = evaluate(p, inv, T)
    np.testing.assert_allclose(X, np.c_[T[:, 0], T[:, 1] + T[:, 0] ** 2], atol=1e-12)
    second = b.select(inv, 1)
    v, g, H = evaluate_jet(b.build(), second, T[:1])
    # d/dt of t2 + t1^2
    np.testing.assert_allclose(g[0], [2 * 0.3, 1.0], atol=1e-12)
    np.testing.assert_allclose(H[0], [[2.0, 0.0], [0.0, 0.0]], atol=1e-10)
