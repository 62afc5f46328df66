"""Expression engine: parsing, printing, differentiation, evaluation."""

import math
from fractions import Fraction

import numpy as np
import pytest

import concirc.expressions as ex

COORDS = ("x", "y", "z")


def _random_expr(rng, depth=4):
    """Random expression over COORDS, biased toward well-behaved values."""
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.4:
            return ex.const(Fraction(int(rng.integers(-6, 7)), int(rng.integers(1, 5))))
        return ex.var(str(rng.choice(COORDS)))
    op = rng.choice(["add", "sub", "mul", "div", "pow", "neg", "fn"])
    a = _random_expr(rng, depth - 1)
    if op == "neg":
        return ex.neg(a)
    if op == "fn":
        name = rng.choice(["sin", "cos", "exp", "sinh", "cosh", "tan"])
        return ex.func(str(name), a)
    b = _random_expr(rng, depth - 1)
    if op == "add":
        return ex.add(a, b)
    if op == "sub":
        return ex.sub(a, b)
    if op == "mul":
        return ex.mul(a, b)
    if op == "div":
        # keep denominators bounded away from zero
        return ex.div(a, ex.add(ex.const(3), ex.mul(ex.sin(b), ex.sin(b))))
    return ex.pow_(a, ex.const(int(rng.integers(0, 4))))


def _random_point(rng):
    return {c: float(rng.uniform(0.3, 1.7)) for c in COORDS}


def test_interning_gives_identical_nodes():
    a = ex.parse("sin(x) + y^2", COORDS)
    b = ex.parse("sin(x) + y^2", COORDS)
    assert a is b
    assert ex.add(ex.var("x"), ex.ONE) is ex.add(ex.var("x"), ex.ONE)


def test_operator_overloads_match_factories():
    x, y = ex.var("x"), ex.var("y")
    assert x + y is ex.add(x, y)
    assert x - y is ex.sub(x, y)
    assert x * y is ex.mul(x, y)
    assert x / y is ex.div(x, y)
    assert x ** 2 is ex.pow_(x, ex.const(2))
    assert -x is ex.neg(x)
    assert 1 + x is ex.add(ex.ONE, x)


def test_constant_folding_is_exact():
    e = ex.parse("1/3 + 1/6", COORDS)
    assert e is ex.const(Fraction(1, 2))
    assert ex.parse("2*3", COORDS) is ex.const(6)
    assert ex.parse("2^10", COORDS) is ex.const(1024)


def test_identity_folds():
    x = ex.var("x")
    assert ex.add(x, ex.ZERO) is x
    assert ex.mul(x, ex.ONE) is x
    assert ex.mul(x, ex.ZERO) is ex.ZERO
    assert ex.sub(x, x) is ex.ZERO
    assert ex.pow_(x, ex.ONE) is x


def test_print_parse_round_trip_random():
    rng = np.random.default_rng(7)
    for _ in range(300):
        e = _random_expr(rng)
        s = ex.to_string(e)
        assert ex.parse(s, COORDS) is e, s


def test_print_parse_round_trip_handpicked():
    cases = [
        "x + y*z",
        "(x + y)*z",
        "x - (y - z)",
        "x/y/z",
        "x^2^3",
        "-x^2",
        "(-x)^2",
        "2*sin(x)*cos(y) - exp(-z)",
        "1/2*x",
        "cot(x) + sinh(y)*cosh(z)",
        "sqrt(x^2 + 1)",
        "abs(x - y)",
    ]
    for s in cases:
        e = ex.parse(s, COORDS)
        assert ex.parse(ex.to_string(e), COORDS) is e, s


def test_parse_errors_carry_position():
    with pytest.raises(ex.ParseError) as err:
        ex.parse("x + * y", COORDS)
    assert err.value.position == 4

    with pytest.raises(ex.ParseError) as err:
        ex.parse("(x + y", COORDS)
    assert "(" in str(err.value) or "closing" in str(err.value)

    with pytest.raises(ex.ParseError) as err:
        ex.parse("x + y)", COORDS)
    assert err.value.position == 5

    with pytest.raises(ex.UnknownIdentifierError) as err:
        ex.parse("x + q", COORDS)
    assert err.value.name == "q"
    assert err.value.position == 4

    with pytest.raises(ex.UnknownIdentifierError):
        ex.parse("foo(x)", COORDS)

    with pytest.raises(ex.ParseError):
        ex.parse("", COORDS)

    with pytest.raises(ex.ParseError):
        ex.parse("sin x", COORDS)


def test_variables_and_node_count():
    e = ex.parse("sin(x)*y + sin(x)", COORDS)
    assert ex.variables(e) == frozenset({"x", "y"})
    assert ex.variables(ex.const(5)) == frozenset()
    assert ex.node_count(ex.var("x")) == 1
    # shared subtrees are counted once per distinct node
    assert ex.node_count(e) <= 7


def test_evaluate_known_values():
    e = ex.parse("sin(x)^2 + cos(x)^2", COORDS)
    v = ex.evaluate(e, {"x": 0.37, "y": 0.0, "z": 0.0})
    np.testing.assert_allclose(v, 1.0, rtol=0, atol=1e-15)
    e = ex.parse("exp(ln(x))", COORDS)
    np.testing.assert_allclose(ex.evaluate(e, {"x": 2.5}), 2.5, rtol=1e-15)


def test_evaluate_domain_errors():
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse("1/x", COORDS), {"x": 0.0})
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse("ln(x)", COORDS), {"x": -1.0})
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse("sqrt(x)", COORDS), {"x": -4.0})
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse("x^(1/2)", COORDS), {"x": -4.0})
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse("cot(x)", COORDS), {"x": 0.0})
    # missing coordinate
    with pytest.raises(ex.DomainError):
        ex.evaluate(ex.parse("x + y", COORDS), {"x": 1.0})


def test_domain_error_names_subexpression():
    e = ex.parse("1 + ln(x - 2)", COORDS)
    with pytest.raises(ex.DomainError) as err:
        ex.evaluate(e, {"x": 1.0})
    assert "ln" in str(err.value)


def test_differentiate_basic_rules():
    x = ex.var("x")
    assert ex.differentiate(ex.sin(x), "x") is ex.cos(x)
    assert ex.differentiate(x * x, "y") is ex.ZERO
    assert ex.differentiate(ex.const(7), "x") is ex.ZERO
    d = ex.differentiate(ex.parse("x^3", COORDS), "x")
    np.testing.assert_allclose(ex.evaluate(d, {"x": 2.0}), 12.0, rtol=1e-15)


def test_differentiate_matches_dual_oracle():
    """Symbolic derivative against forward-mode dual numbers, 1000 samples."""
    rng = np.random.default_rng(20260814)
    checked = 0
    while checked < 1000:
        e = _random_expr(rng)
        names = sorted(ex.variables(e))
        if not names:
            continue
        point = _random_point(rng)
        name = str(rng.choice(names))
        d = ex.differentiate(e, name)
        try:
            sym = ex.evaluate(d, point)
            dual = ex.evaluate_dual(e, point, {name: 1.0})
        except ex.DomainError:
            continue
        if not (math.isfinite(sym) and math.isfinite(dual.deriv)):
            continue
        if max(abs(sym), abs(dual.deriv)) > 1e6:
            continue  # ill-conditioned sample, relative error meaningless
        assert abs(sym - dual.deriv) <= 1e-12 * (1.0 + abs(dual.deriv)), (
            ex.to_string(e),
            name,
            point,
        )
        checked += 1


def test_dual_value_arithmetic():
    e = ex.parse("x^2 * y", COORDS)
    out = ex.evaluate_dual(e, {"x": 3.0, "y": 5.0}, {"x": 1.0})
    np.testing.assert_allclose(out.value, 45.0, rtol=1e-15)
    np.testing.assert_allclose(out.deriv, 30.0, rtol=1e-15)
    # direction with two active components: derivative is the directional one
    out = ex.evaluate_dual(e, {"x": 3.0, "y": 5.0}, {"x": 1.0, "y": 2.0})
    np.testing.assert_allclose(out.deriv, 30.0 + 9.0 * 2.0, rtol=1e-15)


def test_simplify_preserves_value():
    rng = np.random.default_rng(11)
    for _ in range(200):
        e = _random_expr(rng)
        s = ex.simplify(e)
        for _ in range(3):
            point = _random_point(rng)
            try:
                v0 = ex.evaluate(e, point)
                v1 = ex.evaluate(s, point)
            except ex.DomainError:
                continue
            if not (math.isfinite(v0) and math.isfinite(v1)):
                continue
            assert abs(v0 - v1) <= 1e-10 * (1.0 + abs(v0)), ex.to_string(e)


def test_simplify_cancels_structurally():
    e = ex.parse("sin(x)*y - y*sin(x)", COORDS)
    assert ex.simplify(e) is ex.ZERO
    e = ex.parse("(x + y) - x - y", COORDS)
    assert ex.simplify(e) is ex.ZERO
    e = ex.parse("2*x + 3*x", COORDS)
    assert ex.simplify(e) is ex.simplify(ex.parse("5*x", COORDS))
    e = ex.parse("x*y/x", COORDS)
    assert ex.simplify(e) is ex.var("y")


def test_simplify_is_idempotent():
    rng = np.random.default_rng(23)
    for _ in range(100):
        s = ex.simplify(_random_expr(rng))
        assert ex.simplify(s) is s


def test_evaluate_block_matches_scalar_evaluate():
    rng = np.random.default_rng(3)
    exprs = [_random_expr(rng) for _ in range(10)]
    pts = [_random_point(rng) for _ in range(6)]
    columns = {c: np.array([p[c] for p in pts]) for c in COORDS}
    blocks = ex.evaluate_block(exprs, columns)
    for e, col in zip(exprs, blocks):
        assert col.shape == (6,)
        for i, p in enumerate(pts):
            try:
                v = ex.evaluate(e, p)
            except ex.DomainError:
                continue
            np.testing.assert_allclose(col[i], v, rtol=1e-12, atol=1e-300)


def test_evaluate_block_rejects_domain_violation():
    with pytest.raises(ex.DomainError):
        ex.evaluate_block([ex.parse("1/x", COORDS)], {"x": np.array([1.0, 0.0])})


def test_esum_builds_balanced_sums():
    xs = [ex.var("x")] * 5
    e = ex.esum(xs)
    np.testing.assert_allclose(ex.evaluate(e, {"x": 2.0}), 10.0, rtol=1e-15)
    assert ex.esum([]) is ex.ZERO
