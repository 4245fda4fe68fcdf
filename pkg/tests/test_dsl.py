import numpy as np
import pytest

from gradlocus import DomainError, ParseError, differentiate, parse_expression
from gradlocus.dsl import (Add, Call, Const, Div, Jet2, Mul, Neg, Pow, Sub,
                           Var, _eval, evaluate, gradient, hessian,
                           linear_combination, max_var_index)

from oracles import central_gradient, random_points, random_smooth


class TestParser:
    def test_sum_of_squares(self):
        assert parse_expression("x1^2 + x2^2", 2) == \
            Add(Pow(Var(1), 2), Pow(Var(2), 2))

    def test_variable_index_beyond_dimension(self):
        with pytest.raises(ParseError) as err:
            parse_expression("sin(x1)*x3", 2)
        assert "3" in str(err.value)

    def test_parenthesized_product(self):
        assert parse_expression("(x1*x2 - 1)", 2) == \
            Sub(Mul(Var(1), Var(2)), Const(1.0))

    def test_precedence_power_over_unary_minus(self):
        assert parse_expression("-x1^2", 1) == Neg(Pow(Var(1), 2))

    def test_precedence_mul_over_add(self):
        assert parse_expression("1 + 2*x1", 1) == \
            Add(Const(1.0), Mul(Const(2.0), Var(1)))

    def test_left_associativity(self):
        assert parse_expression("x1 - x1 - x1", 1) == \
            Sub(Sub(Var(1), Var(1)), Var(1))
        assert parse_expression("x1 / x1 / x1", 1) == \
            Div(Div(Var(1), Var(1)), Var(1))

    def test_function_application(self):
        assert parse_expression("exp(log(x1))", 1) == \
            Call("exp", Call("log", Var(1)))

    def test_scientific_literals(self):
        assert parse_expression("1e-05 + .5", 1) == \
            Add(Const(1e-05), Const(0.5))

    def test_negative_exponent(self):
        assert parse_expression("x1^-2", 1) == Pow(Var(1), -2)

    def test_unknown_identifier(self):
        with pytest.raises(ParseError, match="unknown identifier"):
            parse_expression("tan(x1)", 1)
        with pytest.raises(ParseError, match="unknown identifier"):
            parse_expression("x0 + 1", 1)

    def test_syntax_error_carries_position(self):
        with pytest.raises(ParseError) as err:
            parse_expression("x1 + ", 1)
        assert err.value.position == 5
        with pytest.raises(ParseError) as err:
            parse_expression("x1 @ x1", 1)
        assert err.value.position == 3

    def test_fractional_exponent_rejected(self):
        with pytest.raises(ParseError, match="integer exponent"):
            parse_expression("x1^2.5", 1)

    def test_trailing_tokens_rejected(self):
        with pytest.raises(ParseError):
            parse_expression("x1 x1", 1)
        with pytest.raises(ParseError):
            parse_expression("x1^2^3", 1)


class TestRoundTrip:
    CORPUS = [
        "x1^2 + x2^2",
        "(x1 * x2 - 1) / (1.0 + x2^2)",
        "-x1^2 - -x2",
        "sin(x1) * cos(x2) - exp(x1 - x2)",
        "log(2.0 + x1^2) / x2^3",
        "1e-05 * x1 - 0.5",
        "x1 - (x2 - x1)",
        "x1 / (x2 / x1)",
        "(-x1)^2",
    ]

    def test_corpus(self):
        for text in self.CORPUS:
            first = parse_expression(text, 2)
            assert parse_expression(str(first), 2) == first, text

    def test_random_trees(self):
        rng = np.random.default_rng(21)
        for _ in range(200):
            tree = random_smooth(rng, 3, depth=4)
            assert parse_expression(str(tree), 3) == tree, str(tree)


class TestEvaluate:
    def test_basic_values(self):
        e = parse_expression("x1^2 + x2^2", 2)
        assert evaluate(e, [1.0, 2.0]) == 5.0

    def test_batched_matches_pointwise(self):
        rng = np.random.default_rng(22)
        for _ in range(20):
            e = random_smooth(rng, 2, depth=3)
            X = random_points(rng, 10, 2)
            batch = evaluate(e, X)
            for i in range(10):
                assert batch[i] == pytest.approx(evaluate(e, X[i]), rel=1e-14)

    def test_division_by_zero(self):
        e = parse_expression("1 / x1", 1)
        with pytest.raises(DomainError) as err:
            evaluate(e, [0.0])
        assert "1.0 / x1" in str(err.value)

    def test_log_of_nonpositive(self):
        e = parse_expression("log(x1)", 1)
        with pytest.raises(DomainError):
            evaluate(e, [0.0])
        with pytest.raises(DomainError):
            evaluate(e, [-1.0])

    def test_zero_base_negative_exponent(self):
        e = parse_expression("x1^-1", 1)
        with pytest.raises(DomainError):
            evaluate(e, [0.0])

    def test_overflow_surfaces_as_domain_error(self):
        e = parse_expression("exp(exp(x1))", 1)
        with pytest.raises(DomainError):
            evaluate(e, [100.0])

    def test_constant_expression_broadcasts(self):
        e = parse_expression("2.5", 3)
        out = evaluate(e, np.zeros((4, 3)))
        assert np.array_equal(out, np.full(4, 2.5))


class TestDerivatives:
    def test_sum_of_squares(self):
        e = parse_expression("x1^2 + x2^2", 2)
        assert np.allclose(gradient(e, [1.0, 2.0]), [2.0, 4.0])
        assert np.allclose(hessian(e, [1.0, 2.0]), 2 * np.eye(2))

    def test_sin_product(self):
        e = parse_expression("sin(x1) * x2", 2)
        g = gradient(e, [0.0, 3.0])
        assert np.allclose(g, [3.0, 0.0])
        fd = central_gradient(lambda x: evaluate(e, x), np.array([0.0, 3.0]))
        assert np.allclose(g, fd, atol=1e-9)

    def test_against_central_differences(self):
        rng = np.random.default_rng(23)
        checked = 0
        while checked < 50:
            e = random_smooth(rng, 3, depth=3)
            x = rng.uniform(-1.5, 1.5, size=3)
            try:
                g = gradient(e, x)
            except DomainError:
                continue
            fd = central_gradient(lambda p: evaluate(e, p), x)
            scale = 1.0 + np.abs(g).max()
            assert np.abs(g - fd).max() <= 1e-6 * scale, str(e)
            checked += 1

    def test_hessian_against_gradient_differences(self):
        rng = np.random.default_rng(24)
        checked = 0
        while checked < 25:
            e = random_smooth(rng, 2, depth=3)
            x = rng.uniform(-1.5, 1.5, size=2)
            try:
                H = hessian(e, x)
            except DomainError:
                continue
            fd = np.column_stack([
                central_gradient(lambda p, i=i: gradient(e, p)[i], x)
                for i in range(2)
            ])
            scale = 1.0 + np.abs(H).max()
            assert np.abs(H - 0.5 * (fd + fd.T)).max() <= 1e-5 * scale
            checked += 1

    def test_raw_hessian_is_exactly_symmetric(self):
        # white box: the Jet2 rules only combine symmetric outer pairs
        rng = np.random.default_rng(25)
        for _ in range(50):
            e = random_smooth(rng, 3, depth=3)
            X = random_points(rng, 5, 3)
            seeds = []
            for i in range(3):
                g = np.zeros((5, 3))
                g[:, i] = 1.0
                seeds.append(Jet2(X[:, i], g, np.zeros((5, 3, 3))))
            try:
                with np.errstate(all="ignore"):
                    out = _eval(e, seeds)
            except DomainError:
                continue
            if isinstance(out, Jet2):
                skew = np.abs(out.hess - out.hess.transpose(0, 2, 1)).max()
                assert skew <= 1e-12 * (1.0 + np.abs(out.hess).max())

    def test_batched_derivatives_match_single(self):
        rng = np.random.default_rng(26)
        e = parse_expression("sin(x1 * x2) + x1^3 / (1.0 + x2^2)", 2)
        X = random_points(rng, 8, 2)
        G = gradient(e, X)
        H = hessian(e, X)
        for i in range(8):
            assert np.allclose(G[i], gradient(e, X[i]))
            assert np.allclose(H[i], hessian(e, X[i]))


class TestSymbolic:
    def test_differentiate_matches_ad(self):
        rng = np.random.default_rng(27)
        for _ in range(30):
            e = random_smooth(rng, 2, depth=3)
            x = rng.uniform(-1.5, 1.5, size=2)
            try:
                g = gradient(e, x)
                d1 = evaluate(differentiate(e, 1), x)
                d2 = evaluate(differentiate(e, 2), x)
            except DomainError:
                continue
            assert np.allclose([d1, d2], g, rtol=1e-10, atol=1e-10)

    def test_linear_combination_folds(self):
        terms = [Var(1), Var(2), Var(3)]
        out = linear_combination([0.0, 1.0, -1.0], terms)
        assert out == Sub(Var(2), Var(3))
        assert linear_combination([0.0, 0.0, 0.0], terms) == Const(0.0)

    def test_max_var_index(self):
        e = parse_expression("x1 + sin(x3) * x2", 3)
        assert max_var_index(e) == 3
        assert max_var_index(Const(1.0)) == 0
