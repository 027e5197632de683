"""Exact sparse calculus: derivatives, evaluation, homogeneity."""

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from vega.polycore import (
    QC,
    HomogeneousPotential,
    PoleAtPoint,
    Poly,
    RatFunc,
    derivative_tensor,
    euler_check,
    evaluate,
    exact_sqrt_qc,
    grlex_key,
    mi_add,
    multi_indices,
    partial_derivative,
    random_rational_points,
)


def rat(a, b=1):
    return QC(Fraction(a, b))


def poly(n, terms):
    return Poly(n, {m: rat(c) if isinstance(c, int) else c for m, c in terms.items()})


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------


def test_qc_field_operations():
    a = QC(Fraction(3, 4), Fraction(-1, 2))
    b = QC(Fraction(1, 3), Fraction(2))
    assert (a * b) / b == a
    assert a + (-a) == QC(0)
    assert (a / b) * b - a == QC(0)
    assert a.conjugate().conjugate() == a


def test_qc_no_silent_float_mixing():
    with pytest.raises(TypeError):
        QC(1) + 0.5
    with pytest.raises(TypeError):
        QC(1) * (1 + 2j)


def test_exact_sqrt_gaussian():
    assert exact_sqrt_qc(QC(4)) == QC(2)
    assert exact_sqrt_qc(QC(-9)) == QC(0, 3)
    w = exact_sqrt_qc(QC(0, 2))
    assert w is not None and w * w == QC(0, 2)
    assert exact_sqrt_qc(QC(2)) is None


# ---------------------------------------------------------------------------
# Multi-indices
# ---------------------------------------------------------------------------


def test_grlex_is_total_and_graded():
    idx = list(multi_indices(3, 2))
    keys = [grlex_key(a) for a in idx]
    assert keys == sorted(keys)
    assert len(set(idx)) == len(idx) == 6
    low = grlex_key((1, 0, 0))
    high = grlex_key((0, 0, 2))
    assert low < high  # degree dominates


# ---------------------------------------------------------------------------
# Derivatives
# ---------------------------------------------------------------------------


def test_power_rule_example():
    # q1^2 q2, alpha = (1,1) -> 2 q1
    f = RatFunc(poly(2, {(2, 1): 1}))
    d = partial_derivative(f, (1, 1))
    assert d.equals(RatFunc(poly(2, {(1, 0): 2})))


def test_quotient_rule_example():
    # q1^3/q2, alpha = (0,1) -> -q1^3/q2^2
    f = RatFunc(poly(2, {(3, 0): 1}), poly(2, {(0, 1): 1}))
    d = partial_derivative(f, (0, 1))
    assert d.equals(RatFunc(poly(2, {(3, 0): -1}), poly(2, {(0, 2): 1})))


def test_derivative_matches_finite_differences():
    # random degree-5 polynomial in 3 vars, alpha = (2,1,0); oracle uses
    # 4th-order central stencils (a 3rd derivative at h = 1e-5 would drown
    # in roundoff, so the step is chosen where the stencil is trustworthy)
    rng = random.Random(11)
    terms = {}
    for mono in multi_indices(3, 5):
        terms[mono] = rat(rng.randint(-8, 8))
    f = RatFunc(poly(3, terms))
    d = partial_derivative(f, (2, 1, 0))
    h = 1e-2
    pts = [[rng.uniform(0.4, 1.6) for _ in range(3)] for _ in range(10)]
    for p in pts:
        exact = evaluate(d, [complex(x) for x in p])

        def fval(dx, dy):
            q = [p[0] + dx, p[1] + dy, p[2]]
            return evaluate(f, [complex(x) for x in q])

        def ddy(dx):  # 4th-order first derivative in y
            return (-fval(dx, 2 * h) + 8 * fval(dx, h) - 8 * fval(dx, -h) + fval(dx, -2 * h)) / (
                12 * h
            )

        approx = (  # 4th-order second derivative in x
            -ddy(2 * h) + 16 * ddy(h) - 30 * ddy(0) + 16 * ddy(-h) - ddy(-2 * h)
        ) / (12 * h * h)
        assert abs(approx - exact) <= 1e-6 * max(1.0, abs(exact))


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.tuples(st.integers(0, 2), st.integers(0, 2)),
            st.integers(-6, 6),
        ),
        min_size=1,
        max_size=5,
    ),
    st.tuples(st.integers(0, 2), st.integers(0, 2)),
    st.tuples(st.integers(0, 2), st.integers(0, 2)),
)
def test_mixed_partials_compose(terms, alpha, beta):
    f = Poly(2, {m: rat(c) for m, c in terms})
    lhs = f.diff_multi(alpha).diff_multi(beta)
    rhs = f.diff_multi(mi_add(alpha, beta))
    assert lhs == rhs


def test_mixed_partials_compose_ratfunc():
    f = RatFunc(poly(2, {(3, 1): 2, (1, 3): -5}), poly(2, {(1, 1): 1}))
    a, b = (1, 1), (0, 2)
    assert f.diff_multi(a).diff_multi(b).equals(f.diff_multi(mi_add(a, b)))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def test_evaluate_examples():
    f = RatFunc(poly(2, {(2, 0): 1, (0, 2): 1}))
    assert evaluate(f, [rat(3), rat(4)]) == rat(25)
    g = RatFunc(poly(2, {(3, 0): 1}), poly(2, {(0, 1): 1}))
    with pytest.raises(PoleAtPoint):
        evaluate(g, [rat(1), rat(0)])
    h = RatFunc(poly(2, {(4, 0): 1, (0, 4): 1}), poly(2, {(2, 0): 1, (0, 2): 1}))
    assert evaluate(h, [rat(1), rat(1)]) == rat(1)


def test_exact_matches_float_evaluation():
    rng = random.Random(5)
    for _ in range(20):
        terms = {m: rat(rng.randint(-9, 9), rng.randint(1, 4)) for m in multi_indices(2, 3)}
        f = RatFunc(poly(2, terms), poly(2, {(1, 0): 1, (0, 1): 2}))
        pt_exact = [rat(rng.randint(1, 9), rng.randint(1, 3)) for _ in range(2)]
        pt_float = [x.to_complex() for x in pt_exact]
        ve = evaluate(f, pt_exact)
        vf = evaluate(f, pt_float)
        assert abs(ve.to_complex() - vf) <= 1e-9 * max(1.0, abs(vf))


# ---------------------------------------------------------------------------
# Homogeneity / Euler
# ---------------------------------------------------------------------------


def euler_samples(V, seed=0):
    return random_rational_points(
        V.n, 5, seed=seed, avoid=lambda p: not bool(V.den.eval(p))
    )


def test_euler_check_quadratic():
    V = HomogeneousPotential.from_terms(
        2, 2, {(2, 0): rat(1, 2), (0, 2): rat(2)}
    )
    assert euler_check(V, euler_samples(V))


def test_euler_check_rational_degrees():
    V2 = HomogeneousPotential.from_terms(2, 2, {(3, 0): rat(1)}, {(0, 1): rat(1)})
    assert euler_check(V2, euler_samples(V2, seed=1))
    V3 = HomogeneousPotential.from_terms(2, 3, {(3, 0): rat(1)}, {(0, 1): rat(1)})
    assert not euler_check(V3, euler_samples(V3, seed=1))
    assert not V3.degree_consistent()


def test_homogeneous_euler_property_random():
    rng = random.Random(23)
    for m in (1, 2, 4):
        terms = {mono: rat(rng.randint(-5, 5)) for mono in multi_indices(3, m)}
        f = RatFunc(Poly(3, terms))
        pts = random_rational_points(3, 4, seed=m)
        for p in pts:
            lhs = None
            for i in range(3):
                t = p[i] * f.diff(i).eval(p)
                lhs = t if lhs is None else lhs + t
            assert lhs == f.eval(p) * m


# ---------------------------------------------------------------------------
# Derivative tensors
# ---------------------------------------------------------------------------


def test_tensor_zero_for_quadratic():
    V = HomogeneousPotential.from_terms(2, 2, {(2, 0): rat(1), (0, 2): rat(1, 2)})
    T = derivative_tensor(V.force(), [rat(1), rat(0)], 2)
    assert all(not bool(v) for v in T.values())


def test_tensor_cubic_value():
    # V = (2q1^2 + q2^2)/2 + c q1^3/q2 at d = (0,1): D_{1,1}F_1 = -6c
    c = rat(3)
    V = HomogeneousPotential.from_terms(
        2, 2, {(2, 1): rat(1), (0, 3): rat(1, 2), (3, 0): c}, {(0, 1): rat(1)}
    )
    T = derivative_tensor(V.force(), [rat(0), rat(1)], 2)
    assert T[(0, (2, 0))] == rat(-18)


def test_tensor_symmetry_under_diff_order():
    # d_a d_b F equals d_b d_a F as rational functions
    V = HomogeneousPotential.from_terms(
        2, 2, {(2, 1): rat(1), (0, 3): rat(1, 2), (3, 0): rat(1)}, {(0, 1): rat(1)}
    )
    F = V.force().components[0]
    ab = F.diff(0).diff(1)
    ba = F.diff(1).diff(0)
    assert ab.equals(ba)


def test_tensor_is_minus_potential_derivative():
    # d^alpha F_i(d) == -d^(alpha+e_i) V(d) at random points
    rng = random.Random(2)
    V = HomogeneousPotential.from_terms(
        2, 2, {(2, 1): rat(1), (0, 3): rat(1, 2), (3, 0): rat(2)}, {(0, 1): rat(1)}
    )
    v = V.as_ratfunc()
    F = V.force()
    pts = random_rational_points(2, 5, seed=9, avoid=lambda p: not bool(V.den.eval(p)))
    for d in pts:
        T = derivative_tensor(F, d, 2)
        for (i, alpha), val in T.items():
            full = list(alpha)
            full[i] += 1
            assert val == -v.diff_multi(tuple(full)).eval(d)


def test_substitute_linear_permutation():
    V = HomogeneousPotential.from_terms(2, 2, {(2, 0): rat(1), (0, 2): rat(2)})
    M = ((rat(0), rat(1)), (rat(1), rat(0)))
    W = V.substitute_linear(M)
    assert W.num == Poly(2, {(0, 2): rat(1), (2, 0): rat(2)})
