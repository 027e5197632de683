"""Trigonometric integral reduction, classification, monodromy jumps."""

import cmath
import math
from fractions import Fraction

import pytest

from vega.polycore import QC
from vega.trig import (
    InvalidOrder,
    TrigExpr,
    classify_meromorphy,
    computed_root_set,
    exp_over_sin,
    monodromy_jump,
    paper_stated_root_set,
    recurrence_step,
    reduce,
    residue_at_zero,
)


def rat(a, b=1):
    return QC(Fraction(a, b))


# ---------------------------------------------------------------------------
# Recurrence
# ---------------------------------------------------------------------------


def test_recurrence_c_values():
    _, c = recurrence_step(3, rat(0))
    assert c == rat(1, 2)
    _, c = recurrence_step(4, rat(2))
    assert c == QC(0)
    with pytest.raises(InvalidOrder):
        recurrence_step(2, rat(0))


def test_recurrence_differentiation_identity_exact():
    # d/dt(g_{n-2}) + c * e^{iwt}/sin^{n-2} == e^{iwt}/sin^n, exactly
    for n in range(3, 9):
        for w in (rat(0), rat(1), rat(-2), rat(3, 7), rat(5, 2)):
            g, c = recurrence_step(n, w)
            lhs = g.derivative() + exp_over_sin(w, n - 2).scale(c)
            assert (lhs - exp_over_sin(w, n)).is_zero(), (n, w)


def test_trig_expr_derivative_numerically():
    w = rat(2, 3)
    g, _ = recurrence_step(5, w)
    d = g.derivative()
    t0 = 0.7
    h = 1e-6
    num = (g.eval(t0 + h) - g.eval(t0 - h)) / (2 * h)
    assert abs(num - d.eval(t0)) < 1e-6


# ---------------------------------------------------------------------------
# Reduction
# ---------------------------------------------------------------------------


def test_reduce_identity_orders():
    r = reduce(2, rat(5))
    assert r.tail_order == 2 and r.p == QC(1) and r.meromorphic_part.is_zero()
    r = reduce(1, rat(5))
    assert r.tail_order == 1 and r.p == QC(1)


def test_reduce_even_zero_set():
    # n = 4: zeros exactly at {0, +-2}
    for w, expect_zero in ((0, True), (2, True), (-2, True), (1, False), (4, False)):
        r = reduce(4, rat(w))
        assert (r.p == QC(0)) == expect_zero, w
    assert reduce(6, rat(4)).p == QC(0)


def test_reduce_odd_zero_set():
    for w, expect_zero in ((1, True), (3, True), (-3, True), (5, False), (0, False), (2, False)):
        r = reduce(5, rat(w))
        assert (r.p == QC(0)) == expect_zero, w
        assert r.tail_order == 1


def test_reduce_telescopes_to_tail():
    # T_n(t)' == (mero_part)' + c_product * integrand_tail, checked symbolically
    for n in (4, 5, 6, 7):
        w = rat(3, 5)
        r = reduce(n, w)
        lhs = r.meromorphic_part.derivative() + exp_over_sin(w, r.tail_order).scale(r.c_product)
        assert (lhs - exp_over_sin(w, n)).is_zero(), n


# ---------------------------------------------------------------------------
# Classifier
# ---------------------------------------------------------------------------


def test_classifier_base_cases():
    v = classify_meromorphy(2, 0)
    assert v.meromorphic and v.witness == "-cot t"
    assert not classify_meromorphy(1, 0).meromorphic
    assert not classify_meromorphy(1, 5).meromorphic
    assert not classify_meromorphy(2, 1).meromorphic


def test_classifier_root_sets():
    assert computed_root_set(6) == (-4, -2, 0, 2, 4)
    assert computed_root_set(7) == (-5, -3, -1, 1, 3, 5)
    assert computed_root_set(3) == (-1, 1)
    # the printed odd bound adds +-n; reported as a discrepancy, not adopted
    assert paper_stated_root_set(3) == (-3, -1, 1, 3)
    v = classify_meromorphy(3, 3)
    assert not v.meromorphic
    assert v.paper_set_extra == (-3, 3)


def test_classifier_matches_reduction_rule_and_residue():
    # grid: all roots and off-grid probes, n <= 12
    for n in range(1, 13):
        probes = set(computed_root_set(n)) | set(paper_stated_root_set(n))
        probes |= {r + 1 for r in probes} | {0, n - 1, n, n + 1}
        for w in sorted(probes):
            v = classify_meromorphy(n, w)
            r = reduce(n, rat(w))
            rule = (r.p == QC(0)) or (r.tail_order == 2 and w == 0)
            assert v.meromorphic == rule, (n, w)
            res = residue_at_zero(n, rat(w))
            assert v.meromorphic == (not bool(res)), (n, w)
        for w in (Fraction(1, 2), Fraction(-7, 3)):
            v = classify_meromorphy(n, QC(w))
            assert v.meromorphic == (not bool(residue_at_zero(n, QC(w)))), (n, w)


def test_classifier_float_mode():
    assert classify_meromorphy(4, 2.0 + 1e-12).meromorphic
    assert not classify_meromorphy(4, 2.001).meromorphic
    assert not classify_meromorphy(4, math.sqrt(2)).meromorphic


def test_residue_example_n2():
    # e^{iwt}/sin^2 t = 1/t^2 + iw/t + ..., residue iw
    for w in (0, 1, -3):
        assert residue_at_zero(2, rat(w)) == QC(0, w)


# ---------------------------------------------------------------------------
# Monodromy jump
# ---------------------------------------------------------------------------


def test_monodromy_jump_values():
    assert abs(monodromy_jump(lambda t: 1.0, 0) - 2j * math.pi) < 1e-15
    assert abs(monodromy_jump(lambda t: cmath.sin(t), 0)) < 1e-15
    w = 1.7
    expect = 2j * math.pi * cmath.exp(1j * w * math.pi)
    assert abs(monodromy_jump(lambda t: cmath.exp(1j * w * t), 1) - expect) < 1e-12
