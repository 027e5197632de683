"""Darboux verification, exact spectra, frequencies, resonance."""

from fractions import Fraction

import pytest

from vega.polycore import QC, HomogeneousPotential
from vega.darboux import (
    Freq,
    NotADarbouxPoint,
    ZeroMultiplier,
    charpoly,
    classify_resonance,
    eigenframe,
    mat_identity,
    mat_inverse,
    mat_mul,
    normalize_darboux,
    nullspace,
    rational_roots,
    verify_darboux,
)


def rat(a, b=1):
    return QC(Fraction(a, b))


def osc(weights):
    n = len(weights)
    terms = {}
    for i, w in enumerate(weights):
        mono = tuple(2 if j == i else 0 for j in range(n))
        terms[mono] = QC(Fraction(w) / 2)
    return HomogeneousPotential.from_terms(n, 2, terms)


CUBIC = HomogeneousPotential.from_terms(
    2, 2, {(2, 1): rat(1), (0, 3): rat(1, 2), (3, 0): rat(1)}, {(0, 1): rat(1)}
)


# ---------------------------------------------------------------------------
# Exact linear algebra
# ---------------------------------------------------------------------------


def test_charpoly_and_rational_roots():
    H = ((rat(2), rat(1)), (rat(1), rat(2)))
    coeffs = charpoly(H)
    # x^2 - 4x + 3
    assert coeffs == [QC(1), rat(-4), rat(3)]
    roots = rational_roots(coeffs)
    assert roots == [QC(1), QC(3)]


def test_rational_roots_gaussian_and_multiplicity():
    # (x - (1+i))^2 = x^2 - (2+2i) x + 2i
    coeffs = [QC(1), QC(-2, -2), QC(0, 2)]
    assert rational_roots(coeffs) == [QC(1, 1), QC(1, 1)]
    # irrational spectrum is refused
    assert rational_roots([QC(1), QC(0), QC(-2)]) is None  # x^2 - 2


def test_nullspace_and_inverse():
    A = ((rat(1), rat(2)), (rat(2), rat(4)))
    ker = nullspace(A)
    assert len(ker) == 1
    v = ker[0]
    assert A[0][0] * v[0] + A[0][1] * v[1] == QC(0)
    M = ((rat(1), rat(2)), (rat(3), rat(5)))
    assert mat_mul(M, mat_inverse(M)) == mat_identity(2)


# ---------------------------------------------------------------------------
# verify_darboux
# ---------------------------------------------------------------------------


def test_verify_diagonal_oscillator():
    V = osc([1, 4])
    dd = verify_darboux(V, (rat(1), rat(0)))
    assert dd.gamma == QC(1)
    assert dd.eigenvalues == (QC(1), QC(4))
    assert [f.describe() for f in dd.frequencies] == ["1", "2"]


def test_verify_cubic_example():
    dd = verify_darboux(CUBIC, (rat(0), rat(1)))
    assert dd.gamma == QC(1)
    assert set(dd.eigenvalues) == {QC(1), QC(2)}


def test_verify_isotropic_any_direction():
    V = osc([1, 1])
    dd = verify_darboux(V, (rat(1), rat(1)))
    assert dd.gamma == QC(1)


def test_verify_rejects_non_darboux():
    V = osc([1, 4])
    with pytest.raises(NotADarbouxPoint):
        verify_darboux(V, (rat(1), rat(1)))  # not an eig怀direction of diag(1,4)


def test_verify_rejects_zero_multiplier():
    # V = q1 q2 has gradient (q2, q1); at d = (1, 0) that is (0, 1), not parallel;
    # at d=(1,1) gradient is d with gamma=1; a zero multiplier needs V' = 0:
    V = HomogeneousPotential.from_terms(2, 2, {(1, 1): rat(1)})
    with pytest.raises(ZeroMultiplier):
        # gradient of q1*q2 - q1*q2 ... use V = (q1^2 - q1^2) impossible; instead
        # d=(1,-1): grad = (-1, 1) = -1 * d -> gamma = -1, fine; so craft V with
        # vanishing gradient along d: V = (q1 - q2)^2, d = (1, 1)
        verify_darboux(
            HomogeneousPotential.from_terms(
                2, 2, {(2, 0): rat(1), (1, 1): rat(-2), (0, 2): rat(1)}
            ),
            (rat(1), rat(1)),
        )


def test_euler_eigen_consequence():
    # V''(d) d = (k-1) gamma d at every verified point
    for V, d in ((osc([1, 4]), (rat(1), rat(0))), (CUBIC, (rat(0), rat(1)))):
        dd = verify_darboux(V, d)
        n = V.n
        for i in range(n):
            acc = QC(0)
            for j in range(n):
                acc = acc + dd.hessian[i][j] * dd.d[j]
            assert acc == dd.gamma * dd.d[i] * (V.k - 1)


# ---------------------------------------------------------------------------
# normalize_darboux
# ---------------------------------------------------------------------------


def test_normalize_k2_scales_potential():
    V = osc([3, 12])  # gamma = 3 at d = (1, 0)
    dd = verify_darboux(V, (rat(1), rat(0)))
    assert dd.gamma == QC(3)
    V2, dd2 = normalize_darboux(V, dd)
    assert dd2.gamma == QC(1)
    assert V2.num.coeffs[(2, 0)] == rat(1, 2)
    # idempotent
    V3, dd3 = normalize_darboux(V2, dd2)
    assert V3 is V2 and dd3 is dd2


def test_normalize_k3_rescales_point():
    # V = q1^3 / 3: V'(d) = d^2; at d = 8: gamma = 8, alpha = 1/8
    V = HomogeneousPotential.from_terms(1, 3, {(3,): rat(1, 3)})
    dd = verify_darboux(V, (rat(8),))
    assert dd.gamma == rat(8)
    V2, dd2 = normalize_darboux(V, dd)
    assert dd2.gamma == QC(1)
    assert dd2.d == (rat(1),)


def test_normalize_km2_identity_when_unit():
    V = HomogeneousPotential.from_terms(
        2, -2, {(0, 0): rat(-1, 2)}, {(2, 0): rat(1), (0, 2): rat(1)}
    )
    dd = verify_darboux(V, (rat(1), rat(0)))
    V2, dd2 = normalize_darboux(V, dd)
    assert dd2 is dd and V2 is V


def test_normalize_km2_quartic_root():
    # scaled radial potential: gamma = 16 at d=(1,0) -> alpha = 16^{1/4} = 2
    V = HomogeneousPotential.from_terms(
        2, -2, {(0, 0): rat(-8)}, {(2, 0): rat(1), (0, 2): rat(1)}
    )
    dd = verify_darboux(V, (rat(1), rat(0)))
    assert dd.gamma == rat(16)
    V2, dd2 = normalize_darboux(V, dd)
    assert dd2.gamma == QC(1)
    assert dd2.d == (rat(2), rat(0))


# ---------------------------------------------------------------------------
# Frequencies and resonance
# ---------------------------------------------------------------------------


def test_freq_tags():
    assert Freq.from_lambda(QC(0)).tag == "zero"
    assert Freq.from_lambda(QC(4)).tag == "rational"
    assert Freq.from_lambda(QC(Fraction(9, 4))).tag == "rational"
    assert Freq.from_lambda(QC(2)).tag == "irrational"
    assert Freq.from_lambda(QC(-3)).tag == "irrational"  # imaginary, not in Q*
    assert Freq.from_lambda(QC(1, 1)).tag == "irrational"  # omega^2 not real
    assert Freq.from_lambda(0.5 + 0j).tag == "undetermined"


def test_freq_rational_value():
    f = Freq.from_lambda(QC(Fraction(9, 4)))
    assert f.rational_value == Fraction(3, 2)


def test_resonance_rational_pair_dependent():
    fs = [Freq.from_lambda(QC(1)), Freq.from_lambda(QC(4))]  # omega 1, 2
    rc = classify_resonance(fs)
    assert rc.z_linear_independent == "false"
    assert rc.witness["relation"] == {0: 2, 1: -1}  # 2*omega_1 - omega_2 = 0


def test_resonance_zero_dependent():
    fs = [Freq.from_lambda(QC(0)), Freq.from_lambda(QC(9))]
    rc = classify_resonance(fs)
    assert rc.tags == ("zero", "rational")
    assert rc.z_linear_independent == "false"


def test_resonance_sqrt2_undetermined_vs_certified():
    # (sqrt(2), 1): distinct radicands 2 and 1 -> certified independent
    fs = [Freq.from_lambda(QC(2)), Freq.from_lambda(QC(1))]
    rc = classify_resonance(fs)
    assert rc.z_linear_independent == "true"
    # float lambdas cannot be certified
    fs2 = [Freq.from_lambda(2.0 + 0j), Freq.from_lambda(1.0 + 0j)]
    assert classify_resonance(fs2).z_linear_independent == "undetermined"
    assert classify_resonance(fs2, assert_independence=True).z_linear_independent == "asserted"


def test_resonance_shared_radicand_dependent():
    # sqrt(2) and sqrt(8) = 2 sqrt(2)
    fs = [Freq.from_lambda(QC(2)), Freq.from_lambda(QC(8))]
    rc = classify_resonance(fs)
    assert rc.z_linear_independent == "false"


def test_resonance_permutation_invariant():
    fs = [Freq.from_lambda(QC(l)) for l in (1, 2, 3)]
    a = classify_resonance(fs).z_linear_independent
    b = classify_resonance(list(reversed(fs))).z_linear_independent
    assert a == b == "true"


# ---------------------------------------------------------------------------
# Eigenframe
# ---------------------------------------------------------------------------


def test_eigenframe_places_darboux_last():
    V = osc([1, 2, 3])
    dd = verify_darboux(V, (rat(1), rat(0), rat(0)))
    fr = eigenframe(V, dd)
    assert fr.lam[-1] == QC(1)
    assert fr.d_new == (QC(0), QC(0), QC(1))
    # transformed force linearizes to -diag(lam)
    for i in range(3):
        for j in range(3):
            val = fr.force_new[i].diff(j).eval(fr.d_new)
            expect = -fr.lam[i] if i == j else QC(0)
            assert val == expect


def test_eigenframe_jordan_blocks_km2():
    num = {(2, 0): QC(16), (1, 1): QC(0, 16)}
    den = {
        (4, 0): QC(1),
        (3, 1): QC(0, -4),
        (2, 2): QC(-6),
        (1, 3): QC(0, 4),
        (0, 4): QC(1),
    }
    V = HomogeneousPotential.from_terms(2, -2, num, den)
    dd = verify_darboux(V, (QC(1), QC(0, 1)))
    assert not dd.diagonalizable
    assert dd.jordan_blocks == ((QC(-3), 2),)
    fr = eigenframe(V, dd, d_last=False)
    # linear part in frame coordinates is the Jordan matrix -J
    lin = [[fr.force_new[i].diff(j).eval(fr.d_new) for j in range(2)] for i in range(2)]
    assert lin[0][0] == QC(3) and lin[1][1] == QC(3)
    assert lin[1][0] == QC(0) and lin[0][1] == QC(-1)
