"""Chain assembly, coupling tensors, subsystem extraction, superposition."""

import itertools
import random
from fractions import Fraction

import pytest

from vega.polycore import (
    QC,
    HomogeneousPotential,
    derivative_tensor,
    multi_indices,
    mi_factorial,
    random_rational_points,
)
from vega.darboux import eigenframe, normalize_darboux, verify_darboux
from vega.vebuild import (
    AlphaEqualsBeta,
    IndexOutOfRange,
    LinearPartMismatch,
    SystemSolution,
    build_ve_chain,
    coupling_theta,
    coupling_xi,
    extract_ex2,
    extract_ve2_ab,
    extract_ve2_alpha,
    superpose,
    ve2_parts_in_ab_frame,
    xi_table,
)


def rat(a, b=1):
    return QC(Fraction(a, b))


def osc(weights):
    n = len(weights)
    return HomogeneousPotential.from_terms(
        n, 2, {tuple(2 if j == i else 0 for j in range(n)): QC(Fraction(w) / 2) for i, w in enumerate(weights)}
    )


def cubic(c=1):
    return HomogeneousPotential.from_terms(
        2, 2, {(2, 1): rat(1), (0, 3): rat(1, 2), (3, 0): rat(c)}, {(0, 1): rat(1)}
    )


def frame_of(V, d):
    dd = verify_darboux(V, d)
    V2, dd = normalize_darboux(V, dd)
    return eigenframe(V2, dd)


# ---------------------------------------------------------------------------
# Coupling tensors
# ---------------------------------------------------------------------------


def test_theta_zero_for_quadratic():
    V = osc([1, 4])
    th = coupling_theta(V.force(), (rat(1), rat(0)))
    assert all(not bool(v) for v in th.entries.values())


def test_theta_cubic_values():
    V = cubic(c=1)
    th = coupling_theta(V.force(), (rat(0), rat(1)))
    assert th.entry(0, 0, 0) == rat(-6)
    assert th.entry(1, 0, 0) == QC(0)
    assert th.entry(0, 0, 1) == QC(0)


def test_theta_symmetry_random():
    rng = random.Random(3)
    terms = {m: rat(rng.randint(-4, 4)) for m in multi_indices(3, 2)}
    V = HomogeneousPotential.from_terms(3, 2, terms)
    d = (rat(1), rat(2), rat(1))
    th = coupling_theta(V.force(), d)
    for i, a, b in itertools.product(range(3), repeat=3):
        assert th.entry(i, a, b) == th.entry(i, b, a)


def test_xi_full_symmetry_and_potential_identity():
    V = cubic(c=2)
    d = (rat(0), rat(1))
    xi = coupling_xi(V.force(), d)
    for i in range(2):
        for a, b, c in itertools.product(range(2), repeat=3):
            val = xi.entry(i, a, b, c)
            for perm in itertools.permutations((a, b, c)):
                assert xi.entry(i, *perm) == val
    # xi equals -(4th order V-derivative)
    v = V.as_ratfunc()
    for (i, alpha), val in xi.entries.items():
        full = list(alpha)
        full[i] += 1
        assert val == -v.diff_multi(tuple(full)).eval(d)


def test_xi_zero_for_quadratic():
    V = osc([2, 5])
    xi = coupling_xi(V.force(), (rat(1), rat(0)))
    assert all(not bool(v) for v in xi.entries.values())


# ---------------------------------------------------------------------------
# Chain construction
# ---------------------------------------------------------------------------


def test_quadratic_chain_is_forcing_free():
    fr = frame_of(osc([1, 4, 9]), (rat(1), rat(0), rat(0)))
    chain = build_ve_chain(fr, 4)
    for sys in chain:
        assert sys.forcing == ()
    assert chain[0].order == 1 and chain[-1].order == 4


def test_cubic_ve2_coefficient_and_phi_power():
    fr = frame_of(cubic(1), (rat(0), rat(1)))
    chain = build_ve_chain(fr, 2)
    terms = chain[1].forcing
    # target 1 (new coordinate 0), coefficient theta/2 = -3, phi power k-3 = -1
    hit = [t for t in terms if t.monomial == (((0, 1), 2),) and t.target == 0]
    assert len(hit) == 1
    assert hit[0].coefficient == rat(-3)
    assert hit[0].phi_power == -1


def test_phi_power_rule():
    # every forcing term built from s factors carries phi^(k-1-s)
    fr = frame_of(cubic(1), (rat(0), rat(1)))
    chain = build_ve_chain(fr, 4)
    k = 2
    for sys in chain[1:]:
        for t in sys.forcing:
            assert t.phi_power == k - 1 - t.factor_count()
            assert t.total_source_order() == sys.order
            assert all(m < sys.order for (_, m), _ in t.monomial)


def test_xi_table_matches_polycore():
    # xi^j_alpha = d^alpha F_j(d)/alpha! cross-checked on a random potential
    rng = random.Random(17)
    terms = {m: rat(rng.randint(-3, 3)) for m in multi_indices(2, 4)}
    terms[(0, 4)] = rat(1)  # keep d = (0,1) a Darboux point below
    V = HomogeneousPotential.from_terms(2, 2, terms, {(0, 2): rat(2)})
    dd = verify_darboux(V, (rat(0), rat(1)))
    V2, dd = normalize_darboux(V, dd)
    fr = eigenframe(V2, dd)
    for p in (2, 3):
        table = xi_table(fr, p)
        T = {}
        for j in range(2):
            comp = fr.force_new[j]
            for alpha in multi_indices(2, p):
                val = comp.diff_multi(alpha).eval(fr.d_new)
                if bool(val):
                    T[(j, alpha)] = val * QC(Fraction(1, mi_factorial(alpha)))
        assert table == T


def test_simple_form_through_vanishing_lower_tensors():
    # quartic perturbation: theta = 0, so VE_3 must still be simple form
    V = HomogeneousPotential.from_terms(
        2,
        2,
        {(2, 2): rat(1), (0, 4): rat(1, 2), (4, 0): rat(1)},
        {(0, 2): rat(1)},
    )
    fr = frame_of(V, (rat(0), rat(1)))
    chain = build_ve_chain(fr, 3)
    assert chain[1].forcing == ()  # VE_2 forcing-free
    assert chain[2].forcing != ()
    assert chain[2].is_simple_form()


# ---------------------------------------------------------------------------
# Extraction
# ---------------------------------------------------------------------------


def test_extract_ve2_alpha_paper_normalization():
    fr = frame_of(cubic(1), (rat(0), rat(1)))
    chain = build_ve_chain(fr, 2)
    sub = extract_ve2_alpha(chain, 0, 0)
    assert sub.eigenvalues == (rat(2), rat(2))
    assert len(sub.forcing) == 1
    assert sub.forcing[0].coefficient == rat(-6)
    with pytest.raises(IndexOutOfRange):
        extract_ve2_alpha(chain, 5, 0)
    with pytest.raises(IndexOutOfRange):
        extract_ve2_alpha(chain[:1], 0, 0)


def test_extract_quadratic_is_forcing_free():
    fr = frame_of(osc([1, 4]), (rat(1), rat(0)))
    chain = build_ve_chain(fr, 2)
    assert extract_ve2_alpha(chain, 0, 1).forcing == ()
    assert extract_ex2(chain, 0, 1, 0).forcing == ()


def test_extract_ex2_requires_distinct_indices():
    fr = frame_of(cubic(1), (rat(0), rat(1)))
    chain = build_ve_chain(fr, 2)
    with pytest.raises(AlphaEqualsBeta):
        extract_ex2(chain, 1, 1, 0)


def test_composition_bookkeeping():
    # VE_{2,(a,b)}^g forcing equals the three parts' forcings combined
    V = HomogeneousPotential.from_terms(
        3,
        2,
        {
            (0, 0, 3): rat(1, 2),
            (2, 0, 1): rat(1),
            (0, 2, 1): rat(3, 2),
            (3, 0, 0): rat(2),
            (1, 2, 0): rat(1),
            (2, 1, 0): rat(-1),
        },
        {(0, 0, 1): rat(1)},
    )
    fr = frame_of(V, (rat(0), rat(0), rat(1)))
    chain = build_ve_chain(fr, 2)
    for a, b, g in itertools.permutations(range(3), 3):
        if a >= b:
            continue
        full, parts = ve2_parts_in_ab_frame(chain, a, b, g)
        combined = {}
        for part in parts:
            for t in part.forcing:
                key = (t.target, t.monomial, t.phi_power)
                combined[key] = combined.get(key, QC(0)) + t.coefficient
        full_map = {(t.target, t.monomial, t.phi_power): t.coefficient for t in full.forcing}
        combined = {k: v for k, v in combined.items() if bool(v)}
        assert combined == full_map


# ---------------------------------------------------------------------------
# Superposition
# ---------------------------------------------------------------------------


def test_superpose_single_identity():
    fr = frame_of(osc([1, 4]), (rat(1), rat(0)))
    chain = build_ve_chain(fr, 2)
    sys = extract_ve2_alpha(chain, 0, 1)
    sol = SystemSolution(sys, lambda t: (t, 2 * t))
    out = superpose([sol])
    assert out.system == sys
    assert out.values(3.0) == (3.0, 6.0)


def test_superpose_sums_solutions_and_forcings():
    fr = frame_of(cubic(1), (rat(0), rat(1)))
    chain = build_ve_chain(fr, 2)
    full, parts = ve2_parts_in_ab_frame(chain, 0, 1, 0)
    sols = [SystemSolution(p, lambda t, i=i: (i * t, 0.0, 1.0)) for i, p in enumerate(parts)]
    out = superpose(sols)
    assert out.system.forcing == full.forcing
    assert out.values(2.0) == (2.0 * (0 + 1 + 2), 0.0, 3.0)


def test_superpose_rejects_mismatched_linear_part():
    fr = frame_of(osc([1, 4]), (rat(1), rat(0)))
    chain = build_ve_chain(fr, 2)
    s1 = extract_ve2_alpha(chain, 0, 1)
    s2 = extract_ve2_alpha(chain, 1, 1)
    with pytest.raises(LinearPartMismatch):
        superpose([SystemSolution(s1, lambda t: (0, 0)), SystemSolution(s2, lambda t: (0, 0))])
