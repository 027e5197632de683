"""Integrability verdicts for homogeneous degree k = 2 along a Darboux point.

Two layers:

* the order-2 subsystem criteria: VE_{2,alpha}^gamma is virtually Abelian iff
  theta^gamma_{alpha,alpha} = 0 or both frequencies are nonzero rationals
  (and the analogous three-frequency criterion for EX_{2,(alpha,beta)}^gamma);
* the inductive analysis under Z-independent frequencies: order by order,
  every simple-form coefficient xi^j_alpha with (j, alpha) != (n, (0..0,p))
  must vanish, while the distinguished entry vanishes automatically through
  the Euler chain d^(p+1)_n V(d) = (2-p) d^p_n V(d) seeded by the zero cubic.

Verdicts are exact-arithmetic statements; frequency tags that cannot be
certified produce Inconclusive, never a guess.  The energy level is fixed at
e = 1/2 with phi = sin t; the obstructing second-level integrals then live on
the t-line with poles at n*pi, which is what the trig module classifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import trig
from .darboux import (
    DarbouxData,
    EigenFrame,
    Freq,
    ResonanceClass,
    classify_resonance,
    eigenframe,
)
from .polycore import (
    QC,
    HomogeneousPotential,
    MultiIndex,
    Scalar,
    mi_factorial,
    multi_indices,
    scalar_is_zero,
    scalar_to_complex,
)
from .vebuild import ForceTensors

VIRTUALLY_ABELIAN = "virtually_abelian"
NOT_VIRTUALLY_ABELIAN = "not_virtually_abelian"
INCONCLUSIVE = "inconclusive"

_STATUS_RANK = {NOT_VIRTUALLY_ABELIAN: 0, INCONCLUSIVE: 1, VIRTUALLY_ABELIAN: 2}


class NonResonanceNotEstablished(ValueError):
    """The inductive analysis needs certified or asserted Z-independence."""


@dataclass(frozen=True)
class Verdict:
    status: str
    witness: Optional[dict]
    order_reached: int

    def exit_code(self) -> int:
        return {VIRTUALLY_ABELIAN: 0, NOT_VIRTUALLY_ABELIAN: 2, INCONCLUSIVE: 3}[self.status]


@dataclass(frozen=True)
class Certificate:
    """Evidence that all xi tables vanish through order p_max.

    euler_chain records the directional derivatives d^p_n V(d) along the
    Darboux direction (pulled back through the eigenframe), which satisfy
    the (2-p) descent and are zero from order 3 on.
    """

    p_max: int
    xi_zero_orders: Tuple[int, ...]
    euler_chain: Dict[int, str]
    resonance: ResonanceClass


# ---------------------------------------------------------------------------
# Frequency combinations (exact, for the integral-route oracle)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FreqCombo:
    """An exact sum of c_r * sqrt(r) over signed squarefree radicands r."""

    parts: Tuple[Tuple[int, Fraction], ...]  # sorted by radicand

    @classmethod
    def zero(cls) -> "FreqCombo":
        return cls(tuple())

    @classmethod
    def from_freq(cls, f: Freq, mult: int = 1) -> Optional["FreqCombo"]:
        if f.coef is None:
            return None
        c = f.coef * mult
        if c == 0:
            return cls.zero()
        return cls(((f.rad, c),))

    def __add__(self, other: "FreqCombo") -> "FreqCombo":
        acc = dict(self.parts)
        for rad, c in other.parts:
            s = acc.get(rad, Fraction(0)) + c
            if s == 0:
                acc.pop(rad, None)
            else:
                acc[rad] = s
        return FreqCombo(tuple(sorted(acc.items())))

    def is_rational(self) -> bool:
        return all(rad == 1 for rad, _ in self.parts)

    def approx(self) -> complex:
        z = 0j
        for rad, c in self.parts:
            root = math.sqrt(rad) if rad > 0 else 1j * math.sqrt(-rad)
            z += complex(c) * root
        return z

    def describe(self) -> str:
        if not self.parts:
            return "0"
        bits = []
        for rad, c in self.parts:
            bits.append(str(c) if rad == 1 else f"{c}*sqrt({rad})")
        return " + ".join(bits)


# ---------------------------------------------------------------------------
# Order-2 criteria (the resonant-case lemmas)
# ---------------------------------------------------------------------------


def _freq_status(freqs: Sequence[Freq]) -> str:
    """VA if all in Q*, NotVA if any certified outside Q*, else Inconclusive."""
    if any(f.tag in ("zero", "irrational") for f in freqs):
        return NOT_VIRTUALLY_ABELIAN
    if any(f.tag == "undetermined" for f in freqs):
        return INCONCLUSIVE
    return VIRTUALLY_ABELIAN


def check_ve2_alpha(theta: Scalar, w_alpha: Freq, w_gamma: Freq) -> Verdict:
    """Lemma criterion for VE_{2,alpha}^gamma.

    Virtually Abelian iff theta = 0, or theta != 0 and both frequencies are
    nonzero rationals.
    """
    if scalar_is_zero(theta):
        return Verdict(VIRTUALLY_ABELIAN, None, 2)
    status = _freq_status([w_alpha, w_gamma])
    if status == VIRTUALLY_ABELIAN:
        return Verdict(VIRTUALLY_ABELIAN, None, 2)
    witness = {
        "kind": "ve2_alpha",
        "theta": _scalar_repr(theta),
        "freq_tags": [w_alpha.tag, w_gamma.tag],
        "frequencies": [w_alpha.describe(), w_gamma.describe()],
    }
    if status == NOT_VIRTUALLY_ABELIAN:
        witness["integral"] = obstructing_integral([w_alpha, w_gamma], kind="ve2_alpha")
    return Verdict(status, witness, 2)


def check_ex2(theta: Scalar, w_alpha: Freq, w_beta: Freq, w_gamma: Freq) -> Verdict:
    """Lemma criterion for EX_{2,(alpha,beta)}^gamma (three frequencies)."""
    if scalar_is_zero(theta):
        return Verdict(VIRTUALLY_ABELIAN, None, 2)
    status = _freq_status([w_alpha, w_beta, w_gamma])
    if status == VIRTUALLY_ABELIAN:
        return Verdict(VIRTUALLY_ABELIAN, None, 2)
    witness = {
        "kind": "ex2",
        "theta": _scalar_repr(theta),
        "freq_tags": [w_alpha.tag, w_beta.tag, w_gamma.tag],
        "frequencies": [w_alpha.describe(), w_beta.describe(), w_gamma.describe()],
    }
    if status == NOT_VIRTUALLY_ABELIAN:
        witness["integral"] = obstructing_integral([w_alpha, w_beta, w_gamma], kind="ex2")
    return Verdict(status, witness, 2)


# ---------------------------------------------------------------------------
# The integral route: re-derive the criteria from second-level integrals
# ---------------------------------------------------------------------------


def _second_level_specs(freqs: Sequence[Freq], kind: str):
    """Integral specs (d, mu) generated by the subsystem's second level.

    The forcing span is the symmetric square of the first-order solution
    spaces; multiplying by the Wronskian rows contributes t^d (zero
    frequency) or e^(+-i w_gamma t).  Every spec is int t^d e^(i mu t)/sin dt.
    """
    if kind == "ve2_alpha":
        w_a, w_g = freqs
        if w_a.tag == "zero":
            b_parts = [(d, FreqCombo.zero()) for d in (0, 1, 2)]
        else:
            combos = [FreqCombo.from_freq(w_a, m) for m in (2, 0, -2)]
            b_parts = [(0, c) for c in combos]
    else:
        w_a, w_b, w_g = freqs
        az, bz = w_a.tag == "zero", w_b.tag == "zero"
        if az and bz:
            b_parts = [(d, FreqCombo.zero()) for d in (0, 1, 2)]
        elif az or bz:
            live = w_b if az else w_a
            combos = [FreqCombo.from_freq(live, m) for m in (1, -1)]
            b_parts = [(d, c) for d in (0, 1) for c in combos]
        else:
            b_parts = [
                (0, FreqCombo.from_freq(w_a, sa) + FreqCombo.from_freq(w_b, sb))
                for sa in (1, -1)
                for sb in (1, -1)
                if FreqCombo.from_freq(w_a, sa) is not None
                and FreqCombo.from_freq(w_b, sb) is not None
            ]
    if any(c is None for _, c in b_parts):
        return None
    if w_g.tag == "zero":
        mults = [(d, FreqCombo.zero()) for d in (0, 1)]
    else:
        mg = [FreqCombo.from_freq(w_g, s) for s in (1, -1)]
        if any(c is None for c in mg):
            return None
        mults = [(0, c) for c in mg]
    specs = []
    for db, cb in b_parts:
        for dm, cm in mults:
            specs.append((db + dm, cb + cm))
    return specs


def obstructing_integral(freqs: Sequence[Freq], kind: str) -> Optional[dict]:
    """First non-benign second-level integral, as a machine-readable spec.

    A spec t^d e^(i mu t)/sin obstructs through the additive lemma when
    d >= 1 (then t lies in the first-order extension and the primitive must
    be meromorphic, which the nonzero monodromy jump refutes) and through
    the multiplicative lemma when mu is irrational (then T_mu would have to
    be meromorphic, refuted by the order-1 classifier).
    """
    specs = _second_level_specs(freqs, kind)
    if specs is None:
        return None
    for d, mu in specs:
        if d >= 1:
            w = mu.approx()
            jump = trig.monodromy_jump(lambda t: t**d * _cexp(w, t), 1)
            if abs(jump) > 0:
                kind_name = "P" if not mu.parts else "M"
                return {
                    "type": kind_name,
                    "d": d,
                    "omega": mu.describe(),
                    "jump_at_pi": [jump.real, jump.imag],
                    "reason": "additive: t in L1, primitive not meromorphic",
                }
        elif not mu.is_rational():
            verdict = trig.classify_meromorphy(1, mu.approx())
            if not verdict.meromorphic:
                return {
                    "type": "T",
                    "d": 0,
                    "omega": mu.describe(),
                    "reason": "multiplicative: omega not rational, T_omega not meromorphic",
                }
    return None


def _cexp(w: complex, t: complex) -> complex:
    import cmath

    return cmath.exp(1j * w * t)


def verdict_via_integrals(theta: Scalar, freqs: Sequence[Freq], kind: str) -> Verdict:
    """Independent re-derivation of the order-2 criteria from integral specs.

    theta = 0 or an all-rational frequency tuple leaves only first-level
    integrals over a finite extension (vector-group case): virtually Abelian.
    Otherwise the first obstructing spec decides.
    """
    if scalar_is_zero(theta):
        return Verdict(VIRTUALLY_ABELIAN, None, 2)
    if any(f.tag == "undetermined" for f in freqs):
        return Verdict(INCONCLUSIVE, None, 2)
    if all(f.tag == "rational" for f in freqs):
        return Verdict(VIRTUALLY_ABELIAN, None, 2)
    spec = obstructing_integral(freqs, kind)
    if spec is None:
        return Verdict(INCONCLUSIVE, None, 2)
    return Verdict(NOT_VIRTUALLY_ABELIAN, {"kind": kind, "integral": spec}, 2)


# ---------------------------------------------------------------------------
# Full VE_2 verdict
# ---------------------------------------------------------------------------


def _scalar_repr(x: Scalar) -> str:
    return str(x) if isinstance(x, QC) else repr(complex(x))


def ve2_check_table(frame: EigenFrame) -> List[dict]:
    """All subsystem checks in deterministic scan order.

    For each gamma ascending: the diagonal checks (alpha, gamma), then the
    cross checks (alpha < beta, gamma).  Indices are reported 1-based.
    """
    n = frame.V.n
    tensors = ForceTensors.from_frame(frame)
    freqs = frame.freqs
    rows: List[dict] = []
    for g in range(n):
        for a in range(n):
            beta = tuple((2 if j == a else 0) for j in range(n))
            theta = tensors.value(g, beta)
            v = check_ve2_alpha(theta, freqs[a], freqs[g])
            rows.append(
                {
                    "system": "VE2_alpha",
                    "alpha": a + 1,
                    "gamma": g + 1,
                    "theta": _scalar_repr(theta),
                    "status": v.status,
                    "witness": v.witness,
                }
            )
        for a in range(n):
            for b in range(a + 1, n):
                beta = tuple((1 if j in (a, b) else 0) for j in range(n))
                theta = tensors.value(g, beta)
                v = check_ex2(theta, freqs[a], freqs[b], freqs[g])
                rows.append(
                    {
                        "system": "EX2",
                        "alpha": a + 1,
                        "beta": b + 1,
                        "gamma": g + 1,
                        "theta": _scalar_repr(theta),
                        "status": v.status,
                        "witness": v.witness,
                    }
                )
    return rows


def verdict_ve2(V: HomogeneousPotential, dd: DarbouxData) -> Verdict:
    """Aggregate the order-2 criteria over all subsystems.

    NotVirtuallyAbelian dominates, then Inconclusive; the witness is the
    first failing check in scan order.
    """
    if V.k != 2:
        raise ValueError("verdict_ve2 applies to k = 2")
    if not dd.normalized:
        raise ValueError("normalize_darboux before verdict_ve2")
    frame = eigenframe(V, dd, d_last=True)
    return verdict_from_table(ve2_check_table(frame))


def verdict_from_table(rows: Sequence[dict]) -> Verdict:
    worst = VIRTUALLY_ABELIAN
    witness: Optional[dict] = None
    for row in rows:
        if _STATUS_RANK[row["status"]] < _STATUS_RANK[worst]:
            worst = row["status"]
            witness = {
                "system": row["system"],
                "alpha": row["alpha"],
                "gamma": row["gamma"],
                **({"beta": row["beta"]} if "beta" in row else {}),
                "theta": row["theta"],
                "detail": row["witness"],
            }
            if worst == NOT_VIRTUALLY_ABELIAN:
                break
    return Verdict(worst, witness, 2)


# ---------------------------------------------------------------------------
# Inductive analysis (non-resonant case)
# ---------------------------------------------------------------------------


def inductive_analysis(
    V: HomogeneousPotential,
    dd: DarbouxData,
    p_max: int,
    assert_independence: bool = False,
) -> Tuple[Verdict, Optional[Certificate]]:
    """Order-by-order xi-vanishing analysis under Z-independent frequencies.

    For p = 2..p_max, any nonzero xi^j_alpha with (j, alpha) != (n, (0..0,p))
    gives NotVirtuallyAbelian with that entry as witness; the distinguished
    entry is pinned to zero by the Euler chain, whose values are recorded in
    the certificate.  Requires gamma = 1, a diagonalizable Hessian, and the
    Darboux direction last (omega_n = 1).
    """
    if V.k != 2:
        raise ValueError("inductive_analysis applies to k = 2")
    if not dd.normalized:
        raise ValueError("normalize_darboux before inductive_analysis")
    frame = eigenframe(V, dd, d_last=True)
    n = V.n
    resonance = classify_resonance(frame.freqs, assert_independence)
    if not resonance.independence_established():
        raise NonResonanceNotEstablished(
            f"Z-linear independence is {resonance.z_linear_independent}; "
            "assert it explicitly if it holds"
        )
    lam_last = frame.lam[-1]
    if isinstance(lam_last, QC):
        if lam_last != QC(1):
            raise ValueError("normalized k = 2 frame must end with eigenvalue 1")
    tensors = ForceTensors.from_frame(frame)
    tol = tensors.tol
    euler: Dict[int, str] = {}
    pure_checked: List[int] = []
    for p in range(2, p_max + 1):
        pure = tuple(0 if j < n - 1 else p for j in range(n))
        for j in range(n):
            for alpha in multi_indices(n, p):
                val = tensors.value(j, alpha)
                if scalar_is_zero(val, tol):
                    continue
                xi = (
                    val * QC(Fraction(1, mi_factorial(alpha)))
                    if isinstance(val, QC)
                    else val / mi_factorial(alpha)
                )
                if j == n - 1 and alpha == pure:
                    raise ArithmeticError(
                        "Euler chain violated: distinguished xi entry is nonzero "
                        f"at order {p}; input is not a homogeneous degree-2 potential"
                    )
                witness = {
                    "order": p,
                    "j": j + 1,
                    "alpha": list(alpha),
                    "xi": _scalar_repr(xi),
                    "reason": "nonzero simple-form coefficient off the distinguished entry",
                }
                return Verdict(NOT_VIRTUALLY_ABELIAN, witness, p), None
        pure_checked.append(p)
    # Euler chain d^(p+1)_n W(d~) = (2-p) d^p_n W(d~), seeded by the zero cubic
    w = frame.W.as_ratfunc()
    dvals: Dict[int, Scalar] = {}
    f = w
    for _ in range(2):
        f = f.diff(n - 1)
    dvals[2] = f.eval(frame.d_new, tol)
    for p in range(3, p_max + 2):
        f = f.diff(n - 1)
        dvals[p] = f.eval(frame.d_new, tol)
    for p in range(2, p_max + 1):
        lhs = dvals[p + 1]
        rhs = dvals[p] * (2 - p)
        diff = lhs - rhs
        if (isinstance(diff, QC) and bool(diff)) or (
            not isinstance(diff, QC) and abs(diff) > max(tol, 1e-9)
        ):
            raise ArithmeticError(f"Euler descent failed at order {p}")
    for p, v in dvals.items():
        euler[p] = _scalar_repr(v)
    cert = Certificate(
        p_max=p_max,
        xi_zero_orders=tuple(pure_checked),
        euler_chain=euler,
        resonance=resonance,
    )
    return Verdict(VIRTUALLY_ABELIAN, None, p_max), cert
