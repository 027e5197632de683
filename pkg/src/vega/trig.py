"""Trigonometric integrals T_n^(omega) = int exp(i*omega*t)/sin^n(t) dt.

The reduction recurrence lowers n by 2 with an explicit boundary term, the
classifier decides meromorphy of the primitive on all of C, and the additive
monodromy of int f/sin around t = n*pi is 2*pi*i*f(n*pi) up to loop
orientation.  An exact Laurent-residue computation at t = 0 serves as the
independent cross-check of the classifier: the primitive is meromorphic iff
the residue of the integrand vanishes (it scales by a unit factor between
the poles n*pi, so vanishing at one pole is vanishing at all).

Everything is exact for rational omega (Gaussian-rational coefficients);
float omega falls back to complex arithmetic with a tolerance.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple, Union

from .polycore import QC, I_UNIT, Scalar, scalar_is_zero, scalar_to_complex


class InvalidOrder(ValueError):
    """The reduction step needs n > 2."""


def _as_omega(omega) -> Scalar:
    if isinstance(omega, QC):
        return omega
    if isinstance(omega, (int, Fraction)):
        return QC(omega)
    return complex(omega)


def _i_times(omega: Scalar) -> Scalar:
    return I_UNIT * omega if isinstance(omega, QC) else 1j * omega


# ---------------------------------------------------------------------------
# A tiny closed algebra: sums of c * exp(i w t) * sin^a(t) * cos^b(t), b in {0,1}
# ---------------------------------------------------------------------------


class TrigExpr:
    """Finite sums c * e^(i*omega*t) * sin^a(t) * cos^b(t) with a in Z, b in {0,1}.

    cos^2 is rewritten as 1 - sin^2 on construction, which makes the
    representation canonical and the time derivative stay inside the class.
    """

    __slots__ = ("omega", "terms")

    def __init__(self, omega, terms: Dict[Tuple[int, int], Scalar] | None = None):
        self.omega = _as_omega(omega)
        canon: Dict[Tuple[int, int], Scalar] = {}

        def put(a: int, b: int, c: Scalar):
            if scalar_is_zero(c):
                return
            if b >= 2:
                put(a, b - 2, c)
                put(a + 2, b - 2, -c)
                return
            key = (a, b)
            s = canon.get(key, 0) + c
            if scalar_is_zero(s):
                canon.pop(key, None)
            else:
                canon[key] = s

        for (a, b), c in (terms or {}).items():
            put(a, b, c)
        self.terms = canon

    def __add__(self, other: "TrigExpr") -> "TrigExpr":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return TrigExpr(self.omega, out)

    def scale(self, c: Scalar) -> "TrigExpr":
        return TrigExpr(self.omega, {k: v * c for k, v in self.terms.items()})

    def __sub__(self, other: "TrigExpr") -> "TrigExpr":
        return self + other.scale(QC(-1) if isinstance(self.omega, QC) else -1.0)

    def derivative(self) -> "TrigExpr":
        iw = _i_times(self.omega)
        out: Dict[Tuple[int, int], Scalar] = {}

        def add(a, b, c):
            out[(a, b)] = out.get((a, b), 0) + c

        for (a, b), c in self.terms.items():
            add(a, b, c * iw)
            if a:
                add(a - 1, b + 1, c * a)
            if b:
                add(a + 1, b - 1, -(c * b))
        return TrigExpr(self.omega, out)

    def is_zero(self) -> bool:
        return not self.terms

    def eval(self, t: complex) -> complex:
        w = scalar_to_complex(self.omega)
        total = 0j
        for (a, b), c in self.terms.items():
            total += (
                scalar_to_complex(c)
                * cmath.exp(1j * w * t)
                * cmath.sin(t) ** a
                * cmath.cos(t) ** b
            )
        return total

    def items_sorted(self):
        return sorted(self.terms.items())

    def __repr__(self):
        if not self.terms:
            return "TrigExpr(0)"
        bits = [f"({c})*sin^{a}*cos^{b}" for (a, b), c in self.items_sorted()]
        return f"e^(i*{self.omega}*t)*[" + " + ".join(bits) + "]"


def exp_over_sin(omega, n: int) -> TrigExpr:
    """The integrand e^(i*omega*t)/sin^n(t) as a TrigExpr."""
    om = _as_omega(omega)
    one = QC(1) if isinstance(om, QC) else 1.0 + 0j
    return TrigExpr(om, {(-n, 0): one})


# ---------------------------------------------------------------------------
# Reduction recurrence
# ---------------------------------------------------------------------------


def recurrence_step(n: int, omega) -> Tuple[TrigExpr, Scalar]:
    """One reduction: T_n = g + c * T_(n-2) for n > 2.

    c = ((n-2)^2 - omega^2) / ((n-1)(n-2)) and g is the boundary term
    -e^(i*omega*t) * (i*omega*sin t + (n-2)*cos t) / ((n-1)(n-2)*sin^(n-1) t),
    returned structurally so it can be differentiated exactly.
    """
    if n <= 2:
        raise InvalidOrder("recurrence_step needs n > 2")
    om = _as_omega(omega)
    A = (n - 1) * (n - 2)
    if isinstance(om, QC):
        c = (QC((n - 2) ** 2) - om * om) / QC(A)
        ainv = QC(Fraction(1, A))
        iw = I_UNIT * om
    else:
        c = ((n - 2) ** 2 - om * om) / A
        ainv = 1.0 / A
        iw = 1j * om
    g = TrigExpr(
        om,
        {
            (1 - (n - 1), 0): -(iw * ainv),
            (-(n - 1), 1): -(ainv * (n - 2)),
        },
    )
    return g, c


@dataclass(frozen=True)
class ReduceResult:
    """Outcome of telescoping T_n down to T_1 (odd n) or T_2 (even n).

    meromorphic_part collects the accumulated boundary terms; c_product is
    the exact coefficient multiplying the tail integral; p is the classifier
    polynomial value whose zero set equals the meromorphy set (for even
    n >= 4 it carries the extra (0^2 - omega^2) factor encoding that the
    tail T_2 is meromorphic only at omega = 0).
    """

    meromorphic_part: TrigExpr
    tail_order: int
    p: Scalar
    c_product: Scalar


def reduce(n: int, omega) -> ReduceResult:
    if n < 1:
        raise InvalidOrder("n must be >= 1")
    om = _as_omega(omega)
    one = QC(1) if isinstance(om, QC) else 1.0 + 0j
    mero = TrigExpr(om)
    prefix = one
    m = n
    while m > 2:
        g, c = recurrence_step(m, om)
        mero = mero + g.scale(prefix)
        prefix = prefix * c
        m -= 2
    tail = m  # 1 or 2
    if n >= 4 and tail == 2:
        p = prefix * (-(om * om))
    elif n == 2:
        p = one
    else:
        p = prefix
    return ReduceResult(meromorphic_part=mero, tail_order=tail, p=p, c_product=prefix)


# ---------------------------------------------------------------------------
# Exact residue oracle
# ---------------------------------------------------------------------------


def residue_at_zero(n: int, omega) -> Scalar:
    """Residue of e^(i*omega*t)/sin^n(t) at t = 0, exact for rational omega.

    Computed from truncated series: the residue is the t^(n-1) coefficient of
    e^(i*omega*t) * (t/sin t)^n.
    """
    om = _as_omega(omega)
    exact = isinstance(om, QC)
    one = QC(1) if exact else 1.0 + 0j
    zero = QC(0) if exact else 0j
    N = n  # need coefficients 0..n-1
    iw = _i_times(om)
    expo: List[Scalar] = []
    term = one
    for k in range(N):
        expo.append(term)
        term = term * iw
        term = term * (QC(Fraction(1, k + 1)) if exact else 1.0 / (k + 1))
    # sin(t)/t truncated
    sinc: List[Scalar] = [zero] * N
    for m2 in range(0, N, 2):
        coeff = Fraction((-1) ** (m2 // 2), math.factorial(m2 + 1))
        sinc[m2] = QC(coeff) if exact else complex(coeff)
    # u = sinc^n (truncated)
    u = [one] + [zero] * (N - 1)
    for _ in range(n):
        nxt = [zero] * N
        for a in range(N):
            if scalar_is_zero(u[a]):
                continue
            for b in range(N - a):
                nxt[a + b] = nxt[a + b] + u[a] * sinc[b]
        u = nxt
    # v = u^{-1} (truncated); u[0] == 1
    v = [one] + [zero] * (N - 1)
    for m in range(1, N):
        acc = zero
        for j in range(1, m + 1):
            acc = acc + u[j] * v[m - j]
        v[m] = -acc
    res = zero
    for k in range(N):
        res = res + expo[k] * v[N - 1 - k]
    return res


# ---------------------------------------------------------------------------
# Meromorphy classifier
# ---------------------------------------------------------------------------


def computed_root_set(n: int) -> Tuple[int, ...]:
    """Integer omega values where T_n^(omega) is meromorphic (reduction-exact set)."""
    if n < 1:
        raise InvalidOrder("n must be >= 1")
    if n == 1:
        return tuple()
    if n % 2 == 0:
        ks = range(0, (n - 2) // 2 + 1)
        roots = sorted({s * 2 * k for k in ks for s in (1, -1)})
        return tuple(roots)
    # odd n: the reduction chain c_1 c_3 ... c_(n-2) vanishes at odd |omega| <= n-2,
    # and the tail T_1 is never meromorphic
    roots = sorted({s * j for j in range(1, n - 1, 2) for s in (1, -1)})
    return tuple(roots)


def paper_stated_root_set(n: int) -> Tuple[int, ...]:
    """The classification table as printed: odd case bound k <= (n-1)/2.

    For odd n this includes +-n, which the reduction zero set does not
    reach; classify_meromorphy reports the discrepancy instead of using it.
    """
    if n < 1:
        raise InvalidOrder("n must be >= 1")
    if n == 1:
        return tuple()
    if n % 2 == 0:
        return computed_root_set(n)
    ks = range(0, (n - 1) // 2 + 1)
    return tuple(sorted({s * (1 + 2 * k) for k in ks for s in (1, -1)}))


@dataclass(frozen=True)
class MeromorphyVerdict:
    meromorphic: bool
    reason: str  # "classifier-even" | "classifier-odd" | "tail-cot" | "lemma-a1-jump"
    witness: Union[Scalar, str, None]
    n: int
    omega_repr: str
    root_set: Tuple[int, ...]
    paper_set_extra: Tuple[int, ...]  # roots the printed table claims beyond root_set


def _omega_as_integer(omega: Scalar, tol: float) -> Optional[int]:
    if isinstance(omega, QC):
        if omega.is_real() and omega.re.denominator == 1:
            return int(omega.re)
        return None
    z = complex(omega)
    r = round(z.real)
    if abs(z.imag) <= tol and abs(z.real - r) <= tol:
        return int(r)
    return None


def classify_meromorphy(n: int, omega, tol: float = 1e-9) -> MeromorphyVerdict:
    """Decide whether the primitive T_n^(omega) is meromorphic on C.

    n = 1: never.  n = 2: iff omega = 0 (then T_2^(0) = -cot t).  Even n >= 4:
    iff omega in {0, +-2, ..., +-(n-2)}.  Odd n >= 3: iff omega in
    {+-1, ..., +-(n-2)} -- the zero set of the reduction product; the printed
    odd-case bound would add +-n, which is reported in paper_set_extra.
    """
    om = _as_omega(omega)
    roots = computed_root_set(n)
    extra = tuple(sorted(set(paper_stated_root_set(n)) - set(roots)))
    z = _omega_as_integer(om, tol)
    om_repr = str(om) if isinstance(om, QC) else repr(complex(om))

    def jump_witness() -> Scalar:
        res = residue_at_zero(n, om)
        return scalar_to_complex(res) * 2j * cmath.pi

    if n == 1:
        return MeromorphyVerdict(False, "lemma-a1-jump", jump_witness(), n, om_repr, roots, extra)
    if n == 2:
        if z == 0:
            return MeromorphyVerdict(True, "tail-cot", "-cot t", n, om_repr, roots, extra)
        return MeromorphyVerdict(False, "lemma-a1-jump", jump_witness(), n, om_repr, roots, extra)
    if z is not None and z in roots:
        reason = "classifier-even" if n % 2 == 0 else "classifier-odd"
        return MeromorphyVerdict(True, reason, z, n, om_repr, roots, extra)
    return MeromorphyVerdict(False, "lemma-a1-jump", jump_witness(), n, om_repr, roots, extra)


# ---------------------------------------------------------------------------
# Monodromy jump of int f/sin
# ---------------------------------------------------------------------------


def monodromy_jump(f: Callable[[complex], complex], n: int) -> complex:
    """Additive monodromy 2*pi*i*f(n*pi) of F = int f/sin around t = n*pi.

    This is the jump for a loop oriented so the residue factor (-1)^n of
    1/sin at n*pi is absorbed; a counterclockwise loop picks up
    (-1)^n * monodromy_jump(f, n).  It vanishes iff the local obstruction
    does, which is the only property the classifier consumes.
    """
    return 2j * math.pi * complex(f(n * math.pi))
