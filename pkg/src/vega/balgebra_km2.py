"""Constructive solver for all variational equations of degree k = -2.

Work happens in the algebra B = span{I^m E_w} with the multiplication rule
I^m E_w * I^m' E_w' = I^(m+m') E_(w+w'), where per energy regime

    e = 0:   phi = sqrt(2t),        E_w = t^w,                 I = log t
    e != 0:  phi = sqrt(e t^2-1/e), E_w = ((et-1)/(et+1))^w,   I = log((et-1)/(et+1))

and the only relations the calculus needs are Edot_w = (2w/phi^2) E_w and
Idot = 2/phi^2 -- identical in both regimes, so all symbolic operations are
regime-independent and the regime only matters for evaluation.

For x = phi*b with b in B one computes xdd = phi^(-3) (4 D^2 b - b) where D
is the derivation D(I^m E_w) = m I^(m-1) E_w + w I^m E_w.  Substituting into
xdd = -(lambda/phi^4) x + f/phi^3 with lambda = 1 - 4 w^2 collapses to the
pure B-identity

    4 D^2 b - (1 - lambda) b = f,

which is this module's master residual: every solver output must reduce it
to the zero element of B, exactly.

The variation-of-constants formulas are derived from the Wronskians of
{phi, phi*I} (det 2) and {phi E_w, phi E_-w} (det -4w); the printed source
formulas differ by a sign/factor that the residual identity pins down.
"""

from __future__ import annotations

import cmath
import itertools
import math
import warnings
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .darboux import DarbouxData, EigenFrame, eigenframe
from .polycore import (
    QC,
    HomogeneousPotential,
    Scalar,
    exact_sqrt_qc,
    mi_factorial,
    scalar_is_zero,
    scalar_to_complex,
)
from .vebuild import ForceTensors


class RegimeMismatch(ValueError):
    pass


class BranchPoint(ValueError):
    pass


class ExactOmegaUnavailable(ValueError):
    """lambda = 1 - 4 w^2 has no Gaussian-rational root w; use float mode."""


# ---------------------------------------------------------------------------
# Energy regimes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Regime:
    """ZeroEnergy (e = 0) or NonzeroEnergy(e)."""

    e: Optional[Scalar]  # None encodes e = 0

    @classmethod
    def zero(cls) -> "Regime":
        return cls(None)

    @classmethod
    def nonzero(cls, e: Scalar) -> "Regime":
        if scalar_is_zero(e):
            raise ValueError("nonzero regime needs e != 0")
        return cls(e)

    @property
    def is_zero_energy(self) -> bool:
        return self.e is None

    def label(self) -> str:
        return "e=0" if self.e is None else f"e={self.e}"


@dataclass(frozen=True)
class PhiBasis:
    """Evaluable handles for phi, phidot, 1/phi^2, I and E_w in one regime."""

    regime: Regime
    phi: Callable[[complex], complex]
    phidot: Callable[[complex], complex]
    inv_phi2: Callable[[complex], complex]
    I: Callable[[complex], complex]
    E: Callable[[complex, complex], complex]  # (omega, t)


def phi_basis(regime: Regime) -> PhiBasis:
    if regime.is_zero_energy:

        def guard(t: complex):
            if t == 0:
                raise BranchPoint("t = 0 is a branch point in the e = 0 regime")

        def phi(t):
            guard(t)
            return cmath.sqrt(2 * t)

        def phidot(t):
            guard(t)
            return 1 / cmath.sqrt(2 * t)

        def inv_phi2(t):
            guard(t)
            return 1 / (2 * t)

        def ival(t):
            guard(t)
            return cmath.log(t)

        def eval_e(w, t):
            guard(t)
            return cmath.exp(w * cmath.log(t))

        return PhiBasis(regime, phi, phidot, inv_phi2, ival, eval_e)

    e = scalar_to_complex(regime.e)

    def guard(t: complex):
        if e * t - 1 == 0 or e * t + 1 == 0:
            raise BranchPoint("t = +-1/e is a branch point in the e != 0 regime")

    def phi(t):
        guard(t)
        return cmath.sqrt(e * t * t - 1 / e)

    def phidot(t):
        guard(t)
        return e * t / cmath.sqrt(e * t * t - 1 / e)

    def inv_phi2(t):
        guard(t)
        return 1 / (e * t * t - 1 / e)

    def ratio(t):
        return (e * t - 1) / (e * t + 1)

    def ival(t):
        guard(t)
        return cmath.log(ratio(t))

    def eval_e(w, t):
        guard(t)
        return cmath.exp(w * cmath.log(ratio(t)))

    return PhiBasis(regime, phi, phidot, inv_phi2, ival, eval_e)


# ---------------------------------------------------------------------------
# The algebra B
# ---------------------------------------------------------------------------

_KeyT = Tuple[int, Scalar]  # (m, omega)


class BElement:
    """Finite C-linear combination of I^m E_w, tied to an energy regime.

    Exact elements carry QC keys and coefficients; float elements carry
    complex ones, and omega keys closer than tol are merged with a warning
    (key collisions must be deterministic for E_(w+w') bookkeeping).
    """

    __slots__ = ("regime", "terms", "tol")

    def __init__(self, regime: Regime, terms: Dict[_KeyT, Scalar] | None = None, tol: float = 1e-9):
        self.regime = regime
        self.tol = tol
        canon: Dict[_KeyT, Scalar] = {}
        for (m, w), c in (terms or {}).items():
            if scalar_is_zero(c, 0.0):
                continue
            if m < 0:
                raise ValueError("I-power must be non-negative")
            key = (m, w if isinstance(w, QC) else complex(w))
            canon[key] = canon.get(key, 0) + c
        if any(not isinstance(w, QC) for _, w in canon):
            canon = self._merge_close(canon, tol)
        self.terms = {k: v for k, v in canon.items() if not scalar_is_zero(v, 0.0)}

    @staticmethod
    def _merge_close(terms: Dict[_KeyT, Scalar], tol: float) -> Dict[_KeyT, Scalar]:
        out: Dict[_KeyT, Scalar] = {}
        for (m, w), c in sorted(
            terms.items(), key=lambda kv: (kv[0][0], scalar_to_complex(kv[0][1]).real,
                                           scalar_to_complex(kv[0][1]).imag)
        ):
            wz = scalar_to_complex(w)
            hit = None
            for (m2, w2) in out:
                if m2 == m and abs(scalar_to_complex(w2) - wz) <= tol:
                    hit = (m2, w2)
                    break
            if hit is not None:
                if hit[1] != w:
                    warnings.warn(f"merging omega keys {hit[1]} and {w} within tol={tol}")
                out[hit] = out[hit] + c
            else:
                out[(m, wz)] = c
        return out

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, regime: Regime) -> "BElement":
        return cls(regime, {})

    @classmethod
    def unit(cls, regime: Regime) -> "BElement":
        return cls(regime, {(0, QC(0)): QC(1)})

    @classmethod
    def ivar(cls, regime: Regime) -> "BElement":
        return cls(regime, {(1, QC(0)): QC(1)})

    @classmethod
    def expo(cls, regime: Regime, omega: Scalar) -> "BElement":
        one = QC(1) if isinstance(omega, QC) else 1 + 0j
        return cls(regime, {(0, omega): one})

    # -- algebra -------------------------------------------------------------
    def _check(self, other: "BElement"):
        if self.regime != other.regime:
            raise RegimeMismatch("operands live in different energy regimes")

    def __add__(self, other: "BElement") -> "BElement":
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return BElement(self.regime, out, self.tol)

    def __sub__(self, other: "BElement") -> "BElement":
        return self + other.scale(-1)

    def scale(self, c) -> "BElement":
        if isinstance(c, int):
            c = QC(c) if self.is_exact() else complex(c)
        return BElement(self.regime, {k: v * c for k, v in self.terms.items()}, self.tol)

    def __mul__(self, other: "BElement") -> "BElement":
        self._check(other)
        out: Dict[_KeyT, Scalar] = {}
        for (m1, w1), c1 in self.terms.items():
            for (m2, w2), c2 in other.terms.items():
                key = (m1 + m2, w1 + w2)
                out[key] = out.get(key, 0) + c1 * c2
        return BElement(self.regime, out, self.tol)

    def __pow__(self, k: int) -> "BElement":
        out = BElement.unit(self.regime)
        for _ in range(k):
            out = out * self
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def is_exact(self) -> bool:
        return all(isinstance(w, QC) and isinstance(c, QC) for (_, w), c in self.terms.items())

    def max_abs(self) -> float:
        return max((abs(scalar_to_complex(c)) for c in self.terms.values()), default=0.0)

    def items_sorted(self):
        def key(kv):
            (m, w), _ = kv
            wz = scalar_to_complex(w)
            return (m, wz.real, wz.imag)

        return sorted(self.terms.items(), key=key)

    def delta(self) -> "BElement":
        """The derivation D with D(I^m E_w) = m I^(m-1) E_w + w I^m E_w.

        The time derivative of b in B is (2/phi^2) * D(b).
        """
        out: Dict[_KeyT, Scalar] = {}
        for (m, w), c in self.terms.items():
            if m:
                k1 = (m - 1, w)
                out[k1] = out.get(k1, 0) + c * m
            if not scalar_is_zero(w, 0.0):
                k2 = (m, w)
                out[k2] = out.get(k2, 0) + c * w
        return BElement(self.regime, out, self.tol)

    def eval(self, t: complex, basis: PhiBasis | None = None) -> complex:
        if basis is None:
            basis = phi_basis(self.regime)
        total = 0j
        for (m, w), c in self.items_sorted():
            total += (
                scalar_to_complex(c)
                * basis.I(t) ** m
                * basis.E(scalar_to_complex(w), t)
            )
        return total

    def __eq__(self, other):
        return (
            isinstance(other, BElement)
            and self.regime == other.regime
            and self.terms == other.terms
        )

    def __repr__(self):
        if not self.terms:
            return "B(0)"
        bits = []
        for (m, w), c in self.items_sorted():
            part = f"({c})"
            if m:
                part += f"*I^{m}"
            if not scalar_is_zero(w, 0.0):
                part += f"*E[{w}]"
            bits.append(part)
        return "B(" + " + ".join(bits) + ")"


def b_mul(a: BElement, b: BElement) -> BElement:
    """Product in B under I^m E_w * I^m' E_w' = I^(m+m') E_(w+w')."""
    return a * b


# ---------------------------------------------------------------------------
# Integration of b/phi^2
# ---------------------------------------------------------------------------


def integrate_over_phi2(b: BElement) -> BElement:
    """Phi := int b/phi^2 dt, closed in B.

    Term rules: int I^m/phi^2 = I^(m+1)/(2(m+1)); for w != 0,
    2w Phi^(m)_w = I^m E_w - 2m Phi^(m-1)_w with Phi^(0)_w = E_w/(2w).
    Satisfies 2 D(Phi(b)) = b exactly.
    """
    out = BElement.zero(b.regime)
    for (m, w), c in b.terms.items():
        out = out + _phi_term(b.regime, m, w, b.tol).scale(c)
    return out


def _phi_term(regime: Regime, m: int, w: Scalar, tol: float) -> BElement:
    exact = isinstance(w, QC)
    if scalar_is_zero(w, 0.0):
        coeff = QC(Fraction(1, 2 * (m + 1))) if exact else 1.0 / (2 * (m + 1))
        return BElement(regime, {(m + 1, w): coeff}, tol)
    inv2w = (QC(2) * w).inv() if exact else 1.0 / (2 * w)
    if m == 0:
        return BElement(regime, {(0, w): inv2w}, tol)
    lower = _phi_term(regime, m - 1, w, tol)
    head = BElement(regime, {(m, w): inv2w}, tol)
    return head + lower.scale(-(inv2w * (2 * m)) if exact else -inv2w * 2 * m)


# ---------------------------------------------------------------------------
# Scalar helpers
# ---------------------------------------------------------------------------


def omega_from_lambda(lam: Scalar) -> Scalar:
    """Solve lambda = 1 - 4 w^2 for w (principal / Gaussian-rational root).

    The basis {E_w, E_-w} is symmetric in +-w, so the branch choice is inert.
    """
    if isinstance(lam, QC):
        target = (QC(1) - lam) * QC(Fraction(1, 4))
        w = exact_sqrt_qc(target)
        if w is None:
            raise ExactOmegaUnavailable(
                f"(1 - lambda)/4 = {target} is not a square in Q(i); use float mode"
            )
        return w
    return cmath.sqrt((1 - complex(lam)) / 4)


def symbolic_residual(b: BElement, lam: Scalar, f: BElement) -> BElement:
    """4 D^2 b - (1 - lambda) b - f; zero iff phi*b solves the forced equation."""
    one_minus = (QC(1) - lam) if isinstance(lam, QC) else (1 - complex(lam))
    return b.delta().delta().scale(4) - b.scale(one_minus) - f


# ---------------------------------------------------------------------------
# Solvers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomogeneousBasis:
    omega: Scalar
    cofactors: Tuple[BElement, BElement]  # phi-cofactors of the two solutions


def solve_homogeneous(lam: Scalar, regime: Regime) -> HomogeneousBasis:
    """Solution space of xdd = -(lambda/phi^4) x as phi-cofactors.

    w = 0 (lambda = 1): {1, I}; otherwise {E_w, E_-w}.
    """
    w = omega_from_lambda(lam)
    if scalar_is_zero(w, 0.0):
        return HomogeneousBasis(w, (BElement.unit(regime), BElement.ivar(regime)))
    neg = -w if isinstance(w, QC) else -w
    return HomogeneousBasis(w, (BElement.expo(regime, w), BElement.expo(regime, neg)))


def solve_forced(lam: Scalar, b: BElement, regime: Regime) -> BElement:
    """A particular phi-cofactor of xdd = -(lambda/phi^4) x + b/phi^3.

    Variation of constants over the homogeneous basis; the Wronskian of
    {phi, phi I} is 2 and of {phi E_w, phi E_-w} is -4w, giving
        w = 0:   c1' = -b I/(2 phi^2),        c2' = b/(2 phi^2)
        w != 0:  c1' = b E_-w/(4 w phi^2),    c2' = -b E_w/(4 w phi^2)
    and x = phi (c1 B1 + c2 B2).  Output verified by the master residual.
    """
    if b.is_zero():
        return BElement.zero(regime)
    w = omega_from_lambda(lam)
    exact = isinstance(w, QC) and b.is_exact()
    if scalar_is_zero(w, 0.0):
        half = QC(Fraction(1, 2)) if exact else 0.5
        c1 = integrate_over_phi2(b * BElement.ivar(regime)).scale(-half)
        c2 = integrate_over_phi2(b).scale(half)
        return c1 + c2 * BElement.ivar(regime)
    inv4w = (QC(4) * w).inv() if isinstance(w, QC) else 1.0 / (4 * w)
    e_plus = BElement.expo(regime, w)
    e_minus = BElement.expo(regime, -w)
    c1 = integrate_over_phi2(b * e_minus).scale(inv4w)
    c2 = integrate_over_phi2(b * e_plus).scale(-inv4w)
    return c1 * e_plus + c2 * e_minus


def solve_jordan_chain(
    lam: Scalar, chain_length: int, regime: Regime, combo: Tuple[int, int] = (1, 1)
) -> List[BElement]:
    """Cofactors down a Jordan block: xdd = -(lambda/phi^4) x, then each
    next component forced by the previous via + x_prev/phi^4 = b_prev/phi^3.

    chain_length = 1 reduces to a homogeneous solution (the combo of the
    basis cofactors).  Every output lies in B, certified by the residual.
    """
    if chain_length < 1:
        raise ValueError("chain_length must be >= 1")
    basis = solve_homogeneous(lam, regime)
    head = basis.cofactors[0].scale(combo[0]) + basis.cofactors[1].scale(combo[1])
    out = [head]
    for _ in range(chain_length - 1):
        out.append(solve_forced(lam, out[-1], regime))
    return out


# ---------------------------------------------------------------------------
# Full chain solving for k = -2
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainSolutionKm2:
    """Per-order phi-cofactor tables certifying Sol(VE_p) subset phi*B^n.

    solutions[p][i] is the cofactor B of the chosen solution component
    q_{i,p} = phi * B; forcing[p][i] is the effective forcing cofactor its
    equation carries (assembled R_p plus any Jordan coupling), so that
    4 D^2 B - (1 - lambda_i) B = forcing is the recorded certificate.
    """

    frame: EigenFrame
    regime: Regime
    omegas: Tuple[Scalar, ...]
    couplings: Tuple[int, ...]  # 1 if component i is forced by component i+1
    homogeneous: Tuple[HomogeneousBasis, ...]
    solutions: Dict[int, List[BElement]]
    forcing: Dict[int, List[BElement]]

    def residual(self, p: int, i: int) -> BElement:
        return symbolic_residual(self.solutions[p][i], self.frame.lam[i], self.forcing[p][i])

    def all_residuals_zero(self) -> bool:
        return all(
            self.residual(p, i).is_zero()
            for p in self.solutions
            for i in range(len(self.solutions[p]))
        )


def _block_couplings(frame: EigenFrame) -> Tuple[int, ...]:
    out: List[int] = []
    for _, size in frame.jordan_blocks:
        out.extend([1] * (size - 1))
        out.append(0)
    if len(out) != frame.V.n:
        # float frames without block data: assume diagonal
        out = [0] * frame.V.n
    return tuple(out)


def solve_ve_chain_km2(
    V: HomogeneousPotential,
    dd: DarbouxData,
    p_max: int,
    regime: Regime,
    combo: Tuple[int, int] = (1, 1),
) -> ChainSolutionKm2:
    """Solve VE_1..VE_p_max in closed form inside phi*B^n.

    Order p carries R_p assembled from the force derivative tensors applied
    to the lower-order cofactors (phi powers cancel identically for k = -2),
    then each component is solved by variation of constants, walking Jordan
    blocks bottom-up so couplings contribute -B_(i+1) to the forcing.
    """
    if V.k != -2:
        raise ValueError("solve_ve_chain_km2 applies to k = -2")
    if not dd.normalized:
        raise ValueError("normalize_darboux before solving the chain")
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    frame = eigenframe(V, dd, d_last=False)
    n = V.n
    tensors = ForceTensors.from_frame(frame)
    couplings = _block_couplings(frame)
    omegas = tuple(omega_from_lambda(l) for l in frame.lam)
    homogeneous = tuple(solve_homogeneous(l, regime) for l in frame.lam)

    solutions: Dict[int, List[BElement]] = {}
    forcing: Dict[int, List[BElement]] = {}

    # order 1: generic combos, walking each Jordan block bottom-up
    b1: List[Optional[BElement]] = [None] * n
    f1: List[BElement] = [BElement.zero(regime) for _ in range(n)]
    for i in range(n - 1, -1, -1):
        base = homogeneous[i]
        head = base.cofactors[0].scale(combo[0]) + base.cofactors[1].scale(combo[1])
        if couplings[i]:
            f1[i] = b1[i + 1].scale(-1)
            b1[i] = solve_forced(frame.lam[i], f1[i], regime) + head
        else:
            b1[i] = head
    solutions[1] = [b for b in b1]
    forcing[1] = f1

    for p in range(2, p_max + 1):
        r_p: List[BElement] = [BElement.zero(regime) for _ in range(n)]
        pairs = [(a, m) for m in range(1, p) for a in range(n)]
        for s in range(2, p + 1):
            for sel in itertools.combinations_with_replacement(pairs, s):
                if sum(m for (_, m) in sel) != p:
                    continue
                counts = Counter(sel)
                beta = [0] * n
                prod = BElement.unit(regime)
                denom = 1
                for (a, m), e in counts.items():
                    beta[a] += e
                    denom *= math.factorial(e)
                    prod = prod * (solutions[m][a] ** e)
                beta_t = tuple(beta)
                for j in range(n):
                    val = tensors.value(j, beta_t)
                    if scalar_is_zero(val, tensors.tol):
                        continue
                    coeff = (
                        val * QC(Fraction(1, denom)) if isinstance(val, QC) else val / denom
                    )
                    r_p[j] = r_p[j] + prod.scale(coeff)
        b_p: List[Optional[BElement]] = [None] * n
        f_p: List[BElement] = [BElement.zero(regime) for _ in range(n)]
        for i in range(n - 1, -1, -1):
            f_eff = r_p[i]
            if couplings[i]:
                f_eff = f_eff - b_p[i + 1]
            f_p[i] = f_eff
            b_p[i] = solve_forced(frame.lam[i], f_eff, regime)
        solutions[p] = [b for b in b_p]
        forcing[p] = f_p

    return ChainSolutionKm2(
        frame=frame,
        regime=regime,
        omegas=omegas,
        couplings=couplings,
        homogeneous=homogeneous,
        solutions=solutions,
        forcing=forcing,
    )


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def eval_belement(b: BElement, t: complex, regime: Regime | None = None) -> complex:
    """Numerical value on the principal branch; raises BranchPoint at t = 0
    (e = 0) or t = +-1/e (e != 0)."""
    if regime is not None and regime != b.regime:
        raise RegimeMismatch("element does not belong to the requested regime")
    return b.eval(t)
