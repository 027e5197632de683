"""Assembly of the variational-equation chain VE_1..VE_p along a Darboux point.

The chain is written in the eigenframe coordinates (see darboux.eigenframe)
and in Taylor-coefficient scaling: the order-p unknown is the coefficient of
eps^p in the expansion q = q0 + sum eps^m z_m, i.e. z_p = q_p / p!.  With
that scaling the forcing of VE_p built purely from first-order solutions has
monomial coefficients exactly xi^j_alpha = (1/alpha!) d^alpha F_j(d), the
"simple form" normalization.  The distinguished order-2 subsystems are
emitted in the presentation with coefficients theta^gamma_{alpha,alpha} and
2*theta^gamma_{alpha,beta} (the q_p = p! z_p scaling of the same equations);
extraction therefore multiplies the chain's order-2 coefficients by 2.

phi-power bookkeeping: a term built from the s-th force derivative carries
phi^(k-1-s); multiplied by s solution factors this reproduces the exponent
k-2-(p-1) of the simple form when all sources have order 1.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .darboux import EigenFrame
from .polycore import (
    QC,
    ForceField,
    MultiIndex,
    RatFunc,
    Scalar,
    derivative_tensor,
    grlex_key,
    mi_factorial,
    mi_unit,
    multi_indices,
    scalar_is_zero,
)


class IndexOutOfRange(ValueError):
    pass


class AlphaEqualsBeta(ValueError):
    pass


class LinearPartMismatch(ValueError):
    pass


# ---------------------------------------------------------------------------
# Systems
# ---------------------------------------------------------------------------

Monomial = Tuple[Tuple[Tuple[int, int], int], ...]  # (((component, source_order), exponent), ...)


@dataclass(frozen=True)
class ForcingTerm:
    """One forcing monomial: coefficient * phi^phi_power * prod z_{a,m}^e."""

    target: int
    coefficient: Scalar
    phi_power: int
    monomial: Monomial

    def sources_first_order_only(self) -> bool:
        return all(m == 1 for (_, m), _ in self.monomial)

    def total_source_order(self) -> int:
        return sum(m * e for (_, m), e in self.monomial)

    def factor_count(self) -> int:
        return sum(e for _, e in self.monomial)


@dataclass(frozen=True)
class VESystem:
    """Order-p variational equation: diagonal (or Jordan) linear part + forcing.

    The homogeneous part is shared with VE_1: zdd_i = -lambda_i phi^(k-2) z_i
    (plus Jordan couplings when present, recorded separately by the solver).
    """

    order: int
    dof: int
    k: int
    eigenvalues: Tuple[Scalar, ...]
    forcing: Tuple[ForcingTerm, ...]

    def __post_init__(self):
        if self.order == 1 and self.forcing:
            raise ValueError("VE_1 is homogeneous: forcing must be empty")
        for t in self.forcing:
            if t.total_source_order() != self.order:
                raise ValueError("forcing term weight must equal the system order")

    def is_simple_form(self) -> bool:
        return all(t.sources_first_order_only() for t in self.forcing)


def _canon_terms(terms: List[ForcingTerm]) -> Tuple[ForcingTerm, ...]:
    merged: Dict[Tuple[int, int, Monomial], Scalar] = {}
    for t in terms:
        key = (t.target, t.phi_power, t.monomial)
        merged[key] = merged.get(key, 0) + t.coefficient
    out = [
        ForcingTerm(target=k[0], coefficient=c, phi_power=k[1], monomial=k[2])
        for k, c in merged.items()
        if not scalar_is_zero(c)
    ]
    out.sort(key=lambda t: (t.target, t.phi_power, t.monomial))
    return tuple(out)


# ---------------------------------------------------------------------------
# Coupling tensors
# ---------------------------------------------------------------------------


class ForceTensors:
    """Cached derivative tensors of a force field at a point.

    value(j, beta) returns d^beta F_j(d); derivatives are built lazily one
    multi-index at a time so nothing beyond the requested order materializes.
    """

    def __init__(self, components: Sequence[RatFunc], point: Sequence[Scalar], tol: float = 0.0):
        self.components = list(components)
        self.point = list(point)
        self.tol = tol
        self.n = len(components)
        self._funcs: List[Dict[MultiIndex, RatFunc]] = [
            {tuple([0] * self.n): c} for c in components
        ]
        self._vals: Dict[Tuple[int, MultiIndex], Scalar] = {}

    def _func(self, j: int, beta: MultiIndex) -> RatFunc:
        cache = self._funcs[j]
        if beta in cache:
            return cache[beta]
        i = next(idx for idx, b in enumerate(beta) if b > 0)
        prev = list(beta)
        prev[i] -= 1
        res = self._func(j, tuple(prev)).diff(i)
        cache[beta] = res
        return res

    def value(self, j: int, beta: MultiIndex) -> Scalar:
        key = (j, beta)
        if key not in self._vals:
            self._vals[key] = self._func(j, beta).eval(self.point, self.tol)
        return self._vals[key]

    @classmethod
    def from_frame(cls, frame: EigenFrame) -> "ForceTensors":
        tol = frame.V.tol if frame.V.mode == "float" else 0.0
        return cls(frame.force_new, frame.d_new, tol)


@dataclass(frozen=True)
class ThetaTensor:
    """theta^i_{a,b} = D_{a,b} F_i(d), symmetric in (a, b)."""

    n: int
    entries: Dict[Tuple[int, MultiIndex], Scalar]

    def entry(self, i: int, a: int, b: int) -> Scalar:
        n = self.n
        beta = tuple(
            (1 if j == a else 0) + (1 if j == b else 0) for j in range(n)
        )
        return self.entries.get((i, beta), QC(0))


@dataclass(frozen=True)
class XiTensor:
    """xi^i_{a,b,c} = D_{a,b,c} F_i(d), fully symmetric in (a, b, c)."""

    n: int
    entries: Dict[Tuple[int, MultiIndex], Scalar]

    def entry(self, i: int, a: int, b: int, c: int) -> Scalar:
        n = self.n
        beta = [0] * n
        for x in (a, b, c):
            beta[x] += 1
        return self.entries.get((i, tuple(beta)), QC(0))


def coupling_theta(F: ForceField, d: Sequence[Scalar], tol: float = 0.0) -> ThetaTensor:
    """Second derivative tensor of the force at d (the VE_2 coupling)."""
    return ThetaTensor(n=F.n, entries=derivative_tensor(F, d, 2, tol))


def coupling_xi(F: ForceField, d: Sequence[Scalar], tol: float = 0.0) -> XiTensor:
    """Third derivative tensor of the force at d (the VE_3 cubic coupling)."""
    return XiTensor(n=F.n, entries=derivative_tensor(F, d, 3, tol))


# ---------------------------------------------------------------------------
# Chain construction
# ---------------------------------------------------------------------------


def build_ve_chain(frame: EigenFrame, p_max: int) -> List[VESystem]:
    """VE_1..VE_p_max in eigenframe coordinates, Taylor-coefficient scaling.

    The order-p forcing for target j collects, over s = 2..p and every
    multiset of (component, source_order) pairs of size s with total order p,
    the coefficient d^A F_j(d) / prod(multiplicities!), at phi-power k-1-s.
    """
    if p_max < 1:
        raise ValueError("p_max must be >= 1")
    n = frame.V.n
    k = frame.V.k
    tensors = ForceTensors.from_frame(frame)
    chain: List[VESystem] = [
        VESystem(order=1, dof=n, k=k, eigenvalues=frame.lam, forcing=())
    ]
    for p in range(2, p_max + 1):
        terms: List[ForcingTerm] = []
        pairs = [(a, m) for m in range(1, p) for a in range(n)]
        for s in range(2, p + 1):
            for combo in itertools.combinations_with_replacement(pairs, s):
                if sum(m for (_, m) in combo) != p:
                    continue
                counts = Counter(combo)
                beta = [0] * n
                for (a, _), e in counts.items():
                    beta[a] += e
                beta_t = tuple(beta)
                denom = 1
                for e in counts.values():
                    denom *= math.factorial(e)
                monomial: Monomial = tuple(sorted(counts.items()))
                for j in range(n):
                    val = tensors.value(j, beta_t)
                    if scalar_is_zero(val, tensors.tol):
                        continue
                    coeff = val * QC(Fraction(1, denom)) if isinstance(val, QC) else val / denom
                    terms.append(
                        ForcingTerm(
                            target=j,
                            coefficient=coeff,
                            phi_power=k - 1 - s,
                            monomial=monomial,
                        )
                    )
        chain.append(
            VESystem(order=p, dof=n, k=k, eigenvalues=frame.lam, forcing=_canon_terms(terms))
        )
    return chain


def xi_table(frame: EigenFrame, p: int) -> Dict[Tuple[int, MultiIndex], Scalar]:
    """Simple-form coefficients xi^j_alpha = d^alpha F_j(d)/alpha! at |alpha| = p."""
    tensors = ForceTensors.from_frame(frame)
    out: Dict[Tuple[int, MultiIndex], Scalar] = {}
    n = frame.V.n
    for j in range(n):
        for alpha in multi_indices(n, p):
            val = tensors.value(j, alpha)
            if scalar_is_zero(val, tensors.tol):
                continue
            out[(j, alpha)] = (
                val * QC(Fraction(1, mi_factorial(alpha)))
                if isinstance(val, QC)
                else val / mi_factorial(alpha)
            )
    return out


# ---------------------------------------------------------------------------
# Distinguished order-2 subsystems
# ---------------------------------------------------------------------------


def _chain_ve2_theta(chain: Sequence[VESystem], a: int, b: int, gamma: int) -> Scalar:
    """theta^gamma_{a,b} read back from the canonical chain (order-2 terms)."""
    if len(chain) < 2 or chain[1].order != 2:
        raise IndexOutOfRange("chain does not contain VE_2")
    n = chain[0].dof
    if not all(0 <= i < n for i in (a, b, gamma)):
        raise IndexOutOfRange("component index out of range")
    if a == b:
        mono: Monomial = (((a, 1), 2),)
        scale = 2  # chain carries theta/2 on the pure square
    else:
        mono = tuple(sorted((((a, 1), 1), ((b, 1), 1))))
        scale = 1  # chain carries theta on the cross term (1/2! * 2 orderings)
    for t in chain[1].forcing:
        if t.target == gamma and t.monomial == mono:
            return t.coefficient * scale
    return QC(0)


def extract_ve2_alpha(chain: Sequence[VESystem], alpha: int, gamma: int) -> VESystem:
    """The 2-equation subsystem VE_{2,alpha}^gamma:

    xdd = -lambda_alpha phi^(k-2) x,  zdd = -lambda_gamma phi^(k-2) z
                                            + phi^(k-3) theta^gamma_{alpha,alpha} x^2.
    """
    theta = _chain_ve2_theta(chain, alpha, alpha, gamma)
    lam = chain[0].eigenvalues
    k = chain[0].k
    forcing: Tuple[ForcingTerm, ...] = ()
    if not scalar_is_zero(theta):
        forcing = (
            ForcingTerm(target=1, coefficient=theta, phi_power=k - 3, monomial=(((0, 1), 2),)),
        )
    return VESystem(order=2, dof=2, k=k, eigenvalues=(lam[alpha], lam[gamma]), forcing=forcing)


def extract_ve2_ab(chain: Sequence[VESystem], alpha: int, beta: int, gamma: int) -> VESystem:
    """The 3-equation subsystem VE_{2,(alpha,beta)}^gamma with the full quadratic."""
    if alpha == beta:
        raise AlphaEqualsBeta("alpha and beta must differ")
    t_aa = _chain_ve2_theta(chain, alpha, alpha, gamma)
    t_bb = _chain_ve2_theta(chain, beta, beta, gamma)
    t_ab = _chain_ve2_theta(chain, alpha, beta, gamma)
    lam = chain[0].eigenvalues
    k = chain[0].k
    terms: List[ForcingTerm] = []
    if not scalar_is_zero(t_aa):
        terms.append(ForcingTerm(2, t_aa, k - 3, (((0, 1), 2),)))
    if not scalar_is_zero(t_ab):
        terms.append(ForcingTerm(2, t_ab * 2, k - 3, tuple(sorted((((0, 1), 1), ((1, 1), 1))))))
    if not scalar_is_zero(t_bb):
        terms.append(ForcingTerm(2, t_bb, k - 3, (((1, 1), 2),)))
    return VESystem(
        order=2,
        dof=3,
        k=k,
        eigenvalues=(lam[alpha], lam[beta], lam[gamma]),
        forcing=_canon_terms(terms),
    )


def extract_ex2(chain: Sequence[VESystem], alpha: int, beta: int, gamma: int) -> VESystem:
    """EX_{2,(alpha,beta)}^gamma: only the cross forcing 2 theta^gamma_{alpha,beta} x y.

    Not a subsystem of VE_{2,(alpha,beta)}^gamma; the pure-square terms are
    removed so that the three part systems compose by superposition.
    """
    if alpha == beta:
        raise AlphaEqualsBeta("alpha and beta must differ")
    t_ab = _chain_ve2_theta(chain, alpha, beta, gamma)
    lam = chain[0].eigenvalues
    k = chain[0].k
    forcing: Tuple[ForcingTerm, ...] = ()
    if not scalar_is_zero(t_ab):
        forcing = (
            ForcingTerm(2, t_ab * 2, k - 3, tuple(sorted((((0, 1), 1), ((1, 1), 1))))),
        )
    return VESystem(
        order=2,
        dof=3,
        k=k,
        eigenvalues=(lam[alpha], lam[beta], lam[gamma]),
        forcing=forcing,
    )


def ve2_parts_in_ab_frame(
    chain: Sequence[VESystem], alpha: int, beta: int, gamma: int
) -> Tuple[VESystem, List[VESystem]]:
    """The full (alpha,beta) subsystem and its three same-linear-part parts.

    All four systems share dof 3 and the eigenvalues (lam_a, lam_b, lam_g), so
    particular solutions of the parts superpose to one of the full system.
    """
    full = extract_ve2_ab(chain, alpha, beta, gamma)
    t_aa = _chain_ve2_theta(chain, alpha, alpha, gamma)
    t_bb = _chain_ve2_theta(chain, beta, beta, gamma)
    k = chain[0].k
    lam = full.eigenvalues
    part_a = VESystem(
        order=2, dof=3, k=k, eigenvalues=lam,
        forcing=(ForcingTerm(2, t_aa, k - 3, (((0, 1), 2),)),) if not scalar_is_zero(t_aa) else (),
    )
    part_b = VESystem(
        order=2, dof=3, k=k, eigenvalues=lam,
        forcing=(ForcingTerm(2, t_bb, k - 3, (((1, 1), 2),)),) if not scalar_is_zero(t_bb) else (),
    )
    part_x = extract_ex2(chain, alpha, beta, gamma)
    return full, [part_a, part_b, part_x]


# ---------------------------------------------------------------------------
# Superposition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemSolution:
    """A system together with one of its (particular) solutions."""

    system: VESystem
    values: Callable[[complex], Sequence[complex]]


def superpose(parts: Sequence[SystemSolution]) -> SystemSolution:
    """Sum of particular solutions solves the system with summed forcing.

    All inputs must share the linear part (dof, order, k, eigenvalues);
    otherwise LinearPartMismatch is raised.
    """
    if not parts:
        raise ValueError("superpose needs at least one input")
    head = parts[0].system
    for p in parts[1:]:
        s = p.system
        if (s.dof, s.order, s.k) != (head.dof, head.order, head.k) or s.eigenvalues != head.eigenvalues:
            raise LinearPartMismatch("systems do not share a linear part")
    forcing = _canon_terms([t for p in parts for t in p.system.forcing])
    system = VESystem(
        order=head.order, dof=head.dof, k=head.k, eigenvalues=head.eigenvalues, forcing=forcing
    )
    funcs = [p.values for p in parts]

    def summed(t: complex) -> Tuple[complex, ...]:
        vals = [f(t) for f in funcs]
        return tuple(sum(col) for col in zip(*vals))

    return SystemSolution(system=system, values=summed)
