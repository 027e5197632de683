"""Exact sparse multivariate calculus.

Multi-indices, sparse polynomials and ratios of polynomials over an exact
complex-rational scalar type, arbitrary-order partial derivatives, point
evaluation, and homogeneity checks.  Everything here is immutable after
construction and purely functional, so all operations are thread-safe.

Two arithmetic modes coexist:

* ``exact`` -- coefficients are :class:`QC` (pairs of ``Fraction``).  Exact
  arithmetic is closed: mixing a QC with a float raises instead of silently
  downgrading.
* ``float`` -- coefficients are Python ``complex``; comparisons go through a
  tolerance ``tol`` carried by the caller.

The canonical monomial order everywhere is graded lexicographic
(total degree first, then lexicographic on the exponent tuple).
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple, Union


class PoleAtPoint(ValueError):
    """Raised when a rational function is evaluated where its denominator vanishes."""


# ---------------------------------------------------------------------------
# Exact complex-rational scalars
# ---------------------------------------------------------------------------

_RatLike = Union[int, Fraction]


class QC:
    """A complex number with exact rational real and imaginary parts.

    Arithmetic never leaves the Gaussian rationals; any attempt to combine a
    QC with a float/complex raises ``TypeError`` (use :meth:`to_complex` for
    an explicit downgrade).
    """

    __slots__ = ("re", "im")

    def __init__(self, re: _RatLike = 0, im: _RatLike = 0):
        if isinstance(re, float) or isinstance(im, float):
            raise TypeError("QC takes exact rational parts, not floats")
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):  # immutability
        raise AttributeError("QC is immutable")

    # -- arithmetic --------------------------------------------------------
    @staticmethod
    def _coerce(x) -> "QC":
        if isinstance(x, QC):
            return x
        if isinstance(x, (int, Fraction)):
            return QC(x)
        raise TypeError(f"cannot coerce {type(x).__name__} into exact scalar")

    def __add__(self, other):
        o = QC._coerce(other)
        return QC(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = QC._coerce(other)
        return QC(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return QC._coerce(other) - self

    def __neg__(self):
        return QC(-self.re, -self.im)

    def __mul__(self, other):
        o = QC._coerce(other)
        return QC(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def inv(self) -> "QC":
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("division by exact zero")
        return QC(self.re / n, -self.im / n)

    def __truediv__(self, other):
        return self * QC._coerce(other).inv()

    def __rtruediv__(self, other):
        return QC._coerce(other) * self.inv()

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("QC powers must be integers")
        if k < 0:
            return self.inv() ** (-k)
        out = QC(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- predicates & conversions ------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = QC(other)
        if not isinstance(other, QC):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __bool__(self):
        return self.re != 0 or self.im != 0

    def conjugate(self) -> "QC":
        return QC(self.re, -self.im)

    def norm2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def is_real(self) -> bool:
        return self.im == 0

    def to_complex(self) -> complex:
        return complex(self.re) + 1j * complex(self.im)

    def __repr__(self):
        if self.im == 0:
            return f"QC({self.re})"
        return f"QC({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        sign = "+" if self.im >= 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


ZERO = QC(0)
ONE = QC(1)
I_UNIT = QC(0, 1)

Scalar = Union[QC, complex]


def scalar_is_zero(x: Scalar, tol: float = 0.0) -> bool:
    if isinstance(x, QC):
        return not bool(x)
    return abs(x) <= tol


def scalar_to_complex(x: Scalar) -> complex:
    return x.to_complex() if isinstance(x, QC) else complex(x)


def exact_sqrt_fraction(q: Fraction):
    """Square root of a non-negative rational, or None if it is irrational."""
    if q < 0:
        raise ValueError("exact_sqrt_fraction expects q >= 0")
    rn = math.isqrt(q.numerator)
    rd = math.isqrt(q.denominator)
    if rn * rn == q.numerator and rd * rd == q.denominator:
        return Fraction(rn, rd)
    return None


def exact_sqrt_qc(z: QC):
    """A Gaussian-rational square root of ``z``, or None if none exists in Q(i)."""
    if z.im == 0:
        if z.re >= 0:
            r = exact_sqrt_fraction(z.re)
            return None if r is None else QC(r)
        r = exact_sqrt_fraction(-z.re)
        return None if r is None else QC(0, r)
    # z = a+bi, w = x+yi with x^2 - y^2 = a, 2xy = b; |w|^2 = sqrt(|z|^2)
    n = exact_sqrt_fraction(z.norm2())
    if n is None:
        return None
    x2 = (z.re + n) / 2
    x = exact_sqrt_fraction(x2) if x2 >= 0 else None
    if x is None or x == 0:
        return None
    y = z.im / (2 * x)
    w = QC(x, y)
    return w if w * w == z else None


def nth_root_fraction(q: Fraction, m: int):
    """Exact real m-th root of a rational q (m >= 1), or None.

    For even m, q must be non-negative.  Used by Darboux-point rescaling.
    """
    if m == 1:
        return q
    neg = q < 0
    if neg and m % 2 == 0:
        return None
    a = abs(q)
    rn = round(a.numerator ** (1.0 / m))
    rd = round(a.denominator ** (1.0 / m))
    for n_c in (rn - 1, rn, rn + 1):
        for d_c in (rd - 1, rd, rd + 1):
            if n_c <= 0 or d_c <= 0:
                continue
            if Fraction(n_c**m, d_c**m) == a:
                r = Fraction(n_c, d_c)
                return -r if neg else r
    return None


# ---------------------------------------------------------------------------
# Multi-indices
# ---------------------------------------------------------------------------

MultiIndex = Tuple[int, ...]


def mi_order(alpha: MultiIndex) -> int:
    return sum(alpha)


def mi_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def mi_factorial(alpha: MultiIndex) -> int:
    out = 1
    for a in alpha:
        out *= math.factorial(a)
    return out


def mi_unit(n: int, i: int) -> MultiIndex:
    return tuple(1 if j == i else 0 for j in range(n))


def grlex_key(alpha: MultiIndex):
    """Sort key realizing the graded lexicographic order."""
    return (sum(alpha), alpha)


def multi_indices(n: int, order: int) -> Iterator[MultiIndex]:
    """All multi-indices of length n with |alpha| == order, in grlex order."""
    if n == 1:
        yield (order,)
        return
    for first in range(order + 1):
        for rest in multi_indices(n - 1, order - first):
            yield (first,) + rest


# ---------------------------------------------------------------------------
# Sparse polynomials
# ---------------------------------------------------------------------------


class Poly:
    """Sparse multivariate polynomial ``{exponent tuple -> coefficient}``."""

    __slots__ = ("n", "coeffs")

    def __init__(self, n: int, coeffs: Mapping[MultiIndex, Scalar] | None = None):
        self.n = n
        cleaned: Dict[MultiIndex, Scalar] = {}
        if coeffs:
            for mono, c in coeffs.items():
                if len(mono) != n:
                    raise ValueError("exponent tuple length mismatch")
                if any(e < 0 for e in mono):
                    raise ValueError("negative exponent in polynomial")
                if scalar_is_zero(c):
                    continue
                cleaned[tuple(mono)] = c
        self.coeffs = cleaned

    # -- constructors --------------------------------------------------------
    @classmethod
    def constant(cls, n: int, c: Scalar) -> "Poly":
        return cls(n, {tuple([0] * n): c})

    @classmethod
    def variable(cls, n: int, i: int) -> "Poly":
        return cls(n, {mi_unit(n, i): ONE})

    @classmethod
    def one(cls, n: int) -> "Poly":
        return cls.constant(n, ONE)

    # -- ring operations ------------------------------------------------------
    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.coeffs)
        for mono, c in other.coeffs.items():
            s = out.get(mono, 0) + c
            if scalar_is_zero(s):
                out.pop(mono, None)
            else:
                out[mono] = s
        return Poly(self.n, out)

    def __neg__(self) -> "Poly":
        return Poly(self.n, {m: -c for m, c in self.coeffs.items()})

    def __sub__(self, other: "Poly") -> "Poly":
        return self + (-other)

    def __mul__(self, other: "Poly") -> "Poly":
        out: Dict[MultiIndex, Scalar] = {}
        for m1, c1 in self.coeffs.items():
            for m2, c2 in other.coeffs.items():
                mono = mi_add(m1, m2)
                s = out.get(mono, 0) + c1 * c2
                if scalar_is_zero(s):
                    out.pop(mono, None)
                else:
                    out[mono] = s
        return Poly(self.n, out)

    def scale(self, c: Scalar) -> "Poly":
        if scalar_is_zero(c):
            return Poly(self.n)
        return Poly(self.n, {m: coeff * c for m, coeff in self.coeffs.items()})

    def __pow__(self, k: int) -> "Poly":
        if k < 0:
            raise ValueError("negative polynomial power")
        out = Poly.one(self.n)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    # -- calculus --------------------------------------------------------------
    def diff(self, i: int) -> "Poly":
        out: Dict[MultiIndex, Scalar] = {}
        for mono, c in self.coeffs.items():
            e = mono[i]
            if e == 0:
                continue
            new = list(mono)
            new[i] = e - 1
            out[tuple(new)] = c * e
        return Poly(self.n, out)

    def diff_multi(self, alpha: MultiIndex) -> "Poly":
        out = self
        for i, a in enumerate(alpha):
            for _ in range(a):
                out = out.diff(i)
        return out

    def eval(self, point: Sequence[Scalar]) -> Scalar:
        if len(point) != self.n:
            raise ValueError("point dimension mismatch")
        exact = all(isinstance(x, QC) for x in point) and all(
            isinstance(c, QC) for c in self.coeffs.values()
        )
        xs = list(point) if exact else [scalar_to_complex(x) for x in point]
        total: Scalar = ZERO if exact else 0j
        for mono, c in sorted(self.coeffs.items(), key=lambda kv: grlex_key(kv[0])):
            term = c if exact else scalar_to_complex(c)
            for x, e in zip(xs, mono):
                if e:
                    term = term * x**e
            total = total + term
        return total

    def substitute_linear(self, mat: Sequence[Sequence[Scalar]]) -> "Poly":
        """Compose with a linear map: q_i -> sum_j mat[i][j] * x_j."""
        n = self.n
        images = []
        for i in range(n):
            row = {mi_unit(n, j): mat[i][j] for j in range(n) if not scalar_is_zero(mat[i][j])}
            images.append(Poly(n, row))
        out = Poly(n)
        for mono, c in self.coeffs.items():
            term = Poly.constant(n, c)
            for i, e in enumerate(mono):
                if e:
                    term = term * (images[i] ** e)
            out = out + term
        return out

    # -- structure ----------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        if not self.coeffs:
            return -1
        return max(mi_order(m) for m in self.coeffs)

    def homogeneous_degree(self):
        """The common total degree of all monomials, or None if inhomogeneous."""
        degs = {mi_order(m) for m in self.coeffs}
        if len(degs) > 1:
            return None
        return degs.pop() if degs else 0

    def items_grlex(self) -> List[Tuple[MultiIndex, Scalar]]:
        return sorted(self.coeffs.items(), key=lambda kv: grlex_key(kv[0]))

    def content(self) -> Fraction:
        """Positive rational content of the coefficient list (exact mode only)."""
        nums: List[int] = []
        dens: List[int] = []
        for c in self.coeffs.values():
            if not isinstance(c, QC):
                return Fraction(1)
            for part in (c.re, c.im):
                if part != 0:
                    nums.append(abs(part.numerator))
                    dens.append(part.denominator)
        if not nums:
            return Fraction(1)
        g = 0
        for v in nums:
            g = math.gcd(g, v)
        l = 1
        for v in dens:
            l = l * v // math.gcd(l, v)
        return Fraction(g, l)

    def monomial_gcd(self) -> MultiIndex:
        if not self.coeffs:
            return tuple([0] * self.n)
        mins = [min(m[i] for m in self.coeffs) for i in range(self.n)]
        return tuple(mins)

    def shift_down(self, gcd_mono: MultiIndex) -> "Poly":
        return Poly(
            self.n,
            {tuple(e - g for e, g in zip(m, gcd_mono)): c for m, c in self.coeffs.items()},
        )

    def __eq__(self, other):
        return isinstance(other, Poly) and self.n == other.n and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, frozenset(self.coeffs.items())))

    def __repr__(self):
        if not self.coeffs:
            return "Poly(0)"
        parts = [f"({c})*q^{m}" for m, c in self.items_grlex()]
        return " + ".join(parts)


# ---------------------------------------------------------------------------
# Ratios of polynomials
# ---------------------------------------------------------------------------


class RatFunc:
    """A ratio of polynomials reduced by content only.

    Reduction divides numerator and denominator by their common monomial
    factor and rational content, and normalizes the denominator's grlex
    leading coefficient to 1.  No multivariate gcd is attempted; equality
    testing goes through cross-multiplication.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Poly, den: Poly | None = None):
        if den is None:
            den = Poly.one(num.n)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator polynomial")
        num, den = self._reduce(num, den)
        self.num = num
        self.den = den

    @staticmethod
    def _reduce(num: Poly, den: Poly) -> Tuple[Poly, Poly]:
        if num.is_zero():
            return Poly(num.n), Poly.one(num.n)
        g = tuple(min(a, b) for a, b in zip(num.monomial_gcd(), den.monomial_gcd()))
        if any(g):
            num = num.shift_down(g)
            den = den.shift_down(g)
        lead = den.items_grlex()[-1][1]
        inv = lead.inv() if isinstance(lead, QC) else 1.0 / lead
        return num.scale(inv), den.scale(inv)

    @classmethod
    def from_const(cls, n: int, c: Scalar) -> "RatFunc":
        return cls(Poly.constant(n, c))

    @property
    def n(self) -> int:
        return self.num.n

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, other: "RatFunc") -> "RatFunc":
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    def __neg__(self) -> "RatFunc":
        return RatFunc(-self.num, self.den)

    def __sub__(self, other: "RatFunc") -> "RatFunc":
        return self + (-other)

    def __mul__(self, other: "RatFunc") -> "RatFunc":
        return RatFunc(self.num * other.num, self.den * other.den)

    def __truediv__(self, other: "RatFunc") -> "RatFunc":
        if other.is_zero():
            raise ZeroDivisionError("division by zero rational function")
        return RatFunc(self.num * other.den, self.den * other.num)

    def scale(self, c: Scalar) -> "RatFunc":
        return RatFunc(self.num.scale(c), self.den)

    def diff(self, i: int) -> "RatFunc":
        # (n/d)' = (n' d - n d') / d^2; content reduction keeps growth in check
        dn = self.num.diff(i)
        dd = self.den.diff(i)
        if dd.is_zero():
            return RatFunc(dn, self.den)
        return RatFunc(dn * self.den - self.num * dd, self.den * self.den)

    def diff_multi(self, alpha: MultiIndex) -> "RatFunc":
        out = self
        for i, a in enumerate(alpha):
            for _ in range(a):
                out = out.diff(i)
        return out

    def eval(self, point: Sequence[Scalar], tol: float = 0.0) -> Scalar:
        d = self.den.eval(point)
        if scalar_is_zero(d, tol):
            raise PoleAtPoint(f"denominator vanishes at {point}")
        n = self.num.eval(point)
        if isinstance(n, QC) and isinstance(d, QC):
            return n / d
        return scalar_to_complex(n) / scalar_to_complex(d)

    def substitute_linear(self, mat: Sequence[Sequence[Scalar]]) -> "RatFunc":
        return RatFunc(self.num.substitute_linear(mat), self.den.substitute_linear(mat))

    def equals(self, other: "RatFunc") -> bool:
        """Equality via cross-multiplication (no gcd needed)."""
        return (self.num * other.den - other.num * self.den).is_zero()

    def homogeneous_degree(self):
        dn = self.num.homogeneous_degree()
        dd = self.den.homogeneous_degree()
        if dn is None or dd is None:
            return None
        if self.num.is_zero():
            return 0
        return dn - dd

    def __repr__(self):
        if self.den == Poly.one(self.n):
            return f"RatFunc({self.num!r})"
        return f"RatFunc(({self.num!r}) / ({self.den!r}))"


# ---------------------------------------------------------------------------
# Homogeneous potentials and force fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomogeneousPotential:
    """A homogeneous potential V = numerator/denominator of degree k.

    Invariant: numerator and denominator are each homogeneous and
    deg(num) - deg(den) == k, which makes Euler's identity
    q . grad V = k V hold identically.
    """

    n: int
    k: int
    num: Poly
    den: Poly
    mode: str = "exact"  # "exact" | "float"
    tol: float = 1e-9

    def __post_init__(self):
        # The declared-k consistency (deg num - deg den == k) is deliberately
        # left to euler_check so that a mis-declared degree is reportable.
        if self.k == 0:
            raise ValueError("homogeneity degree k must be a nonzero integer")
        if self.num.homogeneous_degree() is None or self.den.homogeneous_degree() is None:
            raise ValueError("numerator and denominator must each be homogeneous")
        if self.den.is_zero():
            raise ZeroDivisionError("zero denominator polynomial")

    def degree_consistent(self) -> bool:
        if self.num.is_zero():
            return True
        return self.num.homogeneous_degree() - self.den.homogeneous_degree() == self.k

    @classmethod
    def from_terms(
        cls,
        n: int,
        k: int,
        num_terms: Mapping[MultiIndex, Scalar],
        den_terms: Mapping[MultiIndex, Scalar] | None = None,
        mode: str = "exact",
        tol: float = 1e-9,
    ) -> "HomogeneousPotential":
        num = Poly(n, num_terms)
        den = Poly(n, den_terms) if den_terms else Poly.one(n)
        return cls(n=n, k=k, num=num, den=den, mode=mode, tol=tol)

    def as_ratfunc(self) -> RatFunc:
        return RatFunc(self.num, self.den)

    def gradient(self) -> List[RatFunc]:
        f = self.as_ratfunc()
        return [f.diff(i) for i in range(self.n)]

    def force(self) -> "ForceField":
        return ForceField(
            n=self.n, k=self.k, components=tuple(-g for g in self.gradient())
        )

    def eval(self, point: Sequence[Scalar]) -> Scalar:
        return self.as_ratfunc().eval(point, self.tol if self.mode == "float" else 0.0)

    def substitute_linear(self, mat) -> "HomogeneousPotential":
        f = self.as_ratfunc().substitute_linear(mat)
        return HomogeneousPotential(
            n=self.n, k=self.k, num=f.num, den=f.den, mode=self.mode, tol=self.tol
        )

    def scale(self, c: Scalar) -> "HomogeneousPotential":
        return HomogeneousPotential(
            n=self.n, k=self.k, num=self.num.scale(c), den=self.den, mode=self.mode, tol=self.tol
        )


@dataclass(frozen=True)
class ForceField:
    """F = -grad V, component-wise homogeneous of degree k-1."""

    n: int
    k: int
    components: Tuple[RatFunc, ...]

    def eval(self, point: Sequence[Scalar], tol: float = 0.0) -> List[Scalar]:
        return [f.eval(point, tol) for f in self.components]


# ---------------------------------------------------------------------------
# Module operations
# ---------------------------------------------------------------------------


def partial_derivative(f: Union[RatFunc, Poly], alpha: MultiIndex) -> Union[RatFunc, Poly]:
    """The mixed partial derivative of ``f`` of multi-order ``alpha``."""
    return f.diff_multi(alpha)


def evaluate(f: Union[RatFunc, Poly], point: Sequence[Scalar], tol: float = 0.0) -> Scalar:
    """Evaluate a polynomial or rational function; raises PoleAtPoint on poles."""
    if isinstance(f, Poly):
        return f.eval(point)
    return f.eval(point, tol)


def derivative_tensor(
    F: ForceField, d: Sequence[Scalar], s: int, tol: float = 0.0
) -> Dict[Tuple[int, MultiIndex], Scalar]:
    """The symmetric order-s derivative tensor of F at d.

    Returned as ``{(i, alpha): d^alpha F_i(d)}`` over all |alpha| == s, which
    is the compressed symmetric storage (the tensor entry for component i and
    directions (a_1..a_s) is the value at alpha = sum eps_{a_j}).
    """
    if s < 1:
        raise ValueError("tensor order must be >= 1")
    out: Dict[Tuple[int, MultiIndex], Scalar] = {}
    for i, comp in enumerate(F.components):
        cache: Dict[MultiIndex, RatFunc] = {tuple([0] * F.n): comp}

        def deriv(alpha: MultiIndex) -> RatFunc:
            if alpha in cache:
                return cache[alpha]
            j = next(idx for idx, a in enumerate(alpha) if a > 0)
            prev = list(alpha)
            prev[j] -= 1
            res = deriv(tuple(prev)).diff(j)
            cache[alpha] = res
            return res

        for alpha in multi_indices(F.n, s):
            out[(i, alpha)] = deriv(alpha).eval(d, tol)
    return out


def euler_check(V: HomogeneousPotential, samples: Iterable[Sequence[Scalar]]) -> bool:
    """True iff q . grad V(q) - k V(q) vanishes at each sample point."""
    grad = V.gradient()
    v = V.as_ratfunc()
    tol = V.tol if V.mode == "float" else 0.0
    for q in samples:
        lhs = None
        for qi, gi in zip(q, grad):
            term = qi * gi.eval(q, tol)
            lhs = term if lhs is None else lhs + term
        diff = lhs - v.eval(q, tol) * V.k
        if isinstance(diff, QC):
            if bool(diff):
                return False
        elif abs(diff) > V.tol:
            return False
    return True


def random_rational_points(
    n: int, count: int, seed: int = 0, avoid: Callable[[Sequence[Scalar]], bool] | None = None
) -> List[Tuple[QC, ...]]:
    """Deterministic small-rational sample points, skipping those where avoid() is true."""
    rng = random.Random(seed)
    out: List[Tuple[QC, ...]] = []
    attempts = 0
    while len(out) < count and attempts < 200 * count:
        attempts += 1
        pt = tuple(QC(Fraction(rng.randint(-9, 9), rng.randint(1, 5))) for _ in range(n))
        if all(not bool(x) for x in pt):
            continue
        if avoid is not None and avoid(pt):
            continue
        out.append(pt)
    if len(out) < count:
        raise RuntimeError("could not generate enough sample points")
    return out
